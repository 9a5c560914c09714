//! Flat, inverse-centroid-weighted (ICW) and L2-projected surface normals.
//!
//! Flat normals are one unit vector per element. ICW and projected normals are
//! unit nodal vectors; the continuous field on an element is the normalized P1
//! interpolant of its nodal normals.

use crate::error::{Error, Result};
use crate::surface_mesh::quadrature::{self, Rule};
use crate::surface_mesh::{InterfaceMesh, MassMatrix};
use crate::vector::{self, dot, sub};

/// Norm below which a reconstructed normal is treated as a fold-over.
pub const NORMAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalKind {
    Flat,
    Icw,
    Projected,
}

impl NormalKind {
    pub const ALL: [NormalKind; 3] = [NormalKind::Flat, NormalKind::Icw, NormalKind::Projected];

    pub fn name(self) -> &'static str {
        match self {
            NormalKind::Flat => "flat",
            NormalKind::Icw => "icw",
            NormalKind::Projected => "projected",
        }
    }
}

impl std::str::FromStr for NormalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(NormalKind::Flat),
            "icw" => Ok(NormalKind::Icw),
            "projected" => Ok(NormalKind::Projected),
            _ => Err(Error::Config(format!("unknown normal method {s:?} (flat, icw, projected)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormalField<const D: usize> {
    kind: NormalKind,
    element_normals: Vec<[f64; D]>,
    nodal_normals: Vec<[f64; D]>,
}

fn unit<const D: usize>(v: &[f64; D], location: impl FnOnce() -> String) -> Result<[f64; D]> {
    vector::normalize(v, NORMAL_TOL).ok_or_else(|| Error::DegenerateNormal {
        location: location(),
        norm: vector::norm(v),
    })
}

fn flat_normals<const D: usize>(mesh: &InterfaceMesh<D>) -> Result<Vec<[f64; D]>> {
    (0..mesh.n_elements())
        .map(|e| mesh.element_geometry(e, true).map(|g| g.normal))
        .collect()
}

impl<const D: usize> NormalField<D> {
    /// Element normals of the current configuration.
    pub fn compute_flat(mesh: &InterfaceMesh<D>) -> Result<Self> {
        Ok(Self {
            kind: NormalKind::Flat,
            element_normals: flat_normals(mesh)?,
            nodal_normals: Vec::new(),
        })
    }

    /// `n_i = normalize(sum_j n_j / |X_i - X_j^C|)` over elements adjacent to vertex `i`.
    pub fn compute_icw(mesh: &InterfaceMesh<D>) -> Result<Self> {
        let mut geo = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            geo.push(mesh.element_geometry(e, true)?);
        }
        let x = mesh.current();
        let mut nodal = Vec::with_capacity(mesh.n_vertices());
        for i in 0..mesh.n_vertices() {
            let adj = mesh.vertex_elements(i);
            if adj.is_empty() {
                return Err(Error::Geometry(format!("vertex {i} has no adjacent element")));
            }
            let mut s = [0.0; D];
            for &e in adj {
                let ell = vector::dist(&x[i], &geo[e].centroid);
                if !(ell > 0.0) {
                    return Err(Error::Geometry(format!("vertex {i} coincides with the centroid of element {e}")));
                }
                s = vector::axpy(&s, 1.0 / ell, &geo[e].normal);
            }
            nodal.push(unit(&s, || format!("vertex {i}"))?);
        }
        Ok(Self {
            kind: NormalKind::Icw,
            element_normals: geo.iter().map(|g| g.normal).collect(),
            nodal_normals: nodal,
        })
    }

    /// Componentwise L2 projection of the flat normals into P1, then normalized at the nodes.
    pub fn compute_projected(mesh: &InterfaceMesh<D>, mass: &MassMatrix) -> Result<Self> {
        let flat = flat_normals(mesh)?;
        let mut rhs = vec![vec![0.0; mesh.n_vertices()]; D];
        for (e, el) in mesh.elements().iter().enumerate() {
            // int psi_a dA = |e| / D on a simplex with D nodes.
            let w = mesh.element_geometry(e, false)?.measure / D as f64;
            for &v in el {
                for k in 0..D {
                    rhs[k][v] += w * flat[e][k];
                }
            }
        }
        let comps: Vec<Vec<f64>> = rhs.iter().map(|b| mass.solve(b)).collect::<Result<_>>()?;
        let nodal = (0..mesh.n_vertices())
            .map(|i| unit(&std::array::from_fn(|k| comps[k][i]), || format!("vertex {i}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: NormalKind::Projected,
            element_normals: flat,
            nodal_normals: nodal,
        })
    }

    /// `mass` is only consulted for [`NormalKind::Projected`].
    pub fn compute(kind: NormalKind, mesh: &InterfaceMesh<D>, mass: &MassMatrix) -> Result<Self> {
        match kind {
            NormalKind::Flat => Self::compute_flat(mesh),
            NormalKind::Icw => Self::compute_icw(mesh),
            NormalKind::Projected => Self::compute_projected(mesh, mass),
        }
    }

    pub fn kind(&self) -> NormalKind {
        self.kind
    }

    pub fn element_normals(&self) -> &[[f64; D]] {
        &self.element_normals
    }

    /// Empty for flat fields.
    pub fn nodal_normals(&self) -> &[[f64; D]] {
        &self.nodal_normals
    }

    /// Continuous normal at `local` on element `e` (the element normal for flat fields).
    pub fn eval_normal(&self, mesh: &InterfaceMesh<D>, e: usize, local: &[f64; D]) -> Result<[f64; D]> {
        let psi = mesh.basis_eval(e, local)?;
        if self.kind == NormalKind::Flat {
            return Ok(self.element_normals[e]);
        }
        let el = mesh.element(e)?;
        let mut s = [0.0; D];
        for a in 0..D {
            s = vector::axpy(&s, psi[a], &self.nodal_normals[el[a]]);
        }
        unit(&s, || format!("element {e}, local {local:?}"))
    }
}

/// Analytic surfaces with known outward normals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticShape {
    Circle { center: [f64; 2] },
    Ellipse { center: [f64; 2], a: f64, b: f64 },
    Sphere { center: [f64; 3] },
    /// Infinite cylinder with axis parallel to x through `(0, y, z)`.
    Cylinder { axis: [f64; 2] },
}

impl AnalyticShape {
    /// Outward unit normal at the closest-surface direction of `x`.
    pub fn normal<const D: usize>(&self, x: &[f64; D]) -> [f64; D] {
        let mut v = [0.0; D];
        match *self {
            AnalyticShape::Circle { center } => {
                for k in 0..2 {
                    v[k] = x[k] - center[k];
                }
            }
            AnalyticShape::Ellipse { center, a, b } => {
                v[0] = (x[0] - center[0]) / (a * a);
                v[1] = (x[1] - center[1]) / (b * b);
            }
            AnalyticShape::Sphere { center } => {
                for k in 0..3 {
                    v[k] = x[k] - center[k];
                }
            }
            AnalyticShape::Cylinder { axis } => {
                v[1] = x[1] - axis[0];
                v[2] = x[2] - axis[1];
            }
        }
        vector::normalize(&v, 0.0).unwrap_or(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticShape::Circle { .. } | AnalyticShape::Ellipse { .. } => 2,
            _ => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyReport {
    pub max_error: f64,
    pub mean_error: f64,
    pub samples: usize,
}

/// Errors `1 - n_h . n_exact` sampled at element vertices and Gauss points.
pub fn normal_accuracy_report<const D: usize>(
    mesh: &InterfaceMesh<D>,
    field: &NormalField<D>,
    analytic: impl Fn(&[f64; D]) -> [f64; D],
) -> Result<AccuracyReport> {
    let mut pts: Vec<[f64; D]> = (0..D).map(|a| std::array::from_fn(|b| if a == b { 1.0 } else { 0.0 })).collect();
    pts.extend(quadrature::rule::<D>(Rule::Quartic).into_iter().map(|q| q.local));
    let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for e in 0..mesh.n_elements() {
        for l in &pts {
            let x = mesh.eval_configuration(e, l)?;
            let err = 1.0 - dot(&field.eval_normal(mesh, e, l)?, &analytic(&x));
            max = max.max(err);
            sum += err;
            count += 1;
        }
    }
    Ok(AccuracyReport {
        max_error: max,
        mean_error: sum / count as f64,
        samples: count,
    })
}

/// Largest angle (radians) between nodal normals and the analytic normal at the vertices.
pub fn max_nodal_angle<const D: usize>(
    mesh: &InterfaceMesh<D>,
    field: &NormalField<D>,
    analytic: impl Fn(&[f64; D]) -> [f64; D],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for e in 0..mesh.n_elements() {
        for (a, &v) in mesh.element(e)?.iter().enumerate() {
            let l = std::array::from_fn(|b| if a == b { 1.0 } else { 0.0 });
            let n = field.eval_normal(mesh, e, &l)?;
            let c = dot(&n, &analytic(&mesh.current()[v])).clamp(-1.0, 1.0);
            let s = vector::norm(&sub(&n, &vector::scale(&analytic(&mesh.current()[v]), c)));
            worst = worst.max(s.atan2(c));
        }
    }
    Ok(worst)
}
