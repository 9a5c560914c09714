//! P1 Lagrangian interface meshes in two and three dimensions.
//!
//! In 2D an element is a segment `[a, b]`; in 3D a triangle `[a, b, c]`. Local
//! coordinates are barycentric, so the P1 basis values on an element are the
//! local coordinates themselves.
//!
//! Normal orientation follows the winding. With [`Winding::Ccw`] the 2D normal
//! is the travel direction rotated clockwise by 90 degrees (outward for a
//! counter-clockwise closed curve) and the 3D normal is `(b - a) x (c - a)`.
//! [`Winding::Cw`] flips both.

pub mod generators;
pub mod io;
mod mass;
pub mod quadrature;

pub use mass::{MassMatrix, SparseSym};

use crate::error::{Error, Result};
use crate::vector::{self, cross, sub};

/// Barycentric coordinate tolerance for accepting a local coordinate.
const LOCAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winding {
    Ccw,
    Cw,
}

impl Winding {
    fn sign(self) -> f64 {
        match self {
            Winding::Ccw => 1.0,
            Winding::Cw => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry<const D: usize> {
    pub centroid: [f64; D],
    pub measure: f64,
    pub normal: [f64; D],
}

#[derive(Clone, Debug)]
pub struct InterfaceMesh<const D: usize> {
    reference: Vec<[f64; D]>,
    elements: Vec<[usize; D]>,
    current: Vec<[f64; D]>,
    winding: Winding,
    vertex_elements: Vec<Vec<usize>>,
}

pub type Mesh2 = InterfaceMesh<2>;
pub type Mesh3 = InterfaceMesh<3>;

/// Normal of the simplex scaled by its measure (length or area).
pub(crate) fn area_normal<const D: usize>(p: &[[f64; D]; D]) -> [f64; D] {
    let mut n = [0.0; D];
    match D {
        2 => {
            n[0] = p[1][1] - p[0][1];
            n[1] = -(p[1][0] - p[0][0]);
        }
        3 => {
            let a = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
            let b = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
            let c = cross(&a, &b);
            for k in 0..3 {
                n[k] = 0.5 * c[k];
            }
        }
        _ => unreachable!("interface meshes are 2D or 3D"),
    }
    n
}

impl<const D: usize> InterfaceMesh<D> {
    /// Builds a mesh whose current configuration equals the reference one.
    ///
    /// Fails on out-of-range or repeated vertex indices, zero-measure elements,
    /// non-manifold or inconsistently wound connectivity, and closed 2D curves
    /// whose signed area contradicts `winding`.
    pub fn new(reference: Vec<[f64; D]>, elements: Vec<[usize; D]>, winding: Winding) -> Result<Self> {
        assert!(D == 2 || D == 3, "interface meshes are 2D or 3D");
        let nv = reference.len();
        let mut vertex_elements = vec![Vec::new(); nv];
        for (e, el) in elements.iter().enumerate() {
            for (a, &v) in el.iter().enumerate() {
                if v >= nv {
                    return Err(Error::Mesh(format!("element {e} references vertex {v} of {nv}")));
                }
                if el[..a].contains(&v) {
                    return Err(Error::DegenerateElement(e));
                }
                vertex_elements[v].push(e);
            }
        }
        let mesh = Self {
            current: reference.clone(),
            reference,
            elements,
            winding,
            vertex_elements,
        };
        for e in 0..mesh.elements.len() {
            mesh.element_geometry(e, false)?;
        }
        mesh.check_orientation()?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.reference.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn winding(&self) -> Winding {
        self.winding
    }

    pub fn reference(&self) -> &[[f64; D]] {
        &self.reference
    }

    pub fn current(&self) -> &[[f64; D]] {
        &self.current
    }

    pub fn elements(&self) -> &[[usize; D]] {
        &self.elements
    }

    /// Elements sharing vertex `v`.
    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn element(&self, e: usize) -> Result<&[usize; D]> {
        self.elements.get(e).ok_or(Error::ElementOutOfRange {
            index: e,
            count: self.elements.len(),
        })
    }

    /// Replaces the current configuration.
    pub fn set_current(&mut self, current: Vec<[f64; D]>) -> Result<()> {
        if current.len() != self.reference.len() {
            return Err(Error::ShapeMismatch(format!(
                "configuration has {} vertices, mesh has {}",
                current.len(),
                self.reference.len()
            )));
        }
        self.current = current;
        Ok(())
    }

    pub fn current_mut(&mut self) -> &mut [[f64; D]] {
        &mut self.current
    }

    fn vertices(&self, use_current: bool) -> &[[f64; D]] {
        if use_current {
            &self.current
        } else {
            &self.reference
        }
    }

    /// Corner coordinates of element `e`.
    pub fn element_points(&self, e: usize, use_current: bool) -> Result<[[f64; D]; D]> {
        let el = self.element(e)?;
        let x = self.vertices(use_current);
        Ok(std::array::from_fn(|a| x[el[a]]))
    }

    /// P1 basis values of the element's nodes at `local`.
    pub fn basis_eval(&self, e: usize, local: &[f64; D]) -> Result<[f64; D]> {
        self.element(e)?;
        check_local(local)?;
        Ok(*local)
    }

    /// Position `sum_j chi_j psi_j(local)` in the current configuration.
    pub fn eval_configuration(&self, e: usize, local: &[f64; D]) -> Result<[f64; D]> {
        let psi = self.basis_eval(e, local)?;
        let p = self.element_points(e, true)?;
        Ok(combine(&p, &psi))
    }

    /// Same as [`eval_configuration`](Self::eval_configuration) on the reference configuration.
    pub fn eval_reference(&self, e: usize, local: &[f64; D]) -> Result<[f64; D]> {
        let psi = self.basis_eval(e, local)?;
        let p = self.element_points(e, false)?;
        Ok(combine(&p, &psi))
    }

    pub fn element_geometry(&self, e: usize, use_current: bool) -> Result<ElementGeometry<D>> {
        let p = self.element_points(e, use_current)?;
        let an = area_normal(&p);
        let measure = vector::norm(&an);
        let scale_ref = p.iter().map(vector::norm).fold(1.0, f64::max);
        if !(measure > 1e-14 * scale_ref.powi(D as i32 - 1)) {
            return Err(Error::DegenerateElement(e));
        }
        Ok(ElementGeometry {
            centroid: vector::mean(&p),
            measure,
            normal: vector::scale(&an, self.winding.sign() / measure),
        })
    }

    /// Total measure of the reference configuration.
    pub fn reference_measure(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_geometry(e, false).map(|g| g.measure).unwrap_or(0.0))
            .sum()
    }

    /// True when every vertex belongs to exactly two elements (2D) or every
    /// edge to exactly two triangles (3D).
    pub fn is_closed(&self) -> bool {
        match D {
            2 => self.vertex_elements.iter().all(|v| v.len() == 2),
            _ => self.edge_uses().values().all(|u| u.len() == 2),
        }
    }

    fn edge_uses(&self) -> std::collections::BTreeMap<(usize, usize), Vec<(usize, bool)>> {
        let mut edges: std::collections::BTreeMap<(usize, usize), Vec<(usize, bool)>> = Default::default();
        for (e, el) in self.elements.iter().enumerate() {
            for a in 0..D {
                let (i, j) = (el[a], el[(a + 1) % D]);
                let key = (i.min(j), i.max(j));
                edges.entry(key).or_default().push((e, i < j));
            }
        }
        edges
    }

    fn check_orientation(&self) -> Result<()> {
        if D == 2 {
            for (v, adj) in self.vertex_elements.iter().enumerate() {
                match adj.len() {
                    0 | 1 => {}
                    2 => {
                        let starts = adj.iter().filter(|&&e| self.elements[e][0] == v).count();
                        if starts != 1 {
                            return Err(Error::Orientation(format!(
                                "vertex {v} is the {} of both adjacent segments",
                                if starts == 2 { "start" } else { "end" }
                            )));
                        }
                    }
                    n => return Err(Error::Mesh(format!("vertex {v} belongs to {n} segments"))),
                }
            }
            for (k, lp) in self.closed_loops().iter().enumerate() {
                let area: f64 = lp
                    .iter()
                    .map(|&e| {
                        let [a, b] = [self.elements[e][0], self.elements[e][1]];
                        let (pa, pb) = (self.reference[a], self.reference[b]);
                        0.5 * (pa[0] * pb[1] - pb[0] * pa[1])
                    })
                    .sum();
                if area * self.winding.sign() <= 0.0 {
                    return Err(Error::Orientation(format!(
                        "closed curve {k} has signed area {area:e}, inconsistent with {:?} winding",
                        self.winding
                    )));
                }
            }
        } else {
            for ((i, j), uses) in self.edge_uses() {
                match uses.as_slice() {
                    [_] => {}
                    [(_, d0), (_, d1)] => {
                        if d0 == d1 {
                            return Err(Error::Orientation(format!(
                                "edge ({i}, {j}) is traversed in the same direction by both triangles"
                            )));
                        }
                    }
                    u => {
                        return Err(Error::Mesh(format!("edge ({i}, {j}) is shared by {} triangles", u.len())));
                    }
                }
            }
        }
        Ok(())
    }

    /// Element lists of the closed loops of a 2D polyline mesh, in traversal order.
    fn closed_loops(&self) -> Vec<Vec<usize>> {
        let ne = self.elements.len();
        let mut next = vec![usize::MAX; ne];
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(&f) = self.vertex_elements[el[1]].iter().find(|&&f| f != e && self.elements[f][0] == el[1]) {
                next[e] = f;
            }
        }
        let mut seen = vec![false; ne];
        let mut loops = Vec::new();
        for start in 0..ne {
            if seen[start] {
                continue;
            }
            let mut lp = vec![start];
            seen[start] = true;
            let mut e = next[start];
            let mut closed = false;
            while e != usize::MAX {
                if e == start {
                    closed = true;
                    break;
                }
                if seen[e] {
                    break;
                }
                seen[e] = true;
                lp.push(e);
                e = next[e];
            }
            if closed {
                loops.push(lp);
            }
        }
        loops
    }

    /// Consistent mass matrix on the reference configuration.
    pub fn assemble_mass_matrix(&self) -> Result<MassMatrix> {
        MassMatrix::assemble(self)
    }
}

fn check_local<const D: usize>(local: &[f64; D]) -> Result<()> {
    let sum: f64 = local.iter().sum();
    if local.iter().any(|&l| !(-LOCAL_TOL..=1.0 + LOCAL_TOL).contains(&l)) || (sum - 1.0).abs() > LOCAL_TOL {
        return Err(Error::InvalidLocalCoord(local.to_vec()));
    }
    Ok(())
}

pub(crate) fn combine<const D: usize>(p: &[[f64; D]; D], psi: &[f64; D]) -> [f64; D] {
    let mut x = [0.0; D];
    for a in 0..D {
        for k in 0..D {
            x[k] += psi[a] * p[a][k];
        }
    }
    x
}

/// Barycentric coordinate of parameter `s` along a segment.
pub fn segment_coord(s: f64) -> [f64; 2] {
    [1.0 - s, s]
}

/// Closest point on segment `[a, b]` to `x`, as `(parameter, point)`.
pub fn closest_on_segment(a: &[f64; 2], b: &[f64; 2], x: &[f64; 2]) -> (f64, [f64; 2]) {
    let t = sub(b, a);
    let len2 = vector::dot(&t, &t);
    let s = (vector::dot(&sub(x, a), &t) / len2).clamp(0.0, 1.0);
    (s, vector::axpy(a, s, &t))
}
