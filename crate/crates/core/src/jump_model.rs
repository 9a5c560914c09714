//! Penalty forces and L2-projected jump conditions.
//!
//! `F` is the force density exerted on the fluid. The stored coefficients are
//! `P_h(F_n)` and `P_h(F_tau,c n_k)`; use sites apply
//! `[[p]] = P_h(F_n)` and `mu [[du_c/dx_k]] = -P_h(F_tau,c n_k)` with
//! `[[.]]` the exterior value minus the interior value.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::normal_fields::{NormalField, NormalKind};
use crate::surface_mesh::quadrature::{self, Rule};
use crate::surface_mesh::{combine, InterfaceMesh, MassMatrix};
use crate::vector::{self, dot};

/// Inverse area dilation of the interface. Only stationary configurations are modeled.
pub const J_INV: f64 = 1.0;

pub type MotionFn<const D: usize> = Arc<dyn Fn(&[f64; D], f64) -> [f64; D] + Send + Sync>;

#[derive(Clone)]
pub struct PenaltyParams<const D: usize> {
    pub kappa: f64,
    pub eta: f64,
    /// Prescribed configuration `xi(X, t)`.
    pub target: MotionFn<D>,
    /// Prescribed velocity `V(X, t)`.
    pub target_velocity: MotionFn<D>,
}

impl<const D: usize> std::fmt::Debug for PenaltyParams<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PenaltyParams")
            .field("kappa", &self.kappa)
            .field("eta", &self.eta)
            .finish_non_exhaustive()
    }
}

impl<const D: usize> PenaltyParams<D> {
    /// Tether to the reference configuration: `xi = X`, `V = 0`.
    pub fn stationary(kappa: f64, eta: f64) -> Result<Self> {
        Self::new(kappa, eta, Arc::new(|x, _| *x), Arc::new(|_, _| [0.0; D]))
    }

    pub fn new(kappa: f64, eta: f64, target: MotionFn<D>, target_velocity: MotionFn<D>) -> Result<Self> {
        if !(kappa >= 0.0 && eta >= 0.0) {
            return Err(Error::Config(format!("penalty parameters must be non-negative (kappa {kappa}, eta {eta})")));
        }
        Ok(Self {
            kappa,
            eta,
            target,
            target_velocity,
        })
    }
}

/// `F_j = kappa (xi(X_j, t) - chi_j) + eta (V(X_j, t) - U_j)`.
pub fn penalty_force<const D: usize>(
    mesh: &InterfaceMesh<D>,
    params: &PenaltyParams<D>,
    velocity: &[[f64; D]],
    t: f64,
) -> Result<Vec<[f64; D]>> {
    if velocity.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "{} nodal velocities for {} vertices",
            velocity.len(),
            mesh.n_vertices()
        )));
    }
    Ok(mesh
        .reference()
        .iter()
        .zip(mesh.current())
        .zip(velocity)
        .map(|((x, chi), u)| {
            let xi = (params.target)(x, t);
            let v = (params.target_velocity)(x, t);
            std::array::from_fn(|k| params.kappa * (xi[k] - chi[k]) + params.eta * (v[k] - u[k]))
        })
        .collect())
}

/// Splits `f` into `(f . n, (I - n n^T) f)`.
pub fn decompose_force<const D: usize>(f: &[f64; D], n: &[f64; D]) -> Result<(f64, [f64; D])> {
    let nn = vector::norm(n);
    if (nn - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitNormal(nn));
    }
    let fn_ = dot(f, n);
    Ok((fn_, vector::axpy(f, -fn_, n)))
}

/// Force decomposition at one quadrature point of the jump right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct ForceSample<const D: usize> {
    pub element: usize,
    pub local: [f64; D],
    /// Quadrature weight times reference element measure.
    pub weight: f64,
    pub normal: [f64; D],
    pub f_n: f64,
    pub f_tau: [f64; D],
}

/// Quadrature samples of the P1-interpolated force split by the continuous normal.
pub fn force_samples<const D: usize>(
    mesh: &InterfaceMesh<D>,
    forces: &[[f64; D]],
    normals: &NormalField<D>,
) -> Result<Vec<ForceSample<D>>> {
    if forces.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!("{} forces for {} vertices", forces.len(), mesh.n_vertices())));
    }
    let rule = quadrature::rule::<D>(Rule::Quartic);
    let mut out = Vec::with_capacity(rule.len() * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let measure = mesh.element_geometry(e, false)?.measure;
        let el = mesh.element(e)?;
        let fe: [[f64; D]; D] = std::array::from_fn(|a| forces[el[a]]);
        for q in &rule {
            let f = vector::scale(&combine(&fe, &q.local), J_INV);
            let n = normals.eval_normal(mesh, e, &q.local)?;
            let (f_n, f_tau) = decompose_force(&f, &n)?;
            out.push(ForceSample {
                element: e,
                local: q.local,
                weight: q.weight * measure,
                normal: n,
                f_n,
                f_tau,
            });
        }
    }
    Ok(out)
}

/// Nodal coefficients of the projected jump conditions.
#[derive(Clone, Debug)]
pub struct JumpFields<const D: usize> {
    /// `P_h(j^-1 F_n)` per node.
    pub pressure: Vec<f64>,
    /// `[node][k][c] = P_h(j^-1 F_tau,c n_k)`.
    pub velocity_gradient: Vec<[[f64; D]; D]>,
    pub kind: NormalKind,
    pub step: u64,
}

impl<const D: usize> JumpFields<D> {
    pub fn zeros(n_vertices: usize, kind: NormalKind, step: u64) -> Self {
        Self {
            pressure: vec![0.0; n_vertices],
            velocity_gradient: vec![[[0.0; D]; D]; n_vertices],
            kind,
            step,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pressure.iter().all(|&p| p == 0.0) && self.velocity_gradient.iter().flatten().flatten().all(|&g| g == 0.0)
    }

    /// Interpolated `(P_h(F_n), P_h(F_tau n^T))` at a point of element `e`.
    pub fn eval_jump(
        &self,
        mesh: &InterfaceMesh<D>,
        e: usize,
        local: &[f64; D],
        step: u64,
    ) -> Result<(f64, [[f64; D]; D])> {
        if step != self.step {
            return Err(Error::StaleJumpFields {
                built: self.step,
                requested: step,
            });
        }
        let psi = mesh.basis_eval(e, local)?;
        let el = mesh.element(e)?;
        let mut p = 0.0;
        let mut g = [[0.0; D]; D];
        for a in 0..D {
            let v = el[a];
            p += psi[a] * self.pressure[v];
            for k in 0..D {
                for c in 0..D {
                    g[k][c] += psi[a] * self.velocity_gradient[v][k][c];
                }
            }
        }
        Ok((p, g))
    }
}

/// Projects the decomposed force onto the P1 space of the mesh.
pub fn build_jump_fields<const D: usize>(
    mesh: &InterfaceMesh<D>,
    mass: &MassMatrix,
    forces: &[[f64; D]],
    normals: &NormalField<D>,
    step: u64,
) -> Result<JumpFields<D>> {
    let nv = mesh.n_vertices();
    if forces.iter().all(|f| f.iter().all(|&x| x == 0.0)) {
        return Ok(JumpFields::zeros(nv, normals.kind(), step));
    }
    let mut rhs_p = vec![0.0; nv];
    let mut rhs_g = vec![vec![0.0; nv]; D * D];
    for s in force_samples(mesh, forces, normals)? {
        let el = mesh.element(s.element)?;
        for a in 0..D {
            let w = s.weight * s.local[a];
            let v = el[a];
            rhs_p[v] += w * s.f_n;
            for k in 0..D {
                for c in 0..D {
                    rhs_g[k * D + c][v] += w * s.f_tau[c] * s.normal[k];
                }
            }
        }
    }
    let pressure = mass.solve(&rhs_p)?;
    let comps: Vec<Vec<f64>> = rhs_g.iter().map(|b| mass.solve(b)).collect::<Result<_>>()?;
    let velocity_gradient = (0..nv)
        .map(|v| std::array::from_fn(|k| std::array::from_fn(|c| comps[k * D + c][v])))
        .collect();
    Ok(JumpFields {
        pressure,
        velocity_gradient,
        kind: normals.kind(),
        step,
    })
}

/// L2 projection of a scalar given by its values at the quadrature samples.
pub fn project_samples<const D: usize>(
    mesh: &InterfaceMesh<D>,
    mass: &MassMatrix,
    samples: &[(usize, [f64; D], f64)],
) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; mesh.n_vertices()];
    for (e, local, value) in samples {
        let el = mesh.element(*e)?;
        for a in 0..D {
            rhs[el[a]] += local[a] * value;
        }
    }
    mass.solve(&rhs)
}
