//! Time stepping of the coupled fluid/interface system.
//!
//! Each step predicts the interface with the interpolated velocity, evaluates
//! the penalty force at the midpoint configuration, turns it into jump
//! corrections, updates the source controller, solves the semi-implicit
//! Stokes system and corrects the interface with the midpoint velocity.

pub mod advection;
pub mod krylov;
pub mod multigrid;
pub mod stokes;


pub use advection::{advection_term, extrapolate};
pub use krylov::{fgmres, KrylovOptions, KrylovStats};
pub use multigrid::PoissonMg;
pub use stokes::{compatible_source, momentum_solve, MomentumProblem, MomentumSolution, PressureGauge, SolverOptions};

use crate::controllers::{measure_mean_pressure, ControllerState, Coupling, SourceSpec};
use crate::error::{Error, Result};
use crate::iim_ops::{find_intersections, interpolate, spread};
use crate::jump_model::{build_jump_fields, penalty_force, JumpFields, PenaltyParams};
use crate::mac_grid::{divergence, BoundarySpec, BoundaryState, GridField, StaggeredState};
use crate::normal_fields::{NormalField, NormalKind};
use crate::surface_mesh::{MassMatrix, Mesh2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub rho: f64,
    pub mu: f64,
}

/// Immersed interface tethered to a prescribed configuration.
#[derive(Clone, Debug)]
pub struct InterfaceModel {
    pub mesh: Mesh2,
    pub mass: MassMatrix,
    pub normal_kind: NormalKind,
    pub penalty: PenaltyParams<2>,
    /// Interface velocity used in the last position update.
    pub last_velocity: Vec<[f64; 2]>,
    /// Nodes held at their position; empty means none.
    pub pinned: Vec<bool>,
}

impl InterfaceModel {
    pub fn new(mesh: Mesh2, normal_kind: NormalKind, penalty: PenaltyParams<2>) -> Result<Self> {
        let mass = MassMatrix::assemble(&mesh)?;
        let n = mesh.n_vertices();
        Ok(Self {
            mesh,
            mass,
            normal_kind,
            penalty,
            last_velocity: vec![[0.0; 2]; n],
            pinned: Vec::new(),
        })
    }

    /// Holds the listed nodes fixed, e.g. wall ends on the domain boundary.
    pub fn with_pinned(mut self, nodes: &[usize]) -> Result<Self> {
        let n = self.mesh.n_vertices();
        let mut pinned = vec![false; n];
        for &j in nodes {
            if j >= n {
                return Err(Error::Config(format!("pinned node {j} out of range for {n} nodes")));
            }
            pinned[j] = true;
        }
        self.pinned = pinned;
        Ok(self)
    }

    fn pin(&self, velocity: &mut [[f64; 2]]) {
        for (u, &p) in velocity.iter_mut().zip(&self.pinned) {
            if p {
                *u = [0.0; 2];
            }
        }
    }

    /// Jump fields of the penalty force for the current configuration of `mesh`.
    pub fn jumps(&self, mesh: &Mesh2, velocity: &[[f64; 2]], t: f64, step: u64) -> Result<(Vec<[f64; 2]>, JumpFields<2>)> {
        let forces = penalty_force(mesh, &self.penalty, velocity, t)?;
        let normals = NormalField::compute(self.normal_kind, mesh, &self.mass)?;
        let jumps = build_jump_fields(mesh, &self.mass, &forces, &normals, step)?;
        Ok((forces, jumps))
    }

    /// Interface velocity `U = I(u; jumps(F(U)))` on `mesh`, with the force,
    /// and its jumps, evaluated at that velocity.
    ///
    /// The damping part of `F` is affine in `U` and the interpolation
    /// correction scales like `eta h / mu`, so evaluating it with a lagged `U`
    /// diverges at low viscosity. The fixed point is solved with FGMRES.
    pub fn consistent_velocity(
        &self,
        mesh: &Mesh2,
        grid: &crate::mac_grid::Grid,
        bc: &BoundaryState,
        u: &GridField,
        v: &GridField,
        mu: f64,
        t: f64,
        step: u64,
    ) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>, JumpFields<2>)> {
        let eval = |x: &[[f64; 2]]| -> Result<Vec<[f64; 2]>> {
            let (_, j) = self.jumps(mesh, x, t, step)?;
            let mut vel = interpolate(mesh, grid, bc, u, v, Some(&j), mu)?;
            self.pin(&mut vel);
            Ok(vel)
        };
        let n = mesh.n_vertices();
        let zero = vec![[0.0; 2]; n];
        let a = eval(&zero)?;
        let vel = if self.penalty.eta == 0.0 {
            a
        } else {
            let flat_a: Vec<f64> = a.iter().flatten().copied().collect();
            let mut x = flat_a.clone();
            let mut failure = None;
            let opts = krylov::KrylovOptions {
                restart: 2 * n,
                max_iter: 4 * n,
                rel_tol: 1e-12,
                // Near-rest interfaces: scale the floor by the flow, not by `a`.
                abs_tol: 1e-12 * ((2 * n) as f64).sqrt() * u.max_abs().max(v.max_abs()),
            };
            let apply = |x: &[f64], out: &mut [f64]| {
                let xs: Vec<[f64; 2]> = x.chunks(2).map(|c| [c[0], c[1]]).collect();
                match eval(&xs) {
                    Ok(g) => {
                        for (k, o) in out.iter_mut().enumerate() {
                            *o = x[k] - (g[k / 2][k % 2] - flat_a[k]);
                        }
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        out.fill(0.0);
                    }
                }
            };
            let stats = krylov::fgmres(apply, |r, z| z.copy_from_slice(r), &flat_a, &mut x, &opts);
            if let Some(e) = failure {
                return Err(e);
            }
            stats?;
            x.chunks(2).map(|c| [c[0], c[1]]).collect()
        };
        let (forces, jumps) = self.jumps(mesh, &vel, t, step)?;
        Ok((vel, forces, jumps))
    }

    /// `max_j |xi(X_j, t) - chi_j|`.
    pub fn displacement_error(&self, t: f64) -> f64 {
        self.mesh
            .reference()
            .iter()
            .zip(self.mesh.current())
            .map(|(x, chi)| crate::vector::dist(&(self.penalty.target)(x, t), chi))
            .fold(0.0, f64::max)
    }
}

/// Volumetric source `Q(t) k(x)` driven by a controller.
#[derive(Clone, Debug)]
pub struct SourceModel {
    pub spec: SourceSpec,
    /// Unit-strength profile including any balancing sink.
    pub profile: GridField,
    pub controller: ControllerState,
    pub coupling: Coupling,
}

impl SourceModel {
    pub fn new(spec: SourceSpec, profile: GridField, coupling: Coupling) -> Self {
        Self {
            spec,
            profile,
            controller: ControllerState::new(),
            coupling,
        }
    }
}

/// Response of one step to a unit source strength with homogeneous data.
#[derive(Clone, Debug)]
struct UnitResponse {
    dt: f64,
    key: Vec<bool>,
    u: GridField,
    v: GridField,
    p: GridField,
    p_bar: f64,
}

/// Per-step record.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: u64,
    /// Time at the end of the step.
    pub t: f64,
    pub cfl: f64,
    pub krylov_iterations: usize,
    pub krylov_residual: f64,
    /// `max |D u - Q|` after the solve.
    pub divergence_residual: f64,
    pub displacement_error: f64,
    /// `int F dA` over the reference interface at the midpoint.
    pub force_integral: [f64; 2],
    pub p_bar: f64,
    pub source_error: f64,
    pub q_strength: f64,
}

pub const CFL_LIMIT: f64 = 0.5;

pub struct SolverState {
    pub fluid: StaggeredState,
    pub boundary: BoundarySpec,
    pub params: FluidParams,
    pub dt: f64,
    pub options: SolverOptions,
    pub interface: Option<InterfaceModel>,
    pub source: Option<SourceModel>,
    /// Whether the advective term is included.
    pub advect: bool,
    pub step: u64,
    adv_prev: Option<(GridField, GridField)>,
    poisson: Option<(Vec<bool>, PoissonMg)>,
    unit: Option<UnitResponse>,
    pub history: Vec<StepReport>,
}

impl SolverState {
    pub fn new(fluid: StaggeredState, boundary: BoundarySpec, params: FluidParams, dt: f64) -> Result<Self> {
        fluid.check_shapes()?;
        boundary.validate(&fluid.grid)?;
        if !(params.rho > 0.0 && params.mu >= 0.0 && dt > 0.0) {
            return Err(Error::Config(format!(
                "need rho > 0, mu >= 0, dt > 0 (got {}, {}, {dt})",
                params.rho, params.mu
            )));
        }
        Ok(Self {
            fluid,
            boundary,
            params,
            dt,
            options: SolverOptions::default(),
            interface: None,
            source: None,
            advect: true,
            step: 0,
            adv_prev: None,
            poisson: None,
            unit: None,
            history: Vec::new(),
        })
    }

    pub fn with_interface(mut self, interface: InterfaceModel) -> Self {
        self.interface = Some(interface);
        self
    }

    pub fn with_source(mut self, source: SourceModel) -> Self {
        self.source = Some(source);
        self
    }

    fn poisson(&mut self, bc: &BoundaryState) -> &PoissonMg {
        let key: Vec<bool> = stokes::open_edges(bc).concat();
        if self.poisson.as_ref().is_none_or(|(k, _)| *k != key) {
            self.poisson = Some((key, stokes::build_poisson(&self.fluid.grid, bc)));
        }
        &self.poisson.as_ref().unwrap().1
    }

    /// Advances one step and returns its report.
    pub fn step(&mut self) -> Result<StepReport> {
        let grid = self.fluid.grid;
        let (t, dt, mu) = (self.fluid.t, self.dt, self.params.mu);
        let bc_old = BoundaryState::evaluate(&self.boundary, &grid, t)?;
        let bc_mid = BoundaryState::evaluate(&self.boundary, &grid, t + 0.5 * dt)?;
        let bc_new = BoundaryState::evaluate(&self.boundary, &grid, t + dt)?;
        let mut report = StepReport {
            step: self.step + 1,
            t: t + dt,
            ..Default::default()
        };

        // Predictor and midpoint force.
        let mut mid: Option<(Mesh2, JumpFields<2>)> = None;
        let mut force = None;
        if let Some(itf) = &self.interface {
            let (u_n, _, _) = itf.consistent_velocity(&itf.mesh, &grid, &bc_old, &self.fluid.u, &self.fluid.v, mu, t, self.step)?;
            let half = predict_interface(&itf.mesh, &u_n, dt)?.1;
            let (forces, jumps_half) = itf.jumps(&half, &u_n, t + 0.5 * dt, self.step)?;
            let crossings = find_intersections(&half, &grid)?;
            force = Some(spread(&half, &jumps_half, &grid, &crossings)?);
            let w = itf.mass.row_sums();
            for (f, wj) in forces.iter().zip(&w) {
                report.force_integral[0] += wj * f[0];
                report.force_integral[1] += wj * f[1];
            }
            mid = Some((half, jumps_half));
        }

        let implicit = self.source.as_ref().is_some_and(|s| s.coupling == Coupling::Implicit);
        if let Some(src) = &mut self.source {
            if implicit {
                self.fluid.q.data.iter_mut().for_each(|x| *x = 0.0);
            } else {
                let p_bar = measure_mean_pressure(&self.fluid.p, &grid, &src.spec)?;
                let q = src.controller.update(&src.spec, p_bar, dt, t)?;
                for (out, k) in self.fluid.q.data.iter_mut().zip(&src.profile.data) {
                    *out = q * k;
                }
                report.p_bar = p_bar;
                report.source_error = src.spec.p_target - p_bar;
                report.q_strength = q;
            }
        }

        let adv = if self.advect {
            let now = advection_term(&grid, &bc_old, &self.fluid.u, &self.fluid.v);
            let prev = self.adv_prev.take().unwrap_or_else(|| now.clone());
            let half = (extrapolate(&now.0, &prev.0), extrapolate(&now.1, &prev.1));
            self.adv_prev = Some(now);
            Some(half)
        } else {
            None
        };

        let options = self.options.clone();
        let mg = self.poisson(&bc_new).clone();
        let mut q = self.fluid.q.clone();
        let solve = |q: &GridField| {
            let prob = MomentumProblem {
                grid: &grid,
                bc_old: &bc_old,
                bc_new: &bc_new,
                rho: self.params.rho,
                mu,
                dt,
                u_old: &self.fluid.u,
                v_old: &self.fluid.v,
                p_guess: &self.fluid.p,
                advection: adv.as_ref().map(|(a, b)| (a, b)),
                force: force.as_ref(),
                q,
            };
            momentum_solve(&prob, &options, &mg)
        };
        let mut sol = solve(&q)?;

        if implicit {
            let src = self.source.as_ref().unwrap();
            let key: Vec<bool> = stokes::open_edges(&bc_new).concat();
            if self.unit.as_ref().is_none_or(|u| u.dt != dt || u.key != key) {
                // Linearity: the difference of two solves is the homogeneous response.
                let with = solve(&src.profile)?;
                let diff = |a: &GridField, b: &GridField| GridField {
                    ni: a.ni,
                    nj: a.nj,
                    data: a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect(),
                };
                let p = diff(&with.p, &sol.p);
                let p_bar = measure_mean_pressure(&p, &grid, &src.spec)?;
                self.unit = Some(UnitResponse {
                    dt,
                    key,
                    u: diff(&with.u, &sol.u),
                    v: diff(&with.v, &sol.v),
                    p,
                    p_bar,
                });
            }
            let unit = self.unit.as_ref().unwrap();
            let src = self.source.as_mut().unwrap();
            let a = measure_mean_pressure(&sol.p, &grid, &src.spec)?;
            let strength = src.controller.update_affine(&src.spec, a, unit.p_bar, dt, t)?;
            let axpy = |x: &mut GridField, y: &GridField| x.data.iter_mut().zip(&y.data).for_each(|(x, y)| *x += strength * y);
            axpy(&mut sol.u, &unit.u);
            axpy(&mut sol.v, &unit.v);
            axpy(&mut sol.p, &unit.p);
            for (out, k) in q.data.iter_mut().zip(&src.profile.data) {
                *out = strength * k;
            }
            self.fluid.q = q.clone();
            let p_bar = a + unit.p_bar * strength;
            report.p_bar = p_bar;
            report.source_error = src.spec.p_target - p_bar;
            report.q_strength = strength;
        }
        report.krylov_iterations = sol.stats.iterations;
        report.krylov_residual = sol.stats.residual;

        if let (Some(itf), Some((half, jumps_half))) = (&mut self.interface, &mid) {
            let um = average(&self.fluid.u, &sol.u);
            let vm = average(&self.fluid.v, &sol.v);
            let mut vel = interpolate(half, &grid, &bc_mid, &um, &vm, Some(jumps_half), mu)?;
            itf.pin(&mut vel);
            correct_interface(&mut itf.mesh, &vel, dt)?;
            itf.last_velocity = vel;
            report.displacement_error = itf.displacement_error(t + dt);
        }

        let compat = compatible_source(&grid, &bc_new, &q)?;
        let div = divergence(&grid, &sol.u, &sol.v)?;
        report.divergence_residual = div.data.iter().zip(&compat.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.fluid.u = sol.u;
        self.fluid.v = sol.v;
        self.fluid.p = sol.p;
        self.fluid.t = t + dt;
        self.step += 1;
        report.cfl = self.fluid.max_speed() * dt / grid.h;
        self.history.push(report);
        if !report.cfl.is_finite() {
            return Err(Error::NonFinite(format!("velocity at step {}", self.step)));
        }
        if report.cfl > CFL_LIMIT {
            return Err(Error::CflExceeded {
                cfl: report.cfl,
                step: self.step,
            });
        }
        Ok(report)
    }
}

fn average(a: &GridField, b: &GridField) -> GridField {
    GridField {
        ni: a.ni,
        nj: a.nj,
        data: a.data.iter().zip(&b.data).map(|(x, y)| 0.5 * (x + y)).collect(),
    }
}

/// Returns `(chi_hat, chi_half)` as meshes with `chi_hat = chi + dt U` and
/// `chi_half` the midpoint of `chi` and `chi_hat`.
pub fn predict_interface(mesh: &Mesh2, velocity: &[[f64; 2]], dt: f64) -> Result<(Mesh2, Mesh2)> {
    if velocity.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!("{} velocities for {} nodes", velocity.len(), mesh.n_vertices())));
    }
    let mut hat = mesh.clone();
    let mut half = mesh.clone();
    let chi = mesh.current();
    hat.set_current(chi.iter().zip(velocity).map(|(x, u)| [x[0] + dt * u[0], x[1] + dt * u[1]]).collect())?;
    half.set_current(chi.iter().zip(hat.current()).map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]).collect())?;
    Ok((hat, half))
}

/// `chi <- chi + dt U` with `U` the interpolated midpoint velocity.
pub fn correct_interface(mesh: &mut Mesh2, velocity: &[[f64; 2]], dt: f64) -> Result<()> {
    if velocity.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!("{} velocities for {} nodes", velocity.len(), mesh.n_vertices())));
    }
    for (x, u) in mesh.current_mut().iter_mut().zip(velocity) {
        x[0] += dt * u[0];
        x[1] += dt * u[1];
    }
    Ok(())
}
