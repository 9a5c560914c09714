//! Semi-implicit momentum/continuity solve:
//! `rho (u - u^n)/dt + rho A = -G p + mu/2 L (u + u^n) + f`, `D u = Q`.

use super::krylov::{fgmres, KrylovOptions, KrylovStats};
use super::multigrid::PoissonMg;
use crate::error::{Error, Result};
use crate::iim_ops::Correction;
use crate::mac_grid::{
    divergence_into, gradient_into, laplacian_into, BoundaryState, Component, Grid, GridField, NormalFace,
};

#[derive(Clone, Debug, PartialEq)]
pub enum PressureGauge {
    /// Zero mean over all cells.
    MeanZero,
    /// Zero mean over the marked cells.
    RegionMeanZero(Vec<bool>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub krylov: KrylovOptions,
    /// Jacobi sweeps for the velocity block of the preconditioner.
    pub helmholtz_sweeps: usize,
    pub poisson_rel_tol: f64,
    pub poisson_max_cycles: usize,
    /// Bound on `max |D u - Q|` relative to `max(1, max |Q|)`. The Krylov
    /// tolerance is tightened until it holds.
    pub divergence_tol: f64,
    /// Gauge for the pressure when every boundary face is closed.
    pub gauge: PressureGauge,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            krylov: KrylovOptions::default(),
            helmholtz_sweeps: 3,
            poisson_rel_tol: 1e-2,
            poisson_max_cycles: 4,
            divergence_tol: 1e-10,
            gauge: PressureGauge::MeanZero,
        }
    }
}

/// Boundary faces where the pressure is prescribed, in the order expected by
/// [`PoissonMg::new`].
pub fn open_edges(bc: &BoundaryState) -> [Vec<bool>; 4] {
    let f = |v: &[NormalFace]| v.iter().map(|n| !n.is_fixed()).collect();
    [f(&bc.left_normal), f(&bc.right_normal), f(&bc.bottom_normal), f(&bc.top_normal)]
}

pub fn build_poisson(grid: &Grid, bc: &BoundaryState) -> PoissonMg {
    let [l, r, b, t] = open_edges(bc);
    PoissonMg::new(grid.nx, grid.ny, grid.h, &l, &r, &b, &t)
}

/// Inputs of one momentum solve.
pub struct MomentumProblem<'a> {
    pub grid: &'a Grid,
    pub bc_old: &'a BoundaryState,
    pub bc_new: &'a BoundaryState,
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    pub u_old: &'a GridField,
    pub v_old: &'a GridField,
    /// Initial guess for the pressure.
    pub p_guess: &'a GridField,
    pub advection: Option<(&'a GridField, &'a GridField)>,
    pub force: Option<&'a Correction>,
    pub q: &'a GridField,
}

#[derive(Clone, Debug)]
pub struct MomentumSolution {
    pub u: GridField,
    pub v: GridField,
    pub p: GridField,
    pub stats: KrylovStats,
}

struct System<'a> {
    grid: &'a Grid,
    hom: BoundaryState,
    c0: f64,
    half_mu: f64,
    fixed_u: Vec<bool>,
    fixed_v: Vec<bool>,
    closed: bool,
    mg: &'a PoissonMg,
    opts: &'a SolverOptions,
}

impl System<'_> {
    fn sizes(&self) -> (usize, usize, usize) {
        (self.grid.nu(), self.grid.nv(), self.grid.np())
    }

    fn helmholtz(&self, bc: &BoundaryState, comp: Component, w: &[f64], fixed: &[bool], out: &mut [f64]) {
        laplacian_into(self.grid, bc, comp, w, out);
        for k in 0..w.len() {
            out[k] = if fixed[k] { w[k] } else { self.c0 * w[k] - self.half_mu * out[k] };
        }
    }

    /// Linear part of the operator (homogeneous boundary data).
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nu, nv, _) = self.sizes();
        let (xu, rest) = x.split_at(nu);
        let (xv, xp) = rest.split_at(nv);
        let (yu, rest) = y.split_at_mut(nu);
        let (yv, yp) = rest.split_at_mut(nv);
        self.helmholtz(&self.hom, Component::U, xu, &self.fixed_u, yu);
        self.helmholtz(&self.hom, Component::V, xv, &self.fixed_v, yv);
        let mut gu = vec![0.0; nu];
        let mut gv = vec![0.0; nv];
        gradient_into(self.grid, &self.hom, xp, &mut gu, &mut gv);
        for k in 0..nu {
            if !self.fixed_u[k] {
                yu[k] += gu[k];
            }
        }
        for k in 0..nv {
            if !self.fixed_v[k] {
                yv[k] += gv[k];
            }
        }
        divergence_into(self.grid, xu, xv, yp);
    }

    fn precond(&self, r: &[f64], z: &mut [f64]) {
        let (nu, nv, np) = self.sizes();
        let diag = self.c0 + 4.0 * self.half_mu / (self.grid.h * self.grid.h);
        let (ru, rest) = r.split_at(nu);
        let (rv, rp) = rest.split_at(nv);
        let mut tu: Vec<f64> = ru.iter().zip(&self.fixed_u).map(|(&a, &f)| if f { a } else { a / diag }).collect();
        let mut tv: Vec<f64> = rv.iter().zip(&self.fixed_v).map(|(&a, &f)| if f { a } else { a / diag }).collect();
        let mut hu = vec![0.0; nu];
        let mut hv = vec![0.0; nv];
        for _ in 0..self.opts.helmholtz_sweeps {
            self.helmholtz(&self.hom, Component::U, &tu, &self.fixed_u, &mut hu);
            self.helmholtz(&self.hom, Component::V, &tv, &self.fixed_v, &mut hv);
            for k in 0..nu {
                if !self.fixed_u[k] {
                    tu[k] += (ru[k] - hu[k]) / diag;
                }
            }
            for k in 0..nv {
                if !self.fixed_v[k] {
                    tv[k] += (rv[k] - hv[k]) / diag;
                }
            }
        }
        let mut rhs = vec![0.0; np];
        divergence_into(self.grid, &tu, &tv, &mut rhs);
        for (a, b) in rhs.iter_mut().zip(rp) {
            *a -= b;
        }
        let mut psi = vec![0.0; np];
        self.mg.solve(&rhs, &mut psi, self.opts.poisson_rel_tol, self.opts.poisson_max_cycles);
        let mut gu = vec![0.0; nu];
        let mut gv = vec![0.0; nv];
        gradient_into(self.grid, &self.hom, &psi, &mut gu, &mut gv);
        let (zu, rest) = z.split_at_mut(nu);
        let (zv, zp) = rest.split_at_mut(nv);
        for k in 0..nu {
            zu[k] = tu[k] - gu[k];
        }
        for k in 0..nv {
            zv[k] = tv[k] - gv[k];
        }
        for k in 0..np {
            zp[k] = self.c0 * psi[k] - self.half_mu * rhs[k];
        }
        if self.closed {
            let m = zp.iter().sum::<f64>() / np as f64;
            zp.iter_mut().for_each(|p| *p -= m);
        }
    }
}

/// Checks `sum Q h^2` against the net boundary outflux on closed domains and
/// returns the source with its rounding-level mismatch removed.
pub fn compatible_source(grid: &Grid, bc: &BoundaryState, q: &GridField) -> Result<GridField> {
    if !bc.all_fixed() {
        return Ok(q.clone());
    }
    let h2 = grid.h * grid.h;
    let inflow = q.data.iter().sum::<f64>() * h2;
    let outflux = bc.fixed_outflux(grid);
    let scale = q.data.iter().map(|v| v.abs()).sum::<f64>() * h2 + outflux.abs();
    let mismatch = inflow - outflux;
    if mismatch.abs() > 1e-10 * scale + 1e-300 {
        return Err(Error::IncompatibleSource { mismatch });
    }
    let shift = mismatch / (h2 * grid.np() as f64);
    Ok(GridField {
        ni: q.ni,
        nj: q.nj,
        data: q.data.iter().map(|v| v - shift).collect(),
    })
}

fn apply_gauge(p: &mut [f64], gauge: &PressureGauge) {
    let (sum, n) = match gauge {
        PressureGauge::MeanZero => (p.iter().sum::<f64>(), p.len()),
        PressureGauge::RegionMeanZero(mask) => p
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0), |(s, n), (&v, _)| (s + v, n + 1)),
    };
    if n > 0 {
        let m = sum / n as f64;
        p.iter_mut().for_each(|v| *v -= m);
    }
}

pub fn momentum_solve(prob: &MomentumProblem, opts: &SolverOptions, mg: &PoissonMg) -> Result<MomentumSolution> {
    let grid = prob.grid;
    prob.u_old.check(grid.u_shape(), "u")?;
    prob.v_old.check(grid.v_shape(), "v")?;
    prob.p_guess.check(grid.p_shape(), "p")?;
    prob.q.check(grid.p_shape(), "Q")?;
    if !(prob.rho > 0.0 && prob.mu >= 0.0 && prob.dt > 0.0) {
        return Err(Error::Config(format!(
            "need rho > 0, mu >= 0, dt > 0 (got {}, {}, {})",
            prob.rho, prob.mu, prob.dt
        )));
    }
    let q = compatible_source(grid, prob.bc_new, prob.q)?;
    let (fixed_u, fixed_v) = prob.bc_new.fixed_masks(grid);
    let closed = prob.bc_new.all_fixed();
    let sys = System {
        grid,
        hom: prob.bc_new.homogeneous(),
        c0: prob.rho / prob.dt,
        half_mu: 0.5 * prob.mu,
        fixed_u,
        fixed_v,
        closed,
        mg,
        opts,
    };
    let (nu, nv, np) = sys.sizes();

    // Explicit part of the right-hand side.
    let mut lu = vec![0.0; nu];
    let mut lv = vec![0.0; nv];
    laplacian_into(grid, prob.bc_old, Component::U, &prob.u_old.data, &mut lu);
    laplacian_into(grid, prob.bc_old, Component::V, &prob.v_old.data, &mut lv);
    let mut b = vec![0.0; nu + nv + np];
    for k in 0..nu {
        b[k] = sys.c0 * prob.u_old.data[k] + sys.half_mu * lu[k];
    }
    for k in 0..nv {
        b[nu + k] = sys.c0 * prob.v_old.data[k] + sys.half_mu * lv[k];
    }
    if let Some((ax, ay)) = prob.advection {
        for k in 0..nu {
            b[k] -= prob.rho * ax.data[k];
        }
        for k in 0..nv {
            b[nu + k] -= prob.rho * ay.data[k];
        }
    }
    if let Some(f) = prob.force {
        if !f.is_zero() {
            for k in 0..nu {
                b[k] += f.fu.data[k];
            }
            for k in 0..nv {
                b[nu + k] += f.fv.data[k];
            }
        }
    }
    // Fixed faces carry the boundary value; the inhomogeneous ghost and
    // pressure terms of the new level move to the right-hand side.
    let mut x = vec![0.0; nu + nv + np];
    x[..nu].copy_from_slice(&prob.u_old.data);
    x[nu..nu + nv].copy_from_slice(&prob.v_old.data);
    {
        let (xu, rest) = x.split_at_mut(nu);
        let (xv, _) = rest.split_at_mut(nv);
        prob.bc_new.impose(grid, xu, xv);
    }
    let zeros_u = vec![0.0; nu];
    let zeros_v = vec![0.0; nv];
    let zeros_p = vec![0.0; np];
    let mut affine_u = vec![0.0; nu];
    let mut affine_v = vec![0.0; nv];
    laplacian_into(grid, prob.bc_new, Component::U, &zeros_u, &mut affine_u);
    laplacian_into(grid, prob.bc_new, Component::V, &zeros_v, &mut affine_v);
    let mut gpu = vec![0.0; nu];
    let mut gpv = vec![0.0; nv];
    gradient_into(grid, prob.bc_new, &zeros_p, &mut gpu, &mut gpv);
    for k in 0..nu {
        b[k] = if sys.fixed_u[k] { x[k] } else { b[k] + sys.half_mu * affine_u[k] - gpu[k] };
    }
    for k in 0..nv {
        b[nu + k] = if sys.fixed_v[k] { x[nu + k] } else { b[nu + k] + sys.half_mu * affine_v[k] - gpv[k] };
    }
    b[nu + nv..].copy_from_slice(&q.data);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("momentum right-hand side".into()));
    }

    x[nu + nv..].copy_from_slice(&prob.p_guess.data);
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut kopts = KrylovOptions {
        rel_tol: 0.0,
        abs_tol: opts.krylov.rel_tol * bnorm + opts.krylov.abs_tol,
        ..opts.krylov
    };
    let div_tol = opts.divergence_tol * q.max_abs().max(1.0);
    let mut iterations = 0;
    let mut div = vec![0.0; np];
    let stats = loop {
        kopts.max_iter = opts.krylov.max_iter - iterations;
        let st = fgmres(|x, y| sys.apply(x, y), |r, z| sys.precond(r, z), &b, &mut x, &kopts)?;
        iterations += st.iterations;
        divergence_into(grid, &x[..nu], &x[nu..nu + nv], &mut div);
        let worst = div.iter().zip(&q.data).map(|(d, q)| (d - q).abs()).fold(0.0, f64::max);
        if worst <= div_tol {
            break KrylovStats {
                iterations,
                residual: st.residual,
                rhs_norm: bnorm,
            };
        }
        if iterations >= opts.krylov.max_iter || st.residual == 0.0 {
            return Err(Error::NonConvergence {
                iterations,
                residual: st.residual,
            });
        }
        kopts.abs_tol = 0.01 * st.residual;
    };
    let mut p = x[nu + nv..].to_vec();
    if closed {
        apply_gauge(&mut p, &opts.gauge);
    }
    Ok(MomentumSolution {
        u: GridField {
            ni: grid.nu() / grid.ny,
            nj: grid.ny,
            data: x[..nu].to_vec(),
        },
        v: GridField {
            ni: grid.nx,
            nj: grid.ny + 1,
            data: x[nu..nu + nv].to_vec(),
        },
        p: GridField {
            ni: grid.nx,
            nj: grid.ny,
            data: p,
        },
        stats,
    })
}
