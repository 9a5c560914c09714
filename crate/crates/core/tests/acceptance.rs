//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The bluff-body benchmark only runs with
//! `cargo test --test acceptance -- --expensive`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iim_core::bench::{run, ExperimentConfig, ExperimentKind, Summary};
use iim_core::flow_solver::{FluidParams, InterfaceModel, SolverState};
use iim_core::iim_ops::{corrected_second_difference, StencilSide};
use iim_core::jump_model::{project_samples, PenaltyParams};
use iim_core::mac_grid::{
    divergence, gradient, laplacian, BoundarySpec, BoundaryState, Component, Grid, GridField, SideCondition, StaggeredState,
};
use iim_core::normal_fields::{NormalField, NormalKind};
use iim_core::surface_mesh::quadrature::{self, Rule};
use iim_core::surface_mesh::{generators, InterfaceMesh, MassMatrix, Winding};

const SMOOTHED: [NormalKind; 2] = [NormalKind::Icw, NormalKind::Projected];

#[derive(Default)]
struct Report {
    failed: usize,
    /// `(run label, eps_x_max, h / 4)` of every flow run.
    displacements: Vec<(String, f64, f64)>,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, ok: bool, detail: String) {
        println!("{} {id:>3} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }

    fn run(&mut self, label: String, cfg: &ExperimentConfig) -> Option<Summary> {
        let t0 = Instant::now();
        match run(cfg) {
            Ok(a) => {
                let s = a.summary;
                eprintln!("  {label}: {} steps in {:.1?}", s.steps, t0.elapsed());
                self.displacements.push((label, s.eps_x_max.unwrap_or(f64::NAN), s.eps_x_bound));
                Some(s)
            }
            Err(e) => {
                eprintln!("  {label}: {e}");
                self.displacements.push((label, f64::NAN, 0.0));
                None
            }
        }
    }
}

fn pressurized(normal: NormalKind, n: usize, p: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::PressurizedCylinder);
    c.normal = Some(normal);
    c.n = Some(n);
    c.controller.p_target = Some(p);
    c
}

fn steady_q(r: &mut Report, normal: NormalKind, n: usize, p: f64) -> f64 {
    let label = format!("pressurized {} n={n} p0={p}", normal.name());
    r.run(label, &pressurized(normal, n, p))
        .and_then(|s| s.q_steady)
        .map_or(f64::NAN, f64::abs)
}

fn criterion_1(r: &mut Report) {
    let flat = steady_q(r, NormalKind::Flat, 32, 100.0);
    let mut ok = flat.is_finite();
    let mut detail = format!("|Q_flat| = {flat:.3e}");
    for k in SMOOTHED {
        let q = steady_q(r, k, 32, 100.0);
        let ratio = flat / q;
        ok &= q.is_finite() && ratio >= 1e3;
        detail += &format!(", |Q_{}| = {q:.3e} (ratio {ratio:.2e})", k.name());
    }
    r.line("1", "leakage suppression at N=32, p0=100 (ratio >= 1e3)", ok, detail);
}

fn criterion_2(r: &mut Report) {
    let mut ok = true;
    let mut detail = String::new();
    for n in [16, 32, 64] {
        let flat = steady_q(r, NormalKind::Flat, n, 10.0);
        detail += &format!("N={n}: flat {flat:.2e}");
        for k in SMOOTHED {
            let q = steady_q(r, k, n, 10.0);
            ok &= q <= 1e-6;
            if n == 64 {
                ok &= flat / q >= 1e4;
            }
            detail += &format!(" {} {q:.2e}", k.name());
        }
        detail += "; ";
    }
    r.line("2", "grid sweep at p0=10 (smoothed <= 1e-6, ratio >= 1e4 at N=64)", ok, detail);
}

fn criterion_3(r: &mut Report, expensive: bool) {
    if !expensive {
        println!("SKIP   3 bluff-body benchmark at Re=200: long-running, rerun with --expensive");
        return;
    }
    let mut ok = true;
    let mut detail = String::new();
    for k in NormalKind::ALL {
        let mut c = ExperimentConfig::new(ExperimentKind::CylinderFlow);
        c.normal = Some(k);
        let Some(s) = r.run(format!("cylinder_flow {}", k.name()), &c) else {
            ok = false;
            detail += &format!("{} aborted; ", k.name());
            continue;
        };
        let within = |v: Option<f64>, target: f64, tol: f64| v.is_some_and(|v| ((v - target) / target).abs() <= tol);
        ok &= within(s.c_d_mean, 1.36, 0.10) && within(s.c_l_amplitude, 0.70, 0.15) && within(s.strouhal, 0.195, 0.05);
        detail += &format!(
            "{}: C_D {:?} C_L amp {:?} St {:?}; ",
            k.name(),
            s.c_d_mean,
            s.c_l_amplitude,
            s.strouhal
        );
    }
    r.line("3", "bluff-body benchmark at Re=200 (C_D 10%, C_L 15%, St 5%)", ok, detail);
}

fn criterion_4(r: &mut Report) {
    let offsets = [0.0, 9.0, 99.0];
    let mut ok = true;
    let mut detail = String::new();
    let mut flat_errors = Vec::new();
    for k in NormalKind::ALL {
        detail += &format!("{}:", k.name());
        for p_out in offsets {
            let mut c = ExperimentConfig::new(ExperimentKind::ChannelPoiseuille);
            c.normal = Some(k);
            c.geometry.p_out = Some(p_out);
            let err = r
                .run(format!("channel {} p_out={p_out}", k.name()), &c)
                .and_then(|s| s.flow_rate_rel_error)
                .unwrap_or(f64::NAN);
            detail += &format!(" {:.3}%", 100.0 * err);
            if k == NormalKind::Flat {
                flat_errors.push(err);
            } else {
                ok &= err <= 0.03;
            }
        }
        detail += "; ";
    }
    ok &= flat_errors.windows(2).all(|w| w[1] > w[0]);
    r.line("4", "channel flow rate (smoothed within 3%, flat error grows with offset)", ok, detail);
}

fn stencil_exactness() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20_000 {
        let h = rng.gen_range(0.01..1.0);
        let upper = rng.gen_bool(0.5);
        let out_right = rng.gen_bool(0.5);
        let alpha = rng.gen_range(0.01..0.99) * if upper { h } else { -h };
        let (a0, b0, a1, b1): (f64, f64, f64, f64) =
            (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let inside = |x: f64| if out_right { x < alpha } else { x > alpha };
        let f = |x: f64| if inside(x) { a0 + b0 * x } else { a1 + b1 * x };
        let side = if upper { StencilSide::Upper } else { StencilSide::Lower };
        let sign = if out_right { 1.0 } else { -1.0 };
        let d2 = corrected_second_difference(f(-h), f(0.0), f(h), h, side, sign, alpha, (a1 + b1 * alpha) - (a0 + b0 * alpha), b1 - b0);
        // Relative to the size of the uncorrected terms.
        let scale = (a0.abs() + a1.abs() + h * (b0.abs() + b1.abs())) / (h * h);
        worst = worst.max(d2.abs() / scale);
    }
    worst
}

fn adjointness() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for n in [4, 9, 16, 33] {
        let g = Grid::new([0.0, 0.0], [2.0, 1.0], 2 * n).unwrap();
        let bc = BoundaryState::evaluate(&BoundarySpec::all(SideCondition::FreeSlip), &g, 0.0).unwrap();
        for _ in 0..20 {
            let p = GridField::from_fn(g.p_shape(), |_, _| rng.gen_range(-1.0..1.0));
            let mut u = GridField::from_fn(g.u_shape(), |_, _| rng.gen_range(-1.0..1.0));
            let mut v = GridField::from_fn(g.v_shape(), |_, _| rng.gen_range(-1.0..1.0));
            bc.impose(&g, &mut u.data, &mut v.data);
            let (gu, gv) = gradient(&g, &bc, &p).unwrap();
            let d = divergence(&g, &u, &v).unwrap();
            let ip = |a: &GridField, b: &GridField| a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum::<f64>();
            let lhs = ip(&gu, &u) + ip(&gv, &v);
            let rhs = -ip(&p, &d);
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    worst
}

/// Observed orders of the u-component Laplacian against `sin(pi x) cos(pi y)`
/// under free-slip walls.
fn laplacian_orders() -> Vec<f64> {
    let errs: Vec<f64> = [16, 32, 64, 128]
        .into_iter()
        .map(|n| {
            let g = Grid::new([0.0, 0.0], [1.0, 1.0], n).unwrap();
            let bc = BoundaryState::evaluate(&BoundarySpec::all(SideCondition::FreeSlip), &g, 0.0).unwrap();
            let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).cos();
            let w = GridField::from_fn(g.u_shape(), |i, j| exact(g.u_pos(i, j)));
            let l = laplacian(&g, &bc, Component::U, &w).unwrap();
            let mut e = 0.0f64;
            for j in 0..g.ny {
                for i in 1..g.nx {
                    e = e.max((l.at(i, j) + 2.0 * PI * PI * w.at(i, j)).abs());
                }
            }
            e
        })
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Smallest pivot of a dense Cholesky factorisation; positive iff SPD.
fn cholesky_min_pivot(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return s;
                }
                min = min.min(s);
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    min
}

fn projection_checks() -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut min_pivot, mut repro, mut idem) = (f64::INFINITY, 0.0f64, 0.0f64);
    for n in [3, 7, 20, 64] {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + rng.gen_range(-0.3..0.3)) / n as f64;
                [1.5 * t.cos(), 0.6 * t.sin()]
            })
            .collect();
        let mesh = InterfaceMesh::new(pts, (0..n).map(|k| [k, (k + 1) % n]).collect(), Winding::Ccw).unwrap();
        let mass = MassMatrix::assemble(&mesh).unwrap();
        min_pivot = min_pivot.min(cholesky_min_pivot(&mass.matrix().to_dense()));
        let rule = quadrature::rule::<2>(Rule::Quartic);
        let sample = |f: &dyn Fn(usize, &[f64; 2]) -> f64| -> Vec<(usize, [f64; 2], f64)> {
            let mut s = Vec::new();
            for e in 0..mesh.n_elements() {
                let m = mesh.element_geometry(e, false).unwrap().measure;
                for q in &rule {
                    s.push((e, q.local, q.weight * m * f(e, &q.local)));
                }
            }
            s
        };
        let p1 = |vals: &[f64]| {
            let vals = vals.to_vec();
            let mesh = &mesh;
            move |e: usize, l: &[f64; 2]| {
                let el = mesh.element(e).unwrap();
                l[0] * vals[el[0]] + l[1] * vals[el[1]]
            }
        };
        let nodal: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let back = project_samples(&mesh, &mass, &sample(&p1(&nodal))).unwrap();
        repro = repro.max(back.iter().zip(&nodal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let smooth = |e: usize, l: &[f64; 2]| {
            let x = mesh.eval_reference(e, l).unwrap();
            (2.0 * x[0]).sin() * x[1].exp()
        };
        let once = project_samples(&mesh, &mass, &sample(&smooth)).unwrap();
        let twice = project_samples(&mesh, &mass, &sample(&p1(&once))).unwrap();
        idem = idem.max(once.iter().zip(&twice).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    (min_pivot, repro, idem)
}

fn normal_checks() -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = 0.0f64;
    let mut continuous = true;
    for _ in 0..200 {
        let n = rng.gen_range(3..300);
        let r = rng.gen_range(0.01..50.0);
        let c = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let mesh = generators::circle(c, r, n, rng.gen_range(0.0..2.0 * PI));
        let mass = MassMatrix::assemble(&mesh).unwrap();
        for k in SMOOTHED {
            let field = NormalField::compute(k, &mesh, &mass).unwrap();
            for (x, nn) in mesh.current().iter().zip(field.nodal_normals()) {
                worst = worst.max((nn[0] - (x[0] - c[0]) / r).abs()).max((nn[1] - (x[1] - c[1]) / r).abs());
            }
            for e in 0..n {
                let end = field.eval_normal(&mesh, e, &[0.0, 1.0]).unwrap();
                let start = field.eval_normal(&mesh, (e + 1) % n, &[1.0, 0.0]).unwrap();
                continuous &= end == start;
            }
        }
    }
    (worst, continuous)
}

fn zero_force_is_bitwise_inert() -> bool {
    let build = |with_interface: bool| {
        let g = Grid::new([-1.0, -1.0], [1.0, 1.0], 24).unwrap();
        let mut st = StaggeredState::zeros(g);
        st.u = GridField::from_fn(g.u_shape(), |i, j| {
            let x = g.u_pos(i, j);
            0.2 * (PI * x[0]).sin().powi(2) * (PI * x[1]).sin()
        });
        let mut s = SolverState::new(st, BoundarySpec::all(SideCondition::FreeSlip), FluidParams { rho: 1.0, mu: 0.05 }, 2e-3).unwrap();
        if with_interface {
            let mesh = generators::circle([0.1, 0.0], 0.4, 30, 0.2);
            let itf = InterfaceModel::new(mesh, NormalKind::Projected, PenaltyParams::stationary(0.0, 0.0).unwrap()).unwrap();
            s = s.with_interface(itf);
        }
        for _ in 0..10 {
            s.step().unwrap();
        }
        s.fluid
    };
    build(true) == build(false)
}

fn criterion_5(r: &mut Report) {
    let stencil = stencil_exactness();
    r.line("5a", "corrected stencils exact on piecewise-linear jumps (<= 1e-12)", stencil <= 1e-12, format!("max relative residual {stencil:.2e}"));

    let adj = adjointness();
    let orders = laplacian_orders();
    let ok = adj <= 1e-12 && orders.iter().all(|s| (s - 2.0).abs() <= 0.1);
    r.line("5b", "MAC adjointness (<= 1e-12) and Laplacian order 2.0 +- 0.1", ok, format!("adjoint defect {adj:.2e}, orders {orders:.3?}"));

    let (pivot, repro, idem) = projection_checks();
    let ok = pivot > 0.0 && repro <= 1e-12 && idem <= 1e-12;
    r.line(
        "5c",
        "mass matrix SPD, P_h reproduces P1 and is idempotent (<= 1e-12)",
        ok,
        format!("min Cholesky pivot {pivot:.2e}, reproduction {repro:.2e}, idempotence {idem:.2e}"),
    );

    let (radial, continuous) = normal_checks();
    r.line(
        "5d",
        "smoothed nodal normals radial on uniform polygons (<= 1e-12), continuous at vertices",
        radial <= 1e-12 && continuous,
        format!("max deviation {radial:.2e}, bitwise continuous {continuous}"),
    );

    let inert = zero_force_is_bitwise_inert();
    r.line("5e", "zero force leaves the flow bitwise unchanged", inert, format!("identical {inert}"));

    let worst = r.displacements.iter().map(|(_, e, b)| e / b).fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) });
    let ok = !r.displacements.is_empty() && r.displacements.iter().all(|(_, e, b)| e < b);
    let bad: Vec<&str> = r.displacements.iter().filter(|(_, e, b)| !(e < b)).map(|(l, _, _)| l.as_str()).collect();
    let detail = format!("{} runs, max eps_x / (h/4) = {worst:.3}{}", r.displacements.len(), if bad.is_empty() { String::new() } else { format!(", exceeded in {bad:?}") });
    r.line("5f", "eps_x < h/4 in every acceptance run", ok, detail);
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // The harness passes libtest flags such as `--list`; only run on a plain invocation.
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let expensive = args.iter().any(|a| a == "--expensive");
    let mut r = Report::default();
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r, expensive);
    criterion_4(&mut r);
    criterion_5(&mut r);
    if r.failed > 0 {
        println!("{} acceptance criteria failed", r.failed);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
