use proptest::prelude::*;

use iim_core::iim_ops::{corrected_first_difference, corrected_second_difference, find_intersections, spread, StencilSide};
use iim_core::jump_model::{build_jump_fields, project_samples, JumpFields};
use iim_core::mac_grid::{divergence, gradient, BoundarySpec, BoundaryState, Grid, GridField, SideCondition};
use iim_core::normal_fields::{normal_accuracy_report, AnalyticShape, NormalField, NormalKind};
use iim_core::surface_mesh::quadrature::{self, Rule};
use iim_core::surface_mesh::{generators, InterfaceMesh, MassMatrix, Mesh2, Winding};

fn rotate(x: &[f64; 2], theta: f64, shift: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] - s * x[1] + shift[0], s * x[0] + c * x[1] + shift[1]]
}

/// Samples `(e, local, w * f(x))` on the quartic rule, ready for projection.
fn samples<const D: usize>(mesh: &InterfaceMesh<D>, f: impl Fn(&[f64; D]) -> f64) -> Vec<(usize, [f64; D], f64)> {
    let rule = quadrature::rule::<D>(Rule::Quartic);
    let mut out = Vec::new();
    for e in 0..mesh.n_elements() {
        let measure = mesh.element_geometry(e, false).unwrap().measure;
        for q in &rule {
            let x = mesh.eval_reference(e, &q.local).unwrap();
            out.push((e, q.local, q.weight * measure * f(&x)));
        }
    }
    out
}

/// Samples of the P1 interpolant of nodal values.
fn nodal_samples<const D: usize>(mesh: &InterfaceMesh<D>, values: &[f64]) -> Vec<(usize, [f64; D], f64)> {
    let rule = quadrature::rule::<D>(Rule::Quartic);
    let mut out = Vec::new();
    for e in 0..mesh.n_elements() {
        let measure = mesh.element_geometry(e, false).unwrap().measure;
        let el = mesh.element(e).unwrap();
        for q in &rule {
            let v: f64 = (0..D).map(|a| q.local[a] * values[el[a]]).sum();
            out.push((e, q.local, q.weight * measure * v));
        }
    }
    out
}

/// Ellipse with irregular vertex spacing.
fn wobbly_ellipse(n: usize, a: f64, b: f64, jitter: &[f64]) -> Mesh2 {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * (k as f64 + 0.4 * jitter[k % jitter.len()]) / n as f64;
            [a * t.cos(), b * t.sin()]
        })
        .collect();
    let els = (0..n).map(|k| [k, (k + 1) % n]).collect();
    InterfaceMesh::new(pts, els, Winding::Ccw).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_matrix_is_spd_and_integrates_one(
        n in 3usize..60,
        a in 0.2f64..3.0,
        b in 0.2f64..3.0,
        jitter in prop::collection::vec(-1.0f64..1.0, 1..8),
        x in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        let mesh = wobbly_ellipse(n, a, b, &jitter);
        let mass = MassMatrix::assemble(&mesh).unwrap();
        let m = mass.matrix().to_dense();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m[i][j], m[j][i]);
            }
        }
        let total: f64 = mass.row_sums().iter().sum();
        prop_assert!((total - mesh.reference_measure()).abs() < 1e-12 * total);
        let xs = &x[..n];
        let mx = mass.matrix().matvec(xs);
        let q: f64 = xs.iter().zip(&mx).map(|(p, r)| p * r).sum();
        let norm2: f64 = xs.iter().map(|v| v * v).sum();
        prop_assert!(q > 0.0 || norm2 == 0.0);
    }

    #[test]
    fn projection_reproduces_p1_and_is_idempotent(
        n in 3usize..50,
        jitter in prop::collection::vec(-1.0f64..1.0, 1..8),
        nodal in prop::collection::vec(-5.0f64..5.0, 50),
    ) {
        let mesh = wobbly_ellipse(n, 1.3, 0.7, &jitter);
        let mass = MassMatrix::assemble(&mesh).unwrap();
        let values = &nodal[..n];
        let p = project_samples(&mesh, &mass, &nodal_samples(&mesh, values)).unwrap();
        for (u, v) in p.iter().zip(values) {
            prop_assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
        }
        let once = project_samples(&mesh, &mass, &samples(&mesh, |x| (3.0 * x[0]).sin() + x[1] * x[1])).unwrap();
        let twice = project_samples(&mesh, &mass, &nodal_samples(&mesh, &once)).unwrap();
        for (u, v) in once.iter().zip(&twice) {
            prop_assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn smoothed_normals_are_radial_on_uniform_polygons(
        n in 3usize..200,
        r in 0.01f64..100.0,
        phase in 0.0f64..std::f64::consts::TAU,
        cx in -10.0f64..10.0,
        cy in -10.0f64..10.0,
    ) {
        let mesh = generators::circle([cx, cy], r, n, phase);
        let mass = MassMatrix::assemble(&mesh).unwrap();
        for kind in [NormalKind::Icw, NormalKind::Projected] {
            let field = NormalField::compute(kind, &mesh, &mass).unwrap();
            for (x, nrm) in mesh.current().iter().zip(field.nodal_normals()) {
                let radial = [(x[0] - cx) / r, (x[1] - cy) / r];
                prop_assert!((nrm[0] - radial[0]).abs() < 1e-12 && (nrm[1] - radial[1]).abs() < 1e-12, "{:?}", kind);
            }
        }
    }

    #[test]
    fn smoothed_normals_are_continuous_at_vertices(
        n in 3usize..40,
        jitter in prop::collection::vec(-1.0f64..1.0, 1..8),
    ) {
        let mesh = wobbly_ellipse(n, 2.0, 0.5, &jitter);
        let mass = MassMatrix::assemble(&mesh).unwrap();
        for kind in [NormalKind::Icw, NormalKind::Projected] {
            let field = NormalField::compute(kind, &mesh, &mass).unwrap();
            for e in 0..n {
                let next = (e + 1) % n;
                let end = field.eval_normal(&mesh, e, &[0.0, 1.0]).unwrap();
                let start = field.eval_normal(&mesh, next, &[1.0, 0.0]).unwrap();
                prop_assert_eq!(end, start);
            }
        }
    }

    #[test]
    fn normals_and_jumps_are_frame_invariant(
        n in 4usize..30,
        jitter in prop::collection::vec(-1.0f64..1.0, 1..8),
        theta in 0.0f64..std::f64::consts::TAU,
        sx in -5.0f64..5.0,
        sy in -5.0f64..5.0,
        forces in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 30),
    ) {
        let mesh = wobbly_ellipse(n, 1.0, 0.6, &jitter);
        let moved_pts: Vec<[f64; 2]> = mesh.reference().iter().map(|x| rotate(x, theta, [sx, sy])).collect();
        let moved = InterfaceMesh::new(moved_pts, mesh.elements().to_vec(), Winding::Ccw).unwrap();
        let f: Vec<[f64; 2]> = forces[..n].iter().map(|&(a, b)| [a, b]).collect();
        let f_moved: Vec<[f64; 2]> = f.iter().map(|x| rotate(x, theta, [0.0, 0.0])).collect();
        let mass = MassMatrix::assemble(&mesh).unwrap();
        let mass_moved = MassMatrix::assemble(&moved).unwrap();
        for kind in NormalKind::ALL {
            let a = NormalField::compute(kind, &mesh, &mass).unwrap();
            let b = NormalField::compute(kind, &moved, &mass_moved).unwrap();
            for (na, nb) in a.nodal_normals().iter().zip(b.nodal_normals()) {
                let r = rotate(na, theta, [0.0, 0.0]);
                prop_assert!((r[0] - nb[0]).abs() < 1e-12 && (r[1] - nb[1]).abs() < 1e-12);
            }
            let ja = build_jump_fields(&mesh, &mass, &f, &a, 0).unwrap();
            let jb = build_jump_fields(&moved, &mass_moved, &f_moved, &b, 0).unwrap();
            let scale = 1.0 + ja.pressure.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            for (pa, pb) in ja.pressure.iter().zip(&jb.pressure) {
                prop_assert!((pa - pb).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn corrected_differences_exact_for_piecewise_linear(
        h in 0.01f64..1.0,
        frac in 0.01f64..0.99,
        upper in any::<bool>(),
        increasing_out in any::<bool>(),
        a_in in -5.0f64..5.0,
        b_in in -5.0f64..5.0,
        a_out in -5.0f64..5.0,
        b_out in -5.0f64..5.0,
    ) {
        // Crossing at alpha on one leg of the stencil {-h, 0, h}.
        let alpha = if upper { frac * h } else { -frac * h };
        let sign = if increasing_out { 1.0 } else { -1.0 };
        let inside = |x: f64| if increasing_out { x < alpha } else { x > alpha };
        let f = |x: f64| if inside(x) { a_in + b_in * x } else { a_out + b_out * x };
        let jump = (a_out + b_out * alpha) - (a_in + b_in * alpha);
        let jump_deriv = b_out - b_in;
        let side = if upper { StencilSide::Upper } else { StencilSide::Lower };
        let d2 = corrected_second_difference(f(-h), f(0.0), f(h), h, side, sign, alpha, jump, jump_deriv);
        let scale = (a_in.abs() + a_out.abs() + h * (b_in.abs() + b_out.abs())) / (h * h);
        prop_assert!(d2.abs() <= 1e-12 * scale.max(1.0), "{}", d2);

        // First difference over the crossed leg with equal slopes.
        let g = |x: f64| if inside(x) { a_in + b_in * x } else { a_in + jump + b_in * x };
        let dir = if upper { 1.0 } else { -1.0 };
        let s = if inside(0.0) { 1.0 } else { -1.0 };
        let d1 = corrected_first_difference(g(0.0), g(dir * h), h, s, jump);
        prop_assert!((d1 - dir * b_in).abs() <= 1e-12 * (1.0 + (a_in.abs() + jump.abs()) / h));
    }

    #[test]
    fn gradient_is_minus_adjoint_of_divergence(
        nx in 2usize..24,
        aspect in 1usize..3,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new([0.0, 0.0], [aspect as f64, 1.0], nx * aspect).unwrap();
        let bc = BoundaryState::evaluate(&BoundarySpec::all(SideCondition::FreeSlip), &g, 0.0).unwrap();
        let p = GridField::from_fn(g.p_shape(), |_, _| rng.gen_range(-1.0..1.0));
        let mut u = GridField::from_fn(g.u_shape(), |_, _| rng.gen_range(-1.0..1.0));
        let mut v = GridField::from_fn(g.v_shape(), |_, _| rng.gen_range(-1.0..1.0));
        bc.impose(&g, &mut u.data, &mut v.data);
        let (gu, gv) = gradient(&g, &bc, &p).unwrap();
        let d = divergence(&g, &u, &v).unwrap();
        let h2 = g.h * g.h;
        let lhs = h2 * (dot_fields(&gu, &u) + dot_fields(&gv, &v));
        let rhs = h2 * dot_fields(&p, &d);
        prop_assert!((lhs + rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{} {}", lhs, rhs);
    }
}

fn dot_fields(a: &GridField, b: &GridField) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

#[test]
fn zero_force_gives_zero_jumps_and_corrections() {
    let mesh = generators::circle([0.5, 0.5], 0.3, 24, 0.1);
    let mass = MassMatrix::assemble(&mesh).unwrap();
    let grid = Grid::new([0.0, 0.0], [1.0, 1.0], 32).unwrap();
    let crossings = find_intersections(&mesh, &grid).unwrap();
    assert!(!crossings.is_empty());
    for kind in NormalKind::ALL {
        let normals = NormalField::compute(kind, &mesh, &mass).unwrap();
        let jumps = build_jump_fields(&mesh, &mass, &vec![[0.0; 2]; 24], &normals, 0).unwrap();
        assert!(jumps.is_zero());
        assert!(spread(&mesh, &jumps, &grid, &crossings).unwrap().is_zero());
        let explicit = JumpFields::<2>::zeros(24, kind, 0);
        assert!(spread(&mesh, &explicit, &grid, &crossings).unwrap().is_zero());
    }
}

#[test]
fn sphere_and_tube_smoothed_normals_beat_flat() {
    let shapes = [
        (generators::icosphere([0.0; 3], 1.0, 2), AnalyticShape::Sphere { center: [0.0; 3] }),
        (generators::icosphere([0.0; 3], 1.0, 3), AnalyticShape::Sphere { center: [0.0; 3] }),
        (generators::cylinder_tube([0.0; 3], 1.0, 5.0, 24, 20), AnalyticShape::Cylinder { axis: [0.0, 0.0] }),
    ];
    for (mesh, shape) in shapes {
        let mass = MassMatrix::assemble(&mesh).unwrap();
        let err = |kind| {
            let field = NormalField::compute(kind, &mesh, &mass).unwrap();
            normal_accuracy_report(&mesh, &field, |x| shape.normal::<3>(x)).unwrap().mean_error
        };
        let flat = err(NormalKind::Flat);
        assert!(err(NormalKind::Icw) < flat, "{shape:?}");
        assert!(err(NormalKind::Projected) < flat, "{shape:?}");
    }
}

#[test]
fn smoothed_normals_beat_flat_on_circles() {
    let err = |n: usize, kind| {
        let mesh = generators::circle([0.0; 2], 1.0, n, 0.0);
        let mass = MassMatrix::assemble(&mesh).unwrap();
        let field = NormalField::compute(kind, &mesh, &mass).unwrap();
        normal_accuracy_report(&mesh, &field, |x| AnalyticShape::Circle { center: [0.0; 2] }.normal::<2>(x))
            .unwrap()
            .mean_error
    };
    // Flat normals on a uniform polygon: 1 - cos(dtheta / 2) at the vertices.
    let flat = err(64, NormalKind::Flat);
    for kind in [NormalKind::Icw, NormalKind::Projected] {
        assert!(err(64, kind) < 0.5 * flat, "{kind:?}");
    }
}
