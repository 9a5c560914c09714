use std::path::PathBuf;

use iim_core::bench::{plan, run, sweep, ExperimentConfig, ExperimentKind, SweepAxis};
use iim_core::controllers::{ControllerMode, Coupling};
use iim_core::normal_fields::NormalKind;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iim-bench-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn short_pressurized(n: usize, steps: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::PressurizedCylinder);
    c.n = Some(n);
    c.run.max_steps = Some(steps);
    c
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = ExperimentConfig::new(ExperimentKind::ChannelPoiseuille);
    c.n = Some(24);
    c.normal = Some(NormalKind::Icw);
    c.geometry.p_out = Some(9.0);
    c.controller.coupling = Some(Coupling::Lagged);
    let text = c.to_toml().unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_toml("experiment = \"pressurized_cylinder\"\n[fluid]\nviscosity = 1.0\n").unwrap_err();
    assert!(err.to_string().contains("viscosity"), "{err}");
    assert!("vortex".parse::<ExperimentKind>().is_err());
    assert_eq!("channel_poiseuille".parse::<ExperimentKind>().unwrap(), ExperimentKind::ChannelPoiseuille);
}

#[test]
fn overrides_use_dotted_keys() {
    let base = ExperimentConfig::new(ExperimentKind::PressurizedCylinder);
    let c = base
        .with_overrides(&["controller.p_target=10".into(), "n=16".into(), "normal=\"flat\"".into()])
        .unwrap();
    assert_eq!(c.controller.p_target, Some(10.0));
    assert_eq!(c.n, Some(16));
    assert_eq!(c.normal, Some(NormalKind::Flat));
    assert!(base.with_overrides(&["controller.gain=1".into()]).is_err());
    assert!(base.with_overrides(&["n".into()]).is_err());
    assert!(base.with_overrides(&["n=\"many\"".into()]).is_err());
}

#[test]
fn pressurized_defaults_follow_the_parameter_recipe() {
    let r = ExperimentConfig::new(ExperimentKind::PressurizedCylinder).resolve().unwrap();
    assert_eq!(r.n, 32);
    assert_eq!(r.h, 2.0 / 32.0);
    assert!((r.dt - r.h / 500.0).abs() < 1e-18);
    assert_eq!(r.kappa, 1.5 * 32.0 * 1e3);
    assert_eq!((r.rho, r.mu), (1.0, 0.2));
    let s = r.source.unwrap();
    assert_eq!((s.p_target, s.resistance, s.gamma), (100.0, 450.0, 2e-3));
    assert!((s.r_src - 0.4).abs() < 1e-15);
    assert_eq!(s.mode, ControllerMode::Pd);
    let flat = ExperimentConfig {
        normal: Some(NormalKind::Flat),
        ..ExperimentConfig::new(ExperimentKind::PressurizedCylinder)
    };
    assert_eq!(flat.resolve().unwrap().source.unwrap().mode, ControllerMode::Ode);
}

#[test]
fn cylinder_defaults_scale_penalty_with_grid() {
    let r = ExperimentConfig::new(ExperimentKind::CylinderFlow).resolve().unwrap();
    assert_eq!(r.domain, [[-15.0, -30.0], [45.0, 30.0]]);
    assert!(r.diameter / r.h >= 12.0);
    assert!((r.mu - 1.0 / 200.0).abs() < 1e-18);
    assert!((r.dt - r.h / 20.0).abs() < 1e-18);
    assert!((r.kappa * r.h - 3.413).abs() < 1e-12);
    assert!((r.eta * r.h - 0.025).abs() < 1e-12);
}

#[test]
fn invalid_values_are_reported() {
    let mut c = short_pressurized(16, 1);
    c.fluid.mu = Some(-1.0);
    assert!(c.resolve().is_err());
    let mut c = short_pressurized(3, 1);
    assert!(c.resolve().is_err());
    c.n = Some(16);
    c.controller.resistance = Some(0.0);
    assert!(c.resolve().is_err());
}

#[test]
fn plan_describes_the_run() {
    let r = short_pressurized(16, 10).resolve().unwrap();
    let p = plan(&r);
    assert!(p.contains("pressurized_cylinder"));
    assert!(p.contains("16x16"));
    assert!(p.contains("p_target 100"));
}

#[test]
fn summary_and_files_are_written() {
    let dir = scratch_dir("schema");
    let mut c = short_pressurized(16, 20);
    c.output.dir = Some(dir.display().to_string());
    c.output.vtk_every = 10;
    let art = run(&c).unwrap();
    let s = &art.summary;
    assert_eq!(s.steps, 20);
    assert!(s.q_steady.is_some());
    assert!(s.eps_x_max.is_some());
    assert_eq!(s.config.kappa, 1.5 * 16.0 * 1e3);

    let summary = std::fs::read_to_string(dir.join("summary.toml")).unwrap();
    for key in ["q_steady", "eps_x_max", "eps_x_bound", "[config]", "kappa", "dt"] {
        assert!(summary.contains(key), "missing {key}");
    }
    let csv = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "step,t,c_d,c_l,q,p_bar,e,eps_x,flow_rate,krylov_iterations,krylov_residual,div_residual,cfl"
    );
    assert_eq!(csv.lines().count(), 21);
    assert!(dir.join("step_0000010.vtk").exists());
    assert!(dir.join("step_0000020.vtk").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_configs_give_identical_series() {
    let c = short_pressurized(16, 30);
    let a = run(&c).unwrap().series_csv().unwrap();
    let b = run(&c).unwrap().series_csv().unwrap();
    assert_eq!(a, b);
}

#[test]
fn pressure_by_normal_sweep_has_twelve_rows() {
    let base = short_pressurized(16, 3);
    let rows = sweep(
        &base,
        &[SweepAxis::Pressure(vec![0.1, 1.0, 10.0, 100.0]), SweepAxis::Normal(NormalKind::ALL.to_vec())],
    )
    .unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.error.is_none() && r.steps == 3));
    let mut seen: Vec<(u64, NormalKind)> = rows.iter().map(|r| ((r.pressure.unwrap() * 10.0) as u64, r.normal)).collect();
    seen.sort_by_key(|(p, k)| (*p, k.name()));
    seen.dedup();
    assert_eq!(seen.len(), 12);
}

#[test]
fn grid_by_normal_sweep_has_nine_rows() {
    let mut base = short_pressurized(16, 2);
    base.controller.p_target = Some(10.0);
    let rows = sweep(&base, &[SweepAxis::Grid(vec![16, 32, 64]), SweepAxis::Normal(NormalKind::ALL.to_vec())]).unwrap();
    assert_eq!(rows.len(), 9);
    for n in [16, 32, 64] {
        assert_eq!(rows.iter().filter(|r| r.n == n).count(), 3);
    }
    assert!(rows.iter().all(|r| r.pressure == Some(10.0)));
}

#[test]
fn empty_sweep_axes_are_rejected() {
    let base = short_pressurized(16, 1);
    assert!(sweep(&base, &[]).is_err());
    assert!(sweep(&base, &[SweepAxis::Grid(vec![])]).is_err());
}

#[test]
fn channel_pressure_axis_sets_wall_offset() {
    let mut base = ExperimentConfig::new(ExperimentKind::ChannelPoiseuille);
    base.n = Some(20);
    base.run.max_steps = Some(2);
    let rows = sweep(&base, &[SweepAxis::Pressure(vec![0.0, 9.0])]).unwrap();
    assert_eq!(rows.iter().map(|r| r.pressure).collect::<Vec<_>>(), vec![Some(0.0), Some(9.0)]);
}

#[test]
fn reduced_cylinder_flow_emits_coefficients() {
    let mut c = ExperimentConfig::new(ExperimentKind::CylinderFlow);
    c.domain = Some([[-3.0, -4.0], [9.0, 4.0]]);
    c.n = Some(96);
    c.run.t_end = Some(0.5);
    let art = run(&c).unwrap();
    let s = &art.summary;
    assert!(s.steps > 0);
    assert!(s.c_d_mean.is_some_and(f64::is_finite));
    assert!(s.c_l_mean.is_some_and(f64::is_finite));
    assert!(art.series.iter().all(|r| r.c_d.is_finite() && r.c_l.is_finite()));
    // Too short to shed; the Strouhal number is reported only with a period.
    assert_eq!(s.strouhal.is_some(), s.c_l_amplitude.is_some());
}

#[test]
fn normals_report_orders_methods_on_curved_shapes() {
    let art = run(&ExperimentConfig::new(ExperimentKind::NormalsReport)).unwrap();
    for shape in ["circle", "ellipse", "sphere"] {
        let err = |k: NormalKind| art.normals.iter().find(|r| r.shape == shape && r.method == k).unwrap().mean_error;
        assert!(err(NormalKind::Icw) < err(NormalKind::Flat), "{shape}");
        assert!(err(NormalKind::Projected) < err(NormalKind::Flat), "{shape}");
    }
    let csv = art.normals_csv().unwrap();
    assert!(csv.starts_with("shape,method,vertices,max_error,mean_error"));
}
