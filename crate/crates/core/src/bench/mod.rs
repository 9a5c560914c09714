//! Configuration-driven experiment runner.

mod config;
mod sweep;

pub use config::*;
pub use sweep::{sweep, sweep_csv, SweepAxis, SweepRow};

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::controllers::{balanced_profile, SteadyCriterion};
use crate::diagnostics::{self, PoiseuilleGeometry};
use crate::error::{Error, Result};
use crate::flow_solver::{FluidParams, InterfaceModel, PressureGauge, SolverState, SourceModel, StepReport};
use crate::jump_model::PenaltyParams;
use crate::mac_grid::{output, BoundarySpec, Grid, GridField, SideCondition, StaggeredState, VelocityProfile};
use crate::normal_fields::{normal_accuracy_report, AnalyticShape, NormalField, NormalKind};
use crate::surface_mesh::{generators, MassMatrix};

/// One line of the per-step series CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub step: u64,
    pub t: f64,
    pub c_d: f64,
    pub c_l: f64,
    pub q: f64,
    pub p_bar: f64,
    pub e: f64,
    pub eps_x: f64,
    pub flow_rate: f64,
    pub krylov_iterations: usize,
    pub krylov_residual: f64,
    pub div_residual: f64,
    pub cfl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalsRow {
    pub shape: String,
    pub method: NormalKind,
    pub vertices: usize,
    pub max_error: f64,
    pub mean_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub steps: u64,
    pub t_final: f64,
    pub steady: bool,
    pub q_steady: Option<f64>,
    pub p_bar_final: Option<f64>,
    pub eps_x_max: Option<f64>,
    pub eps_x_bound: f64,
    pub eps_x_ok: bool,
    pub max_div_residual: f64,
    pub max_krylov_iterations: usize,
    pub mean_krylov_iterations: f64,
    pub c_d_mean: Option<f64>,
    pub c_d_amplitude: Option<f64>,
    pub c_l_mean: Option<f64>,
    pub c_l_amplitude: Option<f64>,
    pub strouhal: Option<f64>,
    pub flow_rate: Option<f64>,
    pub flow_rate_reference: Option<f64>,
    pub flow_rate_rel_error: Option<f64>,
    pub config: ResolvedConfig,
}

impl Summary {
    fn empty(cfg: &ResolvedConfig) -> Self {
        Self {
            experiment: cfg.experiment,
            steps: 0,
            t_final: 0.0,
            steady: false,
            q_steady: None,
            p_bar_final: None,
            eps_x_max: None,
            eps_x_bound: 0.25 * cfg.h,
            eps_x_ok: true,
            max_div_residual: 0.0,
            max_krylov_iterations: 0,
            mean_krylov_iterations: 0.0,
            c_d_mean: None,
            c_d_amplitude: None,
            c_l_mean: None,
            c_l_amplitude: None,
            strouhal: None,
            flow_rate: None,
            flow_rate_reference: None,
            flow_rate_rel_error: None,
            config: cfg.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub summary: Summary,
    pub series: Vec<SeriesRow>,
    pub normals: Vec<NormalsRow>,
}

impl RunArtifacts {
    pub fn series_csv(&self) -> Result<String> {
        to_csv(&self.series)
    }

    pub fn normals_csv(&self) -> Result<String> {
        to_csv(&self.normals)
    }
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Human-readable plan of a run.
pub fn plan(cfg: &ResolvedConfig) -> String {
    let mut s = format!(
        "experiment {} on {}x{} cells, h = {:.6e}, dt = {:.6e}, normals {}\n",
        cfg.experiment.name(),
        cfg.n,
        ((cfg.domain[1][1] - cfg.domain[0][1]) / cfg.h).round(),
        cfg.h,
        cfg.dt,
        cfg.normal.name()
    );
    s += &format!(
        "rho {} mu {} kappa {:.6e} eta {:.6e}, up to {} steps (t <= {})\n",
        cfg.rho, cfg.mu, cfg.kappa, cfg.eta, cfg.max_steps, cfg.t_end
    );
    if let Some(src) = &cfg.source {
        s += &format!(
            "source: p_target {} r_src {} mode {:?} coupling {:?} R {} gamma {}\n",
            src.p_target, src.r_src, src.mode, cfg.coupling, src.resistance, src.gamma
        );
    }
    s
}

/// Runs the experiment and, if an output directory is configured, writes
/// `series.csv`, `summary.toml` and optional VTK snapshots there.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let cfg = config.resolve()?;
    let out = cfg.output_dir.as_ref().map(PathBuf::from);
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }
    let art = match cfg.experiment {
        ExperimentKind::NormalsReport => normals_report(&cfg)?,
        _ => run_flow(&cfg, out.as_deref())?,
    };
    if let Some(dir) = &out {
        std::fs::write(dir.join("summary.toml"), art.summary.to_toml()?)?;
        if !art.series.is_empty() {
            std::fs::write(dir.join("series.csv"), art.series_csv()?)?;
        }
        if !art.normals.is_empty() {
            std::fs::write(dir.join("normals.csv"), art.normals_csv()?)?;
        }
    }
    Ok(art)
}

struct Setup {
    state: SolverState,
    /// Flux window `(x, y_lo, y_hi)` for channel runs.
    flux: Option<(f64, f64, f64)>,
}

fn grid_of(cfg: &ResolvedConfig) -> Result<Grid> {
    Grid::new(cfg.domain[0], cfg.domain[1], cfg.n)
}

fn setup(cfg: &ResolvedConfig) -> Result<Setup> {
    let grid = grid_of(cfg)?;
    let params = FluidParams { rho: cfg.rho, mu: cfg.mu };
    let penalty = PenaltyParams::stationary(cfg.kappa, cfg.eta)?;
    let radius = 0.5 * cfg.diameter;
    match cfg.experiment {
        ExperimentKind::PressurizedCylinder => {
            let spec = cfg.source.clone().expect("resolved with a source");
            let mesh = generators::circle(spec.center, radius, cfg.n_elements, 0.0);
            let sink_radius = 1.5 * radius;
            let profile = balanced_profile(&spec, &grid, sink_radius)?;
            let exterior: Vec<bool> = (0..grid.np())
                .map(|c| {
                    let x = grid.cell_center(c % grid.nx, c / grid.nx);
                    (x[0] - spec.center[0]).hypot(x[1] - spec.center[1]) >= sink_radius
                })
                .collect();
            let mut state = SolverState::new(StaggeredState::zeros(grid), BoundarySpec::all(SideCondition::FreeSlip), params, cfg.dt)?
                .with_interface(InterfaceModel::new(mesh, cfg.normal, penalty)?)
                .with_source(SourceModel::new(spec, profile, cfg.coupling));
            state.options.gauge = PressureGauge::RegionMeanZero(exterior);
            state.options.krylov.rel_tol = cfg.krylov_tol;
            Ok(Setup { state, flux: None })
        }
        ExperimentKind::ChannelPoiseuille => {
            let len = cfg.domain[1][0] - cfg.domain[0][0];
            // Walls sit inside cells rather than on grid lines.
            let yc = 0.5 * (cfg.domain[0][1] + cfg.domain[1][1]) + 0.4 * cfg.h;
            let a = cfg.half_width;
            let segs = ((len / (cfg.m_fac * cfg.h)).round() as usize).max(1);
            let mesh = generators::channel_walls(cfg.domain[0][0], cfg.domain[1][0], yc, a, segs);
            let open = [yc - a, yc + a];
            let spec = BoundarySpec {
                left: SideCondition::PressureInlet {
                    pressure: cfg.p_out + cfg.dp,
                    open,
                },
                right: SideCondition::PressureInlet { pressure: cfg.p_out, open },
                bottom: SideCondition::Outflow,
                top: SideCondition::Outflow,
            };
            let ends = [0, segs, segs + 1, 2 * segs + 1];
            let mut state = SolverState::new(StaggeredState::zeros(grid), spec, params, cfg.dt)?
                .with_interface(InterfaceModel::new(mesh, cfg.normal, penalty)?.with_pinned(&ends)?);
            state.options.krylov.rel_tol = cfg.krylov_tol;
            let xm = 0.5 * (cfg.domain[0][0] + cfg.domain[1][0]);
            Ok(Setup {
                state,
                flux: Some((xm, yc - a, yc + a)),
            })
        }
        ExperimentKind::CylinderFlow => {
            let mesh = generators::circle([0.0, 0.0], radius, cfg.n_elements, 0.0);
            let l = cfg.domain[1][1] - cfg.domain[0][1];
            let spec = BoundarySpec {
                left: SideCondition::Velocity(VelocityProfile::perturbed_inflow(l)),
                right: SideCondition::Outflow,
                bottom: SideCondition::FreeSlip,
                top: SideCondition::FreeSlip,
            };
            // Free stream outside the body, fluid at rest inside it.
            let mut fluid = StaggeredState::zeros(grid);
            fluid.u = GridField::from_fn(grid.u_shape(), |i, j| {
                let x = grid.u_pos(i, j);
                if x[0].hypot(x[1]) < radius {
                    0.0
                } else {
                    1.0
                }
            });
            let mut state = SolverState::new(fluid, spec, params, cfg.dt)?.with_interface(InterfaceModel::new(mesh, cfg.normal, penalty)?);
            state.options.krylov.rel_tol = cfg.krylov_tol;
            Ok(Setup { state, flux: None })
        }
        ExperimentKind::NormalsReport => Err(Error::Config("normals_report has no flow setup".into())),
    }
}

fn run_flow(cfg: &ResolvedConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    let Setup { mut state, flux } = setup(cfg)?;
    let mut summary = Summary::empty(cfg);
    let mut series = Vec::new();
    let mut q_series = Vec::new();
    let mut flow_series = Vec::new();
    let (mut times, mut cd, mut cl) = (Vec::new(), Vec::new(), Vec::new());
    let steady = SteadyCriterion {
        window: cfg.steady_window,
        rel_tol: cfg.steady_rel_tol,
        abs_tol: cfg.steady_abs_tol,
    };
    let mut iter_total = 0usize;
    let mut eps_max = 0.0f64;
    let mut steady_value = None;
    for k in 0..cfg.max_steps {
        let r: StepReport = state.step().map_err(|e| with_context(e, cfg, k + 1))?;
        iter_total += r.krylov_iterations;
        summary.max_krylov_iterations = summary.max_krylov_iterations.max(r.krylov_iterations);
        summary.max_div_residual = summary.max_div_residual.max(r.divergence_residual);
        eps_max = eps_max.max(r.displacement_error);
        let (c_d, c_l) = diagnostics::coefficients(r.force_integral, cfg.rho, 1.0, cfg.diameter)?;
        let flow = match flux {
            Some((x, lo, hi)) => diagnostics::column_flow_rate(&state.fluid.grid, &state.fluid.u, x, lo, hi)?,
            None => 0.0,
        };
        times.push(r.t);
        cd.push(c_d);
        cl.push(c_l);
        q_series.push(r.q_strength);
        flow_series.push(flow);
        if k % cfg.csv_every == 0 || k + 1 == cfg.max_steps {
            series.push(SeriesRow {
                step: r.step,
                t: r.t,
                c_d,
                c_l,
                q: r.q_strength,
                p_bar: r.p_bar,
                e: r.source_error,
                eps_x: r.displacement_error,
                flow_rate: flow,
                krylov_iterations: r.krylov_iterations,
                krylov_residual: r.krylov_residual,
                div_residual: r.divergence_residual,
                cfl: r.cfl,
            });
        }
        if let Some(dir) = out {
            if cfg.vtk_every > 0 && (k + 1) % cfg.vtk_every == 0 {
                output::write_vtk(&state.fluid, &dir.join(format!("step_{:07}.vtk", k + 1)))?;
            }
        }
        if k + 1 >= cfg.min_steps {
            let watched = match cfg.experiment {
                ExperimentKind::PressurizedCylinder => Some(&q_series),
                ExperimentKind::ChannelPoiseuille => Some(&flow_series),
                _ => None,
            };
            if let Some(v) = watched.and_then(|s| steady.steady_value(s)) {
                steady_value = Some(v);
                break;
            }
        }
    }
    let steps = state.step;
    summary.steps = steps;
    summary.t_final = state.fluid.t;
    summary.steady = steady_value.is_some();
    summary.mean_krylov_iterations = if steps > 0 { iter_total as f64 / steps as f64 } else { 0.0 };
    summary.eps_x_max = Some(eps_max);
    summary.eps_x_ok = eps_max < summary.eps_x_bound;
    match cfg.experiment {
        ExperimentKind::PressurizedCylinder => {
            summary.q_steady = Some(steady_value.unwrap_or(diagnostics::leakage_flow_rate(&q_series, cfg.steady_window)?));
            summary.p_bar_final = series.last().map(|r| r.p_bar);
        }
        ExperimentKind::ChannelPoiseuille => {
            let q = steady_value.unwrap_or(diagnostics::leakage_flow_rate(&flow_series, cfg.steady_window)?);
            let len = cfg.domain[1][0] - cfg.domain[0][0];
            let reference = diagnostics::poiseuille_reference(cfg.half_width, cfg.dp, cfg.mu, len, PoiseuilleGeometry::Channel2d)?;
            summary.flow_rate = Some(q);
            summary.flow_rate_reference = Some(reference);
            summary.flow_rate_rel_error = Some((q - reference).abs() / reference.abs());
        }
        ExperimentKind::CylinderFlow => {
            if let Ok(period) = diagnostics::dominant_period(&times, &cl, cfg.discard_fraction) {
                let (m, a) = diagnostics::mean_and_amplitude(&times, &cd, period, 5.0)?;
                summary.c_d_mean = Some(m);
                summary.c_d_amplitude = Some(a);
                let (m, a) = diagnostics::mean_and_amplitude(&times, &cl, period, 5.0)?;
                summary.c_l_mean = Some(m);
                summary.c_l_amplitude = Some(a);
                summary.strouhal = Some(cfg.diameter / period);
            } else if !cd.is_empty() {
                // No shedding detected: report means after the discarded transient.
                let start = ((cd.len() as f64) * cfg.discard_fraction).floor() as usize;
                let start = start.min(cd.len() - 1);
                let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
                summary.c_d_mean = Some(mean(&cd[start..]));
                summary.c_l_mean = Some(mean(&cl[start..]));
            }
        }
        ExperimentKind::NormalsReport => {}
    }
    Ok(RunArtifacts {
        summary,
        series,
        normals: Vec::new(),
    })
}

fn with_context(e: Error, cfg: &ResolvedConfig, step: usize) -> Error {
    Error::Config(format!(
        "{} ({} normals, n = {}) aborted at step {step}: {e}",
        cfg.experiment.name(),
        cfg.normal.name(),
        cfg.n
    ))
}

/// Geometry-only comparison of the normal reconstructions.
fn normals_report(cfg: &ResolvedConfig) -> Result<RunArtifacts> {
    let mut rows = Vec::new();
    let r = 0.5 * cfg.diameter;
    let segs = cfg.n_elements;
    let mut push2 = |name: &str, mesh: crate::surface_mesh::Mesh2, shape: AnalyticShape| -> Result<()> {
        let mass = MassMatrix::assemble(&mesh)?;
        for kind in NormalKind::ALL {
            let field = NormalField::compute(kind, &mesh, &mass)?;
            let rep = normal_accuracy_report(&mesh, &field, |x| shape.normal::<2>(x))?;
            rows.push(NormalsRow {
                shape: name.to_string(),
                method: kind,
                vertices: mesh.n_vertices(),
                max_error: rep.max_error,
                mean_error: rep.mean_error,
            });
        }
        Ok(())
    };
    push2("circle", generators::circle([0.0, 0.0], r, segs, 0.0), AnalyticShape::Circle { center: [0.0, 0.0] })?;
    push2(
        "ellipse",
        generators::ellipse([0.0, 0.0], r, 0.6 * r, segs),
        AnalyticShape::Ellipse {
            center: [0.0, 0.0],
            a: r,
            b: 0.6 * r,
        },
    )?;
    let mut push3 = |name: &str, mesh: crate::surface_mesh::Mesh3, shape: AnalyticShape| -> Result<()> {
        let mass = MassMatrix::assemble(&mesh)?;
        for kind in NormalKind::ALL {
            let field = NormalField::compute(kind, &mesh, &mass)?;
            let rep = normal_accuracy_report(&mesh, &field, |x| shape.normal::<3>(x))?;
            rows.push(NormalsRow {
                shape: name.to_string(),
                method: kind,
                vertices: mesh.n_vertices(),
                max_error: rep.max_error,
                mean_error: rep.mean_error,
            });
        }
        Ok(())
    };
    let subdiv = if cfg.n >= 32 { 3 } else { 2 };
    push3("sphere", generators::icosphere([0.0; 3], r, subdiv), AnalyticShape::Sphere { center: [0.0; 3] })?;
    let n_theta = segs.max(8);
    push3(
        "tube",
        generators::cylinder_tube([0.0; 3], r, 4.0 * r, n_theta, 8),
        AnalyticShape::Cylinder { axis: [0.0, 0.0] },
    )?;
    Ok(RunArtifacts {
        summary: Summary::empty(cfg),
        series: Vec::new(),
        normals: rows,
    })
}

/// Writes the pressure field of a state as CSV rows `x,y,value`.
pub fn pressure_csv(grid: &Grid, p: &GridField) -> String {
    output::csv_string(p, |i, j| grid.cell_center(i, j))
}
