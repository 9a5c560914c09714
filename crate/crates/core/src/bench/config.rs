use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerMode, Coupling, SourceSpec};
use crate::error::{Error, Result};
use crate::normal_fields::NormalKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CylinderFlow,
    PressurizedCylinder,
    ChannelPoiseuille,
    NormalsReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CylinderFlow => "cylinder_flow",
            ExperimentKind::PressurizedCylinder => "pressurized_cylinder",
            ExperimentKind::ChannelPoiseuille => "channel_poiseuille",
            ExperimentKind::NormalsReport => "normals_report",
        }
    }

    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::CylinderFlow,
        ExperimentKind::PressurizedCylinder,
        ExperimentKind::ChannelPoiseuille,
        ExperimentKind::NormalsReport,
    ];
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown experiment {s:?} ({})", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidConfig {
    pub rho: Option<f64>,
    pub mu: Option<f64>,
}

/// `dt` wins over `dt_divisor`, which gives `dt = h / dt_divisor`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt: Option<f64>,
    pub dt_divisor: Option<f64>,
}

/// Explicit `kappa`/`eta` win over the grid rules `c_kappa / h`, `c_eta / h`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyConfig {
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    pub c_kappa: Option<f64>,
    pub c_eta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub mode: Option<ControllerMode>,
    pub p_target: Option<f64>,
    pub r_src: Option<f64>,
    pub resistance: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub coupling: Option<Coupling>,
    pub q_max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Cylinder diameter.
    pub diameter: Option<f64>,
    /// Lagrangian element size over grid spacing.
    pub m_fac: Option<f64>,
    /// Channel half-width.
    pub half_width: Option<f64>,
    /// Channel pressure drop.
    pub dp: Option<f64>,
    /// Pressure added at both channel ends.
    pub p_out: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub max_steps: Option<usize>,
    pub t_end: Option<f64>,
    /// Steps before steady detection starts.
    pub min_steps: Option<usize>,
    pub steady_window: Option<usize>,
    pub steady_rel_tol: Option<f64>,
    pub steady_abs_tol: Option<f64>,
    /// Fraction of the lift series dropped before frequency analysis.
    pub discard_fraction: Option<f64>,
    pub krylov_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// VTK snapshot cadence in steps, 0 for none.
    pub vtk_every: usize,
    /// Write every k-th step to the series CSV.
    pub csv_every: Option<usize>,
}

/// User-facing experiment description. Unset values take per-experiment
/// defaults in [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub domain: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub normal: Option<NormalKind>,
    #[serde(default)]
    pub fluid: FluidConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Fully determined parameters of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub domain: [[f64; 2]; 2],
    pub h: f64,
    pub normal: NormalKind,
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    pub kappa: f64,
    pub eta: f64,
    pub diameter: f64,
    pub m_fac: f64,
    pub n_elements: usize,
    pub half_width: f64,
    pub dp: f64,
    pub p_out: f64,
    pub source: Option<SourceSpec>,
    pub coupling: Coupling,
    pub max_steps: usize,
    pub t_end: f64,
    pub min_steps: usize,
    pub steady_window: usize,
    pub steady_rel_tol: f64,
    pub steady_abs_tol: f64,
    pub discard_fraction: f64,
    pub krylov_tol: f64,
    pub output_dir: Option<String>,
    pub vtk_every: usize,
    pub csv_every: usize,
    pub seed: u64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be non-negative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            n: None,
            domain: None,
            normal: None,
            fluid: Default::default(),
            time: Default::default(),
            penalty: Default::default(),
            controller: Default::default(),
            geometry: Default::default(),
            run: Default::default(),
            output: Default::default(),
            seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid experiment config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key=value` overrides with dotted keys, e.g. `controller.p_target=10`.
    /// Values are parsed as TOML, falling back to a plain string.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self> {
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))?;
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let mut node = &mut doc;
            let parts: Vec<&str> = key.trim().split('.').collect();
            for (k, part) in parts.iter().enumerate() {
                let table = node
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("`{key}`: `{part}` is not inside a table")))?;
                if k + 1 == parts.len() {
                    table.insert(part.to_string(), value.clone());
                    break;
                }
                node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
            }
        }
        doc.try_into().map_err(|e| Error::Config(format!("override rejected: {e}")))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        use ExperimentKind::*;
        let kind = self.experiment;
        let n = self.n.unwrap_or(match kind {
            CylinderFlow => 720,
            PressurizedCylinder => 32,
            ChannelPoiseuille => 40,
            NormalsReport => 32,
        });
        if n < 4 {
            return Err(Error::Config(format!("grid size n must be at least 4, got {n}")));
        }
        let domain = self.domain.unwrap_or(match kind {
            CylinderFlow => [[-15.0, -30.0], [45.0, 30.0]],
            PressurizedCylinder | NormalsReport => [[-1.0, -1.0], [1.0, 1.0]],
            ChannelPoiseuille => [[0.0, 0.0], [5.0, 5.0]],
        });
        let width = domain[1][0] - domain[0][0];
        let height = domain[1][1] - domain[0][1];
        positive("domain width", width)?;
        positive("domain height", height)?;
        let h = width / n as f64;
        let ny = height / h;
        if (ny - ny.round()).abs() > 1e-9 * ny.max(1.0) {
            return Err(Error::Config(format!("domain height {height} is not a multiple of h = {h}")));
        }
        let normal = self.normal.unwrap_or(NormalKind::Projected);
        let rho = positive("fluid.rho", self.fluid.rho.unwrap_or(1.0))?;
        let mu = positive(
            "fluid.mu",
            self.fluid.mu.unwrap_or(match kind {
                CylinderFlow => 1.0 / 200.0,
                PressurizedCylinder | NormalsReport => 0.2,
                ChannelPoiseuille => 1.0,
            }),
        )?;
        let dt = match (self.time.dt, self.time.dt_divisor) {
            (Some(dt), _) => positive("time.dt", dt)?,
            (None, Some(d)) => h / positive("time.dt_divisor", d)?,
            (None, None) => match kind {
                CylinderFlow => h / 20.0,
                PressurizedCylinder | NormalsReport => h / 500.0,
                ChannelPoiseuille => 1e-3,
            },
        };
        let kappa = match (self.penalty.kappa, self.penalty.c_kappa) {
            (Some(k), _) => non_negative("penalty.kappa", k)?,
            (None, Some(c)) => non_negative("penalty.c_kappa", c)? / h,
            (None, None) => match kind {
                CylinderFlow => 3.413 / h,
                PressurizedCylinder | NormalsReport => 1.5 * n as f64 * 1e3,
                ChannelPoiseuille => 1e5,
            },
        };
        let eta = match (self.penalty.eta, self.penalty.c_eta) {
            (Some(e), _) => non_negative("penalty.eta", e)?,
            (None, Some(c)) => non_negative("penalty.c_eta", c)? / h,
            (None, None) => match kind {
                CylinderFlow => 0.025 / h,
                PressurizedCylinder | NormalsReport => 0.0,
                ChannelPoiseuille => 10.0,
            },
        };
        let g = &self.geometry;
        let diameter = positive("geometry.diameter", g.diameter.unwrap_or(1.0))?;
        let m_fac = positive("geometry.m_fac", g.m_fac.unwrap_or(2.0))?;
        let n_elements = crate::surface_mesh::generators::circle_segments(0.5 * diameter, h, m_fac);
        let half_width = positive("geometry.half_width", g.half_width.unwrap_or(1.0))?;
        let dp = g.dp.unwrap_or(1.0);
        let p_out = g.p_out.unwrap_or(0.0);
        if !dp.is_finite() || !p_out.is_finite() {
            return Err(Error::Config("geometry.dp and geometry.p_out must be finite".into()));
        }

        let source = if kind == PressurizedCylinder {
            let c = &self.controller;
            let mode = c.mode.unwrap_or(ControllerMode::default_for(normal));
            let mut s = SourceSpec::new([0.0, 0.0], c.r_src.unwrap_or(0.4 * diameter), c.p_target.unwrap_or(100.0), mode);
            s.resistance = c.resistance.unwrap_or(s.resistance);
            s.gamma = c.gamma.unwrap_or(s.gamma);
            s.tau = c.tau;
            s.q_max = c.q_max.unwrap_or(s.q_max);
            s.validate()?;
            Some(s)
        } else {
            None
        };

        let r = &self.run;
        let t_end = r.t_end.unwrap_or(match kind {
            CylinderFlow => 200.0,
            PressurizedCylinder => 8.0,
            ChannelPoiseuille => 8.0,
            NormalsReport => 0.0,
        });
        non_negative("run.t_end", t_end)?;
        let max_steps = r.max_steps.unwrap_or_else(|| (t_end / dt).ceil() as usize);
        let discard_fraction = r.discard_fraction.unwrap_or(0.5);
        if !(0.0..1.0).contains(&discard_fraction) {
            return Err(Error::Config(format!("run.discard_fraction must be in [0, 1), got {discard_fraction}")));
        }
        let steady_window = r.steady_window.unwrap_or(500);
        if steady_window == 0 {
            return Err(Error::Config("run.steady_window must be positive".into()));
        }
        let csv_every = self.output.csv_every.unwrap_or(1);
        if csv_every == 0 {
            return Err(Error::Config("output.csv_every must be positive".into()));
        }
        if let CylinderFlow | PressurizedCylinder = kind {
            if diameter >= width.min(height) {
                return Err(Error::Config("cylinder does not fit in the domain".into()));
            }
        }
        Ok(ResolvedConfig {
            experiment: kind,
            n,
            domain,
            h,
            normal,
            rho,
            mu,
            dt,
            kappa,
            eta,
            diameter,
            m_fac,
            n_elements,
            half_width,
            dp,
            p_out,
            source,
            coupling: self.controller.coupling.unwrap_or_default(),
            max_steps,
            t_end,
            min_steps: r.min_steps.unwrap_or(2 * steady_window),
            steady_window,
            steady_rel_tol: positive("run.steady_rel_tol", r.steady_rel_tol.unwrap_or(1e-4))?,
            steady_abs_tol: non_negative("run.steady_abs_tol", r.steady_abs_tol.unwrap_or(1e-12))?,
            discard_fraction,
            krylov_tol: positive("run.krylov_tol", r.krylov_tol.unwrap_or(1e-10))?,
            output_dir: self.output.dir.clone(),
            vtk_every: self.output.vtk_every,
            csv_every,
            seed: self.seed,
        })
    }
}
