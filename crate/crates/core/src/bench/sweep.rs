use serde::Serialize;

use super::{run, to_csv, ExperimentConfig, ExperimentKind, ResolvedConfig};
use crate::error::{Error, Result};
use crate::normal_fields::NormalKind;

#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    Pressure(Vec<f64>),
    Grid(Vec<usize>),
    Normal(Vec<NormalKind>),
}

impl SweepAxis {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Pressure(v) => v.len(),
            SweepAxis::Grid(v) => v.len(),
            SweepAxis::Normal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&self, k: usize, cfg: &mut ExperimentConfig) {
        match self {
            SweepAxis::Pressure(v) if cfg.experiment == ExperimentKind::ChannelPoiseuille => cfg.geometry.p_out = Some(v[k]),
            SweepAxis::Pressure(v) => cfg.controller.p_target = Some(v[k]),
            SweepAxis::Grid(v) => cfg.n = Some(v[k]),
            SweepAxis::Normal(v) => cfg.normal = Some(v[k]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Target source pressure, or the wall pressure offset for channel runs.
    pub pressure: Option<f64>,
    pub n: usize,
    pub normal: NormalKind,
    pub steps: u64,
    pub steady: bool,
    pub q_steady: Option<f64>,
    pub flow_rate_rel_error: Option<f64>,
    pub eps_x_max: Option<f64>,
    pub error: Option<String>,
}

/// Cross product of the axes; failed runs are reported in their row.
pub fn sweep(base: &ExperimentConfig, axes: &[SweepAxis]) -> Result<Vec<SweepRow>> {
    if axes.is_empty() || axes.iter().any(SweepAxis::is_empty) {
        return Err(Error::Config("sweep needs at least one axis and no empty axis".into()));
    }
    let total: usize = axes.iter().map(SweepAxis::len).product();
    let mut rows = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut cfg = base.clone();
        for a in axes {
            a.apply(idx % a.len(), &mut cfg);
            idx /= a.len();
        }
        if let Some(dir) = &base.output.dir {
            let r = cfg.resolve()?;
            cfg.output.dir = Some(format!("{dir}/{}_n{}_p{}", r.normal.name(), r.n, pressure_of(&r).unwrap_or(0.0)));
        }
        let resolved = cfg.resolve()?;
        let mut row = SweepRow {
            pressure: pressure_of(&resolved),
            n: resolved.n,
            normal: resolved.normal,
            steps: 0,
            steady: false,
            q_steady: None,
            flow_rate_rel_error: None,
            eps_x_max: None,
            error: None,
        };
        match run(&cfg) {
            Ok(a) => {
                row.steps = a.summary.steps;
                row.steady = a.summary.steady;
                row.q_steady = a.summary.q_steady;
                row.flow_rate_rel_error = a.summary.flow_rate_rel_error;
                row.eps_x_max = a.summary.eps_x_max;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    Ok(rows)
}

fn pressure_of(r: &ResolvedConfig) -> Option<f64> {
    match r.experiment {
        ExperimentKind::ChannelPoiseuille => Some(r.p_out),
        _ => r.source.as_ref().map(|s| s.p_target),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    to_csv(rows)
}
