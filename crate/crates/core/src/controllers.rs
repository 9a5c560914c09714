//! Feedback control of a volumetric pressure source.
//!
//! The source field is `Q(t) k(r)` with the cosine kernel
//! `k(r) = cos(pi r / (2 r_src))` on `r < r_src`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac_grid::{GridField, Grid};
use crate::normal_fields::NormalKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    /// `Q = (e + gamma de/dt) / R`.
    Pd,
    /// `Q^{n+1} = Q^n + dt / (tau R) e^n`.
    Ode,
}

/// When the controller reads the source pressure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Uses the pressure of the previous half step.
    Lagged,
    /// Solves the law together with the pressure of the current half step,
    /// using that the momentum solve is affine in `Q`.
    #[default]
    Implicit,
}

impl ControllerMode {
    /// PD for the smoothed normal methods, ODE for flat normals.
    pub fn default_for(kind: NormalKind) -> Self {
        match kind {
            NormalKind::Flat => ControllerMode::Ode,
            NormalKind::Icw | NormalKind::Projected => ControllerMode::Pd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub center: [f64; 2],
    pub r_src: f64,
    pub p_target: f64,
    pub resistance: f64,
    pub gamma: f64,
    /// Relaxation time for ODE mode; `None` means `5 dt`.
    pub tau: Option<f64>,
    pub mode: ControllerMode,
    pub q_max: f64,
}

impl SourceSpec {
    pub const DEFAULT_RESISTANCE: f64 = 450.0;
    pub const DEFAULT_GAMMA: f64 = 2e-3;
    pub const DEFAULT_Q_MAX: f64 = 1e3;

    pub fn new(center: [f64; 2], r_src: f64, p_target: f64, mode: ControllerMode) -> Self {
        Self {
            center,
            r_src,
            p_target,
            resistance: Self::DEFAULT_RESISTANCE,
            gamma: Self::DEFAULT_GAMMA,
            tau: None,
            mode,
            q_max: Self::DEFAULT_Q_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.r_src > 0.0) {
            return bad(format!("source radius must be positive, got {}", self.r_src));
        }
        if !(self.resistance > 0.0) {
            return bad(format!("resistance must be positive, got {}", self.resistance));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return bad(format!("relaxation time must be positive, got {tau}"));
            }
        }

        if !(self.q_max > 0.0) || !self.p_target.is_finite() || !self.gamma.is_finite() {
            return bad("source cap, target pressure and gamma must be finite with a positive cap".into());
        }
        Ok(())
    }

    fn radius(&self, x: &[f64; 2]) -> f64 {
        ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt()
    }
}

/// Unit-strength kernel at cell centers.
pub fn source_profile(spec: &SourceSpec, grid: &Grid) -> GridField {
    GridField::from_fn(grid.p_shape(), |i, j| {
        let r = spec.radius(&grid.cell_center(i, j));
        if r < spec.r_src {
            (std::f64::consts::PI * r / (2.0 * spec.r_src)).cos()
        } else {
            0.0
        }
    })
}

/// Kernel minus a uniform sink on cells with `r >= sink_radius`, so the
/// cell sum is zero. Needed when every boundary face is closed.
pub fn balanced_profile(spec: &SourceSpec, grid: &Grid, sink_radius: f64) -> Result<GridField> {
    let mut k = source_profile(spec, grid);
    let sink: Vec<bool> = (0..grid.np())
        .map(|c| spec.radius(&grid.cell_center(c % grid.nx, c / grid.nx)) >= sink_radius)
        .collect();
    let n_sink = sink.iter().filter(|&&s| s).count();
    if n_sink == 0 {
        return Err(Error::Config(format!("no cells at distance >= {sink_radius} from the source center")));
    }
    if sink.iter().zip(&k.data).any(|(&s, &v)| s && v != 0.0) {
        return Err(Error::Config("sink region overlaps the source support".into()));
    }
    let total: f64 = k.data.iter().sum();
    let w = total / n_sink as f64;
    for (v, &s) in k.data.iter_mut().zip(&sink) {
        if s {
            *v = -w;
        }
    }
    Ok(k)
}

/// Cells whose centers lie strictly inside `r_src`.
pub fn source_mask(spec: &SourceSpec, grid: &Grid) -> Vec<bool> {
    (0..grid.np())
        .map(|c| spec.radius(&grid.cell_center(c % grid.nx, c / grid.nx)) < spec.r_src)
        .collect()
}

/// Arithmetic mean of `p` over the cells inside `r_src`.
pub fn measure_mean_pressure(p: &GridField, grid: &Grid, spec: &SourceSpec) -> Result<f64> {
    p.check(grid.p_shape(), "p")?;
    let mask = source_mask(spec, grid);
    let (sum, n) = p
        .data
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if n == 0 {
        return Err(Error::Config(format!("source radius {} contains no cell centers", spec.r_src)));
    }
    let m = sum / n as f64;
    if !m.is_finite() {
        return Err(Error::NonFinite("mean source pressure".into()));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ControllerSample {
    pub t: f64,
    pub p_bar: f64,
    pub error: f64,
    pub q: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ControllerState {
    pub q: f64,
    pub prev_error: Option<f64>,
    pub series: Vec<ControllerSample>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pd_update(&mut self, spec: &SourceSpec, p_bar: f64, dt: f64) -> Result<f64> {
        self.pd_affine(spec, p_bar, 0.0, dt)
    }

    pub fn ode_update(&mut self, spec: &SourceSpec, p_bar: f64, dt: f64) -> Result<f64> {
        self.ode_affine(spec, p_bar, 0.0, dt)
    }

    /// PD law with the measurement modelled as `p_bar = a + b Q`, solved for `Q`.
    fn pd_affine(&mut self, spec: &SourceSpec, a: f64, b: f64, dt: f64) -> Result<f64> {
        let c = spec.p_target - a;
        let g = match self.prev_error {
            Some(_) => spec.gamma / dt,
            None => 0.0,
        };
        let prev = self.prev_error.unwrap_or(0.0);
        let q = ((1.0 + g) * c - g * prev) / (spec.resistance + (1.0 + g) * b);
        self.finish(spec, c - b * q, q)
    }

    fn ode_affine(&mut self, spec: &SourceSpec, a: f64, b: f64, dt: f64) -> Result<f64> {
        let tau = spec.tau.unwrap_or(5.0 * dt);
        let s = dt / (tau * spec.resistance);
        let c = spec.p_target - a;
        let q = (self.q + s * c) / (1.0 + s * b);
        self.finish(spec, c - b * q, q)
    }

    /// Applies the law selected by `spec.mode` to a lagged measurement and
    /// records `(t, p_bar, e, Q)`.
    pub fn update(&mut self, spec: &SourceSpec, p_bar: f64, dt: f64, t: f64) -> Result<f64> {
        self.update_affine(spec, p_bar, 0.0, dt, t)
    }

    /// Same as [`update`](Self::update) but with a measurement that responds
    /// to the new strength as `p_bar(Q) = a + b Q`. The recorded `p_bar` is the
    /// value at the returned `Q`.
    pub fn update_affine(&mut self, spec: &SourceSpec, a: f64, b: f64, dt: f64, t: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("measured source pressure".into()));
        }
        let q = match spec.mode {
            ControllerMode::Pd => self.pd_affine(spec, a, b, dt)?,
            ControllerMode::Ode => self.ode_affine(spec, a, b, dt)?,
        };
        let p_bar = a + b * q;
        self.series.push(ControllerSample {
            t,
            p_bar,
            error: spec.p_target - p_bar,
            q,
        });
        Ok(q)
    }

    fn finish(&mut self, spec: &SourceSpec, e: f64, q: f64) -> Result<f64> {
        if !q.is_finite() {
            return Err(Error::NonFinite("source strength".into()));
        }
        if q.abs() > spec.q_max {
            return Err(Error::ControllerRunaway { q, cap: spec.q_max });
        }
        self.prev_error = Some(e);
        self.q = q;
        Ok(q)
    }
}

/// Windowed-mean steady-state test on a scalar series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyCriterion {
    pub window: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SteadyCriterion {
    fn default() -> Self {
        Self {
            window: 500,
            rel_tol: 1e-4,
            abs_tol: 1e-14,
        }
    }
}

impl SteadyCriterion {
    /// Mean of the last window if it differs from the window before it, and
    /// the spread within the last window is, at most `rel_tol |mean| + abs_tol`.
    pub fn steady_value(&self, series: &[f64]) -> Option<f64> {
        let w = self.window.max(1);
        if series.len() < 2 * w {
            return None;
        }
        let n = series.len();
        let tail = &series[n - w..];
        let last = mean(tail);
        let before = mean(&series[n - 2 * w..n - w]);
        let spread = tail.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - tail.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let tol = self.rel_tol * last.abs() + self.abs_tol;
        ((last - before).abs() <= tol && spread <= tol).then_some(last)
    }
}

/// Mean of the last `window` entries (all of them if shorter).
pub fn windowed_mean(series: &[f64], window: usize) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    let w = window.clamp(1, series.len());
    Some(mean(&series[series.len() - w..]))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn grid() -> Grid {
        Grid::new([-1.0, -1.0], [1.0, 1.0], 32).unwrap()
    }

    #[test]
    fn kernel_values() {
        let g = Grid::new([-1.0, -1.0], [1.0, 1.0], 2).unwrap();
        // Cell centers at (+-0.5, +-0.5).
        let s = SourceSpec::new([0.5, 0.5], 2.0, 1.0, ControllerMode::Pd);
        let k = source_profile(&s, &g);
        assert_eq!(k.at(1, 1), 1.0);
        assert!((k.at(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // r == r_src is outside the support.
        let s = SourceSpec::new([-0.5, 0.5], 1.0, 1.0, ControllerMode::Pd);
        assert_eq!(source_profile(&s, &g).at(1, 1), 0.0);
    }

    #[test]
    fn kernel_support_and_balance() {
        let g = grid();
        let s = SourceSpec::new([0.0, 0.0], 0.4, 100.0, ControllerMode::Pd);
        let k = source_profile(&s, &g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.cell_center(i, j);
                if c[0].hypot(c[1]) >= 0.4 {
                    assert_eq!(k.at(i, j), 0.0);
                } else {
                    assert!(k.at(i, j) > 0.0);
                }
            }
        }
        let b = balanced_profile(&s, &g, 0.75).unwrap();
        assert!(b.data.iter().sum::<f64>().abs() < 1e-12);
        assert!(balanced_profile(&s, &g, 0.3).is_err());
    }

    #[test]
    fn mean_pressure() {
        let g = grid();
        let s = SourceSpec::new([0.0, 0.0], 0.4, 100.0, ControllerMode::Pd);
        let p = GridField::from_fn(g.p_shape(), |_, _| 7.0);
        assert!((measure_mean_pressure(&p, &g, &s).unwrap() - 7.0).abs() < 1e-14);
        let px = GridField::from_fn(g.p_shape(), |i, j| g.cell_center(i, j)[0]);
        assert!(measure_mean_pressure(&px, &g, &s).unwrap().abs() < 1e-15);
        // Oracle: explicit loop with its own distance test.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s = SourceSpec::new([0.123, -0.2], 0.37, 1.0, ControllerMode::Pd);
        let pr = GridField::from_fn(g.p_shape(), |_, _| rng.gen_range(-1.0..1.0));
        let (mut sum, mut n) = (0.0, 0);
        for j in 0..32 {
            for i in 0..32 {
                let x = -1.0 + (i as f64 + 0.5) / 16.0 - 0.123;
                let y = -1.0 + (j as f64 + 0.5) / 16.0 + 0.2;
                if x * x + y * y < 0.37 * 0.37 {
                    sum += pr.at(i, j);
                    n += 1;
                }
            }
        }
        assert!((measure_mean_pressure(&pr, &g, &s).unwrap() - sum / n as f64).abs() < 1e-14);
    }

    #[test]
    fn pd_examples() {
        let s = SourceSpec::new([0.0; 2], 0.4, 100.0, ControllerMode::Pd);
        let mut c = ControllerState::new();
        assert_eq!(c.pd_update(&s, 100.0, 1e-3).unwrap(), 0.0);
        let mut c = ControllerState::new();
        let q = c.pd_update(&s, 99.0, 1e-3).unwrap();
        assert!((q - 1.0 / 450.0).abs() < 1e-18);
        assert!((q - 2.222e-3).abs() < 1e-6);
        // Constant error: no derivative contribution.
        assert_eq!(c.pd_update(&s, 99.0, 1e-3).unwrap(), q);
        // Derivative term: e goes 1 -> 2 over dt.
        let q2 = c.pd_update(&s, 98.0, 1e-3).unwrap();
        assert!((q2 - (2.0 + 2e-3 * 1.0 / 1e-3) / 450.0).abs() < 1e-15);
    }

    #[test]
    fn ode_examples() {
        let s = SourceSpec::new([0.0; 2], 0.4, 10.0, ControllerMode::Ode);
        let dt = 1e-4;
        let mut c = ControllerState::new();
        assert_eq!(c.ode_update(&s, 10.0, dt).unwrap(), 0.0);
        let q = c.ode_update(&s, 8.0, dt).unwrap();
        assert!((q - 2.0 / (5.0 * 450.0)).abs() < 1e-15);
        assert!((q - 8.889e-4).abs() < 1e-7);
        let mut c = ControllerState::new();
        for n in 1..=10 {
            let q = c.ode_update(&s, 8.0, dt).unwrap();
            assert!((q - n as f64 * 2.0 / 2250.0).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_measurement_satisfies_law_at_new_strength() {
        let (a, b, dt) = (40.0, 350.0, 1e-4);
        for mode in [ControllerMode::Pd, ControllerMode::Ode] {
            let s = SourceSpec::new([0.0; 2], 0.4, 100.0, mode);
            let mut c = ControllerState::new();
            c.update_affine(&s, 10.0, 0.0, dt, 0.0).unwrap();
            let (q0, e0) = (c.q, c.prev_error.unwrap());
            let q = c.update_affine(&s, a, b, dt, dt).unwrap();
            let e = s.p_target - (a + b * q);
            let expected = match mode {
                ControllerMode::Pd => (e + s.gamma * (e - e0) / dt) / s.resistance,
                ControllerMode::Ode => q0 + dt / (5.0 * dt * s.resistance) * e,
            };
            assert!((q - expected).abs() < 1e-12 * q.abs(), "{mode:?}");
            assert_eq!(c.series.last().unwrap().p_bar, a + b * q);
        }
    }

    #[test]
    fn runaway_is_reported() {
        let mut s = SourceSpec::new([0.0; 2], 0.4, 1e9, ControllerMode::Pd);
        s.q_max = 1.0;
        let mut c = ControllerState::new();
        assert!(matches!(c.pd_update(&s, 0.0, 1e-3), Err(Error::ControllerRunaway { .. })));
    }

    #[test]
    fn steady_detection() {
        let crit = SteadyCriterion {
            window: 10,
            rel_tol: 1e-4,
            abs_tol: 0.0,
        };
        let decaying: Vec<f64> = (0..100).map(|n| 1.0 + (-(n as f64) / 3.0).exp()).collect();
        assert!((crit.steady_value(&decaying).unwrap() - 1.0).abs() < 1e-4);
        let ramp: Vec<f64> = (0..100).map(|n| n as f64).collect();
        assert_eq!(crit.steady_value(&ramp), None);
        assert_eq!(crit.steady_value(&decaying[..15]), None);
        // Window-aligned oscillation has equal window means but is not steady.
        let wave: Vec<f64> = (0..100).map(|n| 1.0 + (std::f64::consts::TAU * n as f64 / 10.0).sin()).collect();
        assert_eq!(crit.steady_value(&wave), None);
        assert_eq!(windowed_mean(&[1.0, 2.0, 3.0], 2), Some(2.5));
    }

    #[test]
    fn mode_pairing() {
        assert_eq!(ControllerMode::default_for(NormalKind::Flat), ControllerMode::Ode);
        assert_eq!(ControllerMode::default_for(NormalKind::Icw), ControllerMode::Pd);
        assert_eq!(ControllerMode::default_for(NormalKind::Projected), ControllerMode::Pd);
    }
}
