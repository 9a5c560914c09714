//! Reported quantities: force coefficients, shedding frequency, leakage,
//! interface tracking error and Poiseuille reference flow rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jump_model::MotionFn;
use crate::mac_grid::{Grid, GridField};
use crate::surface_mesh::{MassMatrix, Mesh2};

/// `(C_D, C_L) = -int F dA / (rho U^2 D / 2)` with `F` the force on the fluid.
pub fn drag_lift(mesh: &Mesh2, forces: &[[f64; 2]], rho: f64, u_ref: f64, d_ref: f64) -> Result<(f64, f64)> {
    if forces.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!("{} forces for {} nodes", forces.len(), mesh.n_vertices())));
    }
    let w = MassMatrix::assemble(mesh)?.row_sums();
    let mut total = [0.0; 2];
    for (f, wj) in forces.iter().zip(&w) {
        total[0] += wj * f[0];
        total[1] += wj * f[1];
    }
    coefficients(total, rho, u_ref, d_ref)
}

/// Force coefficients from an already integrated force on the fluid.
pub fn coefficients(force_integral: [f64; 2], rho: f64, u_ref: f64, d_ref: f64) -> Result<(f64, f64)> {
    let q = 0.5 * rho * u_ref * u_ref * d_ref;
    if !(q > 0.0) {
        return Err(Error::Config(format!("reference dynamic load must be positive, got {q}")));
    }
    Ok((-force_integral[0] / q, -force_integral[1] / q))
}

/// Upward zero crossings of `x - mean(x)` after dropping the leading `discard` fraction.
fn crossings(t: &[f64], x: &[f64], discard: f64) -> Result<Vec<f64>> {
    if t.len() != x.len() {
        return Err(Error::ShapeMismatch(format!("{} times for {} samples", t.len(), x.len())));
    }
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::Config(format!("discard fraction must be in [0, 1), got {discard}")));
    }
    let start = (discard * t.len() as f64) as usize;
    let (t, x) = (&t[start..], &x[start..]);
    if x.len() < 3 {
        return Err(Error::NoOscillation);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * mean.abs().max(1e-300) || hi == lo {
        return Err(Error::NoOscillation);
    }
    let mut out = Vec::new();
    for k in 1..x.len() {
        let (a, b) = (x[k - 1] - mean, x[k] - mean);
        if a < 0.0 && b >= 0.0 {
            out.push(t[k - 1] + (t[k] - t[k - 1]) * (-a) / (b - a));
        }
    }
    Ok(out)
}

/// Mean period of `x(t)` from upward mean crossings.
pub fn dominant_period(t: &[f64], x: &[f64], discard: f64) -> Result<f64> {
    let c = crossings(t, x, discard)?;
    if c.len() < 3 {
        return Err(Error::NoOscillation);
    }
    Ok((c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

/// `St = f D / U` with `f` from the mean crossing period of `C_L`.
pub fn strouhal(t: &[f64], cl: &[f64], d_ref: f64, u_ref: f64, discard: f64) -> Result<f64> {
    Ok(d_ref / (dominant_period(t, cl, discard)? * u_ref))
}

/// `((max + min) / 2, (max - min) / 2)` over the trailing `periods * period` of the series.
pub fn mean_and_amplitude(t: &[f64], x: &[f64], period: f64, periods: f64) -> Result<(f64, f64)> {
    if t.is_empty() || t.len() != x.len() {
        return Err(Error::ShapeMismatch("empty or mismatched series".into()));
    }
    let t_end = t[t.len() - 1];
    let (lo, hi) = t
        .iter()
        .zip(x)
        .filter(|(&ti, _)| ti >= t_end - periods * period)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, &v)| (a.min(v), b.max(v)));
    Ok((0.5 * (hi + lo), 0.5 * (hi - lo)))
}

/// Windowed mean of the source strength series. Positive values mean fluid
/// had to be injected to hold the pressure.
pub fn leakage_flow_rate(q: &[f64], window: usize) -> Result<f64> {
    crate::controllers::windowed_mean(q, window).ok_or_else(|| Error::Config("empty source series".into()))
}

/// `max_j |xi(X_j, t) - chi_j|`.
pub fn displacement_error(mesh: &Mesh2, target: &MotionFn<2>, t: f64) -> f64 {
    mesh.reference()
        .iter()
        .zip(mesh.current())
        .map(|(x, chi)| crate::vector::dist(&target(x, t), chi))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoiseuilleGeometry {
    /// Circular tube of radius `R`.
    Tube,
    /// Plane channel of half-width `a`, per unit depth.
    Channel2d,
}

/// Analytic Poiseuille flow rate.
pub fn poiseuille_reference(size: f64, dp: f64, mu: f64, length: f64, geometry: PoiseuilleGeometry) -> Result<f64> {
    if !(size > 0.0 && mu > 0.0 && length > 0.0) {
        return Err(Error::Config("Poiseuille size, viscosity and length must be positive".into()));
    }
    Ok(match geometry {
        PoiseuilleGeometry::Tube => std::f64::consts::PI * size.powi(4) * dp / (8.0 * mu * length),
        PoiseuilleGeometry::Channel2d => 2.0 * size.powi(3) * dp / (3.0 * mu * length),
    })
}

/// Flux `sum u h` through the column of u faces nearest `x`, over faces whose
/// centers lie in `(y_lo, y_hi)`.
pub fn column_flow_rate(grid: &Grid, u: &GridField, x: f64, y_lo: f64, y_hi: f64) -> Result<f64> {
    u.check(grid.u_shape(), "u")?;
    let i = ((x - grid.origin[0]) / grid.h).round();
    if i < 0.0 || i > grid.nx as f64 {
        return Err(Error::Config(format!("x = {x} is outside the grid")));
    }
    let i = i as usize;
    Ok((0..grid.ny)
        .filter(|&j| {
            let y = grid.u_pos(i, j)[1];
            y > y_lo && y < y_hi
        })
        .map(|j| u.at(i, j) * grid.h)
        .sum())
}
