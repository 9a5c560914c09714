//! Interface crossings of finite-difference stencil legs and the corrected
//! spreading and interpolation operators built on them.

mod intersect;
mod interpolate;
mod spread;

pub use intersect::{find_intersections, IntersectionRecord, Intersections, LegFamily, LegKey};
pub use interpolate::{interpolate, side_of};
pub use spread::{spread, Correction};

/// Multiple of `h` by which crossings at grid points are moved into the leg.
pub const TIE_EPS: f64 = 1e-10;

/// Legs with more crossings than this abort the step.
pub const MAX_CROSSINGS_PER_LEG: usize = 3;

/// Corrected `(v_far - v_near) / h` removing a jump `jump` (exterior minus
/// interior) met at the crossing; `sign` is +1 when near-to-far goes from the
/// interior to the exterior.
pub fn corrected_first_difference(v_near: f64, v_far: f64, h: f64, sign: f64, jump: f64) -> f64 {
    (v_far - v_near) / h - sign * jump / h
}

/// Which leg of a three-point stencil centered at `x_i` is crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilSide {
    /// Crossing between `x_i` and `x_{i+1}`.
    Upper,
    /// Crossing between `x_{i-1}` and `x_i`.
    Lower,
}

/// Corrected `(v_p - 2 v_0 + v_m) / h^2`.
///
/// `sign` is the crossing sign for traversal in the increasing direction and
/// `alpha_offset` is `alpha - x_i`. Jumps are exterior minus interior.
pub fn corrected_second_difference(
    v_m: f64,
    v_0: f64,
    v_p: f64,
    h: f64,
    side: StencilSide,
    sign: f64,
    alpha_offset: f64,
    jump: f64,
    jump_deriv: f64,
) -> f64 {
    let standard = (v_p - 2.0 * v_0 + v_m) / (h * h);
    let (s, d) = match side {
        StencilSide::Upper => (sign, h - alpha_offset),
        StencilSide::Lower => (-sign, -h - alpha_offset),
    };
    standard - s * (jump + d * jump_deriv) / (h * h)
}
