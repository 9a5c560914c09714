//! Advective term `u . grad u` on MAC faces by MUSCL reconstruction with the
//! van Leer limiter.
//!
//! Edge values are reconstructed from the upwind side of the advecting
//! velocity. Stencil points two cells beyond a side reuse the first ghost
//! layer, so the scheme degrades to a limited one-sided difference there.

use crate::mac_grid::{face_value, BoundaryState, Component, Grid, GridField};

#[inline]
fn van_leer(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// Upwind value at the edge between `w1` and `w2` given neighbours `w0`, `w3`.
#[inline]
fn muscl(vel: f64, w0: f64, w1: f64, w2: f64, w3: f64) -> f64 {
    if vel >= 0.0 {
        w1 + 0.5 * van_leer(w1 - w0, w2 - w1)
    } else {
        w2 - 0.5 * van_leer(w2 - w1, w3 - w2)
    }
}

/// Returns `(A^x, A^y)` on the u and v faces. Entries on boundary faces are
/// computed like interior ones and are ignored where the velocity is fixed.
pub fn advection_term(grid: &Grid, bc: &BoundaryState, u: &GridField, v: &GridField) -> (GridField, GridField) {
    let ih = 1.0 / grid.h;
    let uu = |i: isize, j: isize| face_value(grid, bc, Component::U, &u.data, i, j);
    let vv = |i: isize, j: isize| face_value(grid, bc, Component::V, &v.data, i, j);

    let ax = GridField::from_fn(grid.u_shape(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let uc = uu(i, j);
        let col = |k: isize| uu(i + k, j);
        let ue = muscl(0.5 * (col(0) + col(1)), col(-1), col(0), col(1), col(2));
        let uw = muscl(0.5 * (col(-1) + col(0)), col(-2), col(-1), col(0), col(1));
        let row = |k: isize| uu(i, j + k);
        let van = 0.5 * (vv(i - 1, j + 1) + vv(i, j + 1));
        let vas = 0.5 * (vv(i - 1, j) + vv(i, j));
        let un = muscl(van, row(-1), row(0), row(1), row(2));
        let us = muscl(vas, row(-2), row(-1), row(0), row(1));
        let vbar = 0.5 * (van + vas);
        (uc * (ue - uw) + vbar * (un - us)) * ih
    });

    let ay = GridField::from_fn(grid.v_shape(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let vc = vv(i, j);
        let row = |k: isize| vv(i, j + k);
        let vn = muscl(0.5 * (row(0) + row(1)), row(-1), row(0), row(1), row(2));
        let vs = muscl(0.5 * (row(-1) + row(0)), row(-2), row(-1), row(0), row(1));
        let col = |k: isize| vv(i + k, j);
        let uae = 0.5 * (uu(i + 1, j - 1) + uu(i + 1, j));
        let uaw = 0.5 * (uu(i, j - 1) + uu(i, j));
        let ve = muscl(uae, col(-1), col(0), col(1), col(2));
        let vw = muscl(uaw, col(-2), col(-1), col(0), col(1));
        let ubar = 0.5 * (uae + uaw);
        (vc * (vn - vs) + ubar * (ve - vw)) * ih
    });
    (ax, ay)
}

/// `3/2 A^n - 1/2 A^{n-1}`.
pub fn extrapolate(now: &GridField, prev: &GridField) -> GridField {
    GridField {
        ni: now.ni,
        nj: now.nj,
        data: now.data.iter().zip(&prev.data).map(|(a, b)| 1.5 * a - 0.5 * b).collect(),
    }
}
