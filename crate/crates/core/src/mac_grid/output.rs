//! Field snapshots as legacy VTK structured points or `x,y,value` CSV.

use std::fmt::Write as _;
use std::path::Path;

use super::{Grid, GridField, StaggeredState};
use crate::error::Result;

/// Cell-centered velocity `(u, v)` averaged from the faces.
pub fn cell_velocity(state: &StaggeredState) -> (GridField, GridField) {
    let g = &state.grid;
    let uc = GridField::from_fn(g.p_shape(), |i, j| 0.5 * (state.u.at(i, j) + state.u.at(i + 1, j)));
    let vc = GridField::from_fn(g.p_shape(), |i, j| 0.5 * (state.v.at(i, j) + state.v.at(i, j + 1)));
    (uc, vc)
}

pub fn vtk_string(state: &StaggeredState) -> String {
    let g = &state.grid;
    let (uc, vc) = cell_velocity(state);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "flow snapshot t={:.9e}", state.t);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", g.nx, g.ny);
    let _ = writeln!(s, "ORIGIN {} {} 0", g.origin[0] + 0.5 * g.h, g.origin[1] + 0.5 * g.h);
    let _ = writeln!(s, "SPACING {} {} 1", g.h, g.h);
    let _ = writeln!(s, "POINT_DATA {}", g.np());
    for (name, f) in [("p", &state.p), ("q", &state.q)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in &f.data {
            let _ = writeln!(s, "{v:.9e}");
        }
    }
    let _ = writeln!(s, "VECTORS velocity double");
    for (a, b) in uc.data.iter().zip(&vc.data) {
        let _ = writeln!(s, "{a:.9e} {b:.9e} 0");
    }
    s
}

pub fn write_vtk(state: &StaggeredState, path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(state))?;
    Ok(())
}

/// CSV rows `x,y,value` for a field located at `pos(i, j)`.
pub fn csv_string(field: &GridField, pos: impl Fn(usize, usize) -> [f64; 2]) -> String {
    let mut s = String::from("x,y,value\n");
    for j in 0..field.nj {
        for i in 0..field.ni {
            let x = pos(i, j);
            let _ = writeln!(s, "{:.9e},{:.9e},{:.9e}", x[0], x[1], field.at(i, j));
        }
    }
    s
}

pub fn write_pressure_csv(grid: &Grid, p: &GridField, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(p, |i, j| grid.cell_center(i, j)))?;
    Ok(())
}
