use super::intersect::{Intersections, LegFamily};
use crate::error::Result;
use crate::jump_model::JumpFields;
use crate::mac_grid::{Grid, GridField};
use crate::surface_mesh::Mesh2;

/// Right-hand-side force field `f` on the velocity faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub fu: GridField,
    pub fv: GridField,
}

impl Correction {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            fu: GridField::zeros(grid.u_shape()),
            fv: GridField::zeros(grid.v_shape()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fu.data.iter().chain(&self.fv.data).all(|&x| x == 0.0)
    }

    /// `sum f h^2` per component.
    pub fn total(&self, grid: &Grid) -> [f64; 2] {
        let h2 = grid.h * grid.h;
        [self.fu.data.iter().sum::<f64>() * h2, self.fv.data.iter().sum::<f64>() * h2]
    }
}

fn add_in_range(f: &mut GridField, i: isize, j: isize, v: f64) {
    if v != 0.0 && i >= 0 && j >= 0 && (i as usize) < f.ni && (j as usize) < f.nj {
        f.add(i as usize, j as usize, v);
    }
}

/// Jump terms of the corrected pressure gradient and viscous Laplacian, moved
/// to the momentum right-hand side.
///
/// Pressure legs contribute `sign [[p]] / h` at the face between the two cells.
/// Velocity legs contribute `sign' d G_kc / h^2` at each end of the leg, where
/// `d` is the signed distance from the crossing to the opposite end,
/// `sign'` the crossing sign seen from that end and `G_kc = mu [[du_c/dx_k]]`
/// up to sign, so the viscosity cancels.
pub fn spread(mesh: &Mesh2, jumps: &JumpFields<2>, grid: &Grid, crossings: &Intersections) -> Result<Correction> {
    let mut out = Correction::zeros(grid);
    if jumps.is_zero() {
        return Ok(out);
    }
    let h = grid.h;
    let ih2 = 1.0 / (h * h);
    for r in crossings.records() {
        let (p, g) = jumps.eval_jump(mesh, r.element, &r.local, jumps.step)?;
        let s = r.crossing_sign;
        match r.family {
            LegFamily::PressureX => add_in_range(&mut out.fu, r.leg + 1, r.line, s * p / h),
            LegFamily::PressureY => add_in_range(&mut out.fv, r.line, r.leg + 1, s * p / h),
            fam => {
                let (k, c) = match fam {
                    LegFamily::UX => (0, 0),
                    LegFamily::UY => (1, 0),
                    LegFamily::VX => (0, 1),
                    _ => (1, 1),
                };
                let gk = g[k][c];
                if gk == 0.0 {
                    continue;
                }
                let near = s * r.h_plus * gk * ih2;
                let far = -s * r.h_minus * gk * ih2;
                let f = if c == 0 { &mut out.fu } else { &mut out.fv };
                if k == 0 {
                    add_in_range(f, r.leg, r.line, near);
                    add_in_range(f, r.leg + 1, r.line, far);
                } else {
                    add_in_range(f, r.line, r.leg, near);
                    add_in_range(f, r.line, r.leg + 1, far);
                }
            }
        }
    }
    Ok(out)
}
