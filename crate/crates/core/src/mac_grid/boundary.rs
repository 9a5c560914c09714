use std::sync::Arc;

use super::Grid;
use crate::error::{Error, Result};

/// Boundary velocity `g(x, t)` as a function of position on the side and time.
#[derive(Clone)]
pub struct VelocityProfile(pub Arc<dyn Fn(&[f64; 2], f64) -> [f64; 2] + Send + Sync>);

impl VelocityProfile {
    pub fn uniform(u: [f64; 2]) -> Self {
        Self(Arc::new(move |_, _| u))
    }

    /// `(1, cos(pi y / l) e^{-2t})`: unit inflow with a decaying transverse kick.
    pub fn perturbed_inflow(l: f64) -> Self {
        Self(Arc::new(move |x, t| [1.0, (std::f64::consts::PI * x[1] / l).cos() * (-2.0 * t).exp()]))
    }

    pub fn eval(&self, x: &[f64; 2], t: f64) -> [f64; 2] {
        (self.0)(x, t)
    }
}

impl std::fmt::Debug for VelocityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("VelocityProfile(..)")
    }
}

#[derive(Clone, Debug)]
pub enum SideCondition {
    /// Zero normal velocity and zero tangential traction.
    FreeSlip,
    /// Prescribed velocity.
    Velocity(VelocityProfile),
    /// Zero normal and tangential traction with reference pressure 0.
    Outflow,
    /// Prescribed pressure and zero tangential velocity on the open interval of
    /// the side coordinate; zero velocity elsewhere on the side.
    PressureInlet { pressure: f64, open: [f64; 2] },
}

#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub left: SideCondition,
    pub right: SideCondition,
    pub bottom: SideCondition,
    pub top: SideCondition,
}

impl BoundarySpec {
    pub fn all(c: SideCondition) -> Self {
        Self {
            left: c.clone(),
            right: c.clone(),
            bottom: c.clone(),
            top: c,
        }
    }

    /// True when no side lets fluid through at an unprescribed rate.
    pub fn is_closed(&self) -> bool {
        [&self.left, &self.right, &self.bottom, &self.top]
            .iter()
            .all(|s| matches!(s, SideCondition::FreeSlip | SideCondition::Velocity(_)))
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let hi = grid.upper();
        for (name, side, lo, up) in [
            ("left", &self.left, grid.origin[1], hi[1]),
            ("right", &self.right, grid.origin[1], hi[1]),
            ("bottom", &self.bottom, grid.origin[0], hi[0]),
            ("top", &self.top, grid.origin[0], hi[0]),
        ] {
            if let SideCondition::PressureInlet { pressure, open } = side {
                if !pressure.is_finite() {
                    return Err(Error::InvalidBoundary(format!("{name} inlet pressure is not finite")));
                }
                if !(open[1] > open[0]) || open[1] <= lo || open[0] >= up {
                    return Err(Error::InvalidBoundary(format!(
                        "{name} pressure inlet has no open part inside [{lo}, {up}] (interval {open:?}), so the side is a full velocity Dirichlet"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormalFace {
    Fixed(f64),
    /// Unknown normal velocity with ghost pressure `2 p_b - p_interior`.
    Free { pressure: f64 },
}

impl NormalFace {
    pub fn is_fixed(&self) -> bool {
        matches!(self, NormalFace::Fixed(_))
    }
}

/// Boundary data resolved at one time on one grid.
///
/// Tangential ghosts beyond a side are `a * interior + b` with `(a, b)` stored
/// per face along the side.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryState {
    pub left_normal: Vec<NormalFace>,
    pub right_normal: Vec<NormalFace>,
    pub bottom_normal: Vec<NormalFace>,
    pub top_normal: Vec<NormalFace>,
    pub left_tan: Vec<(f64, f64)>,
    pub right_tan: Vec<(f64, f64)>,
    pub bottom_tan: Vec<(f64, f64)>,
    pub top_tan: Vec<(f64, f64)>,
}

/// Side geometry: which velocity index is normal and how to map positions.
#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

fn normal_faces(cond: &SideCondition, side: Side, grid: &Grid, t: f64) -> Vec<NormalFace> {
    let hi = grid.upper();
    let (n, normal_axis) = match side {
        Side::Left | Side::Right => (grid.ny, 0),
        Side::Bottom | Side::Top => (grid.nx, 1),
    };
    (0..n)
        .map(|k| {
            let x = match side {
                Side::Left => grid.u_pos(0, k),
                Side::Right => [hi[0], grid.u_pos(0, k)[1]],
                Side::Bottom => grid.v_pos(k, 0),
                Side::Top => [grid.v_pos(k, 0)[0], hi[1]],
            };
            let along = x[1 - normal_axis];
            match cond {
                SideCondition::FreeSlip => NormalFace::Fixed(0.0),
                SideCondition::Velocity(g) => NormalFace::Fixed(g.eval(&x, t)[normal_axis]),
                SideCondition::Outflow => NormalFace::Free { pressure: 0.0 },
                SideCondition::PressureInlet { pressure, open } => {
                    if along >= open[0] && along <= open[1] {
                        NormalFace::Free { pressure: *pressure }
                    } else {
                        NormalFace::Fixed(0.0)
                    }
                }
            }
        })
        .collect()
}

fn tangential_ghosts(cond: &SideCondition, side: Side, grid: &Grid, t: f64) -> Vec<(f64, f64)> {
    let hi = grid.upper();
    let (n, tan_axis) = match side {
        Side::Left | Side::Right => (grid.ny + 1, 1),
        Side::Bottom | Side::Top => (grid.nx + 1, 0),
    };
    (0..n)
        .map(|k| {
            let x = match side {
                Side::Left => [grid.origin[0], grid.origin[1] + k as f64 * grid.h],
                Side::Right => [hi[0], grid.origin[1] + k as f64 * grid.h],
                Side::Bottom => [grid.origin[0] + k as f64 * grid.h, grid.origin[1]],
                Side::Top => [grid.origin[0] + k as f64 * grid.h, hi[1]],
            };
            match cond {
                SideCondition::FreeSlip | SideCondition::Outflow => (1.0, 0.0),
                SideCondition::Velocity(g) => (-1.0, 2.0 * g.eval(&x, t)[tan_axis]),
                SideCondition::PressureInlet { .. } => (-1.0, 0.0),
            }
        })
        .collect()
}

impl BoundaryState {
    pub fn evaluate(spec: &BoundarySpec, grid: &Grid, t: f64) -> Result<Self> {
        spec.validate(grid)?;
        Ok(Self {
            left_normal: normal_faces(&spec.left, Side::Left, grid, t),
            right_normal: normal_faces(&spec.right, Side::Right, grid, t),
            bottom_normal: normal_faces(&spec.bottom, Side::Bottom, grid, t),
            top_normal: normal_faces(&spec.top, Side::Top, grid, t),
            left_tan: tangential_ghosts(&spec.left, Side::Left, grid, t),
            right_tan: tangential_ghosts(&spec.right, Side::Right, grid, t),
            bottom_tan: tangential_ghosts(&spec.bottom, Side::Bottom, grid, t),
            top_tan: tangential_ghosts(&spec.top, Side::Top, grid, t),
        })
    }

    /// Same face classification with all boundary data set to zero.
    pub fn homogeneous(&self) -> Self {
        let zn = |v: &[NormalFace]| {
            v.iter()
                .map(|f| match f {
                    NormalFace::Fixed(_) => NormalFace::Fixed(0.0),
                    NormalFace::Free { .. } => NormalFace::Free { pressure: 0.0 },
                })
                .collect()
        };
        let zt = |v: &[(f64, f64)]| v.iter().map(|&(a, _)| (a, 0.0)).collect();
        Self {
            left_normal: zn(&self.left_normal),
            right_normal: zn(&self.right_normal),
            bottom_normal: zn(&self.bottom_normal),
            top_normal: zn(&self.top_normal),
            left_tan: zt(&self.left_tan),
            right_tan: zt(&self.right_tan),
            bottom_tan: zt(&self.bottom_tan),
            top_tan: zt(&self.top_tan),
        }
    }

    /// True when every boundary face has a fixed normal velocity.
    pub fn all_fixed(&self) -> bool {
        [&self.left_normal, &self.right_normal, &self.bottom_normal, &self.top_normal]
            .iter()
            .all(|s| s.iter().all(NormalFace::is_fixed))
    }

    /// Per-face mask of fixed velocity entries in the `u` and `v` arrays.
    pub fn fixed_masks(&self, grid: &Grid) -> (Vec<bool>, Vec<bool>) {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut mu = vec![false; grid.nu()];
        let mut mv = vec![false; grid.nv()];
        for j in 0..ny {
            mu[(nx + 1) * j] = self.left_normal[j].is_fixed();
            mu[(nx + 1) * j + nx] = self.right_normal[j].is_fixed();
        }
        for i in 0..nx {
            mv[i] = self.bottom_normal[i].is_fixed();
            mv[i + nx * ny] = self.top_normal[i].is_fixed();
        }
        (mu, mv)
    }

    /// Writes fixed normal velocities into the face arrays.
    pub fn impose(&self, grid: &Grid, u: &mut [f64], v: &mut [f64]) {
        let (nx, ny) = (grid.nx, grid.ny);
        for j in 0..ny {
            if let NormalFace::Fixed(g) = self.left_normal[j] {
                u[(nx + 1) * j] = g;
            }
            if let NormalFace::Fixed(g) = self.right_normal[j] {
                u[(nx + 1) * j + nx] = g;
            }
        }
        for i in 0..nx {
            if let NormalFace::Fixed(g) = self.bottom_normal[i] {
                v[i] = g;
            }
            if let NormalFace::Fixed(g) = self.top_normal[i] {
                v[i + nx * ny] = g;
            }
        }
    }

    /// Net outward flux `sum u.n h` through fixed faces.
    pub fn fixed_outflux(&self, grid: &Grid) -> f64 {
        let sum = |v: &[NormalFace]| -> f64 {
            v.iter()
                .map(|f| match f {
                    NormalFace::Fixed(g) => *g,
                    NormalFace::Free { .. } => 0.0,
                })
                .sum()
        };
        grid.h * (sum(&self.right_normal) - sum(&self.left_normal) + sum(&self.top_normal) - sum(&self.bottom_normal))
    }
}
