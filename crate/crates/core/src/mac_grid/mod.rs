//! Uniform staggered (MAC) grid, boundary conditions and second-order operators.
//!
//! Layout on an `nx x ny` cell grid with spacing `h`:
//! `u` lives on x-faces `(x0 + i h, y0 + (j + 1/2) h)` with shape `(nx + 1, ny)`,
//! `v` on y-faces `(x0 + (i + 1/2) h, y0 + j h)` with shape `(nx, ny + 1)`,
//! `p` and `q` at cell centers with shape `(nx, ny)`.

mod boundary;
pub mod output;

pub use boundary::{BoundarySpec, BoundaryState, NormalFace, SideCondition, VelocityProfile};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl Grid {
    /// Grid over `[lo, hi]` with `nx` cells in x; `ny` follows from the isotropic spacing.
    pub fn new(lo: [f64; 2], hi: [f64; 2], nx: usize) -> Result<Self> {
        if nx < 2 || !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(Error::Config(format!("invalid grid: {nx} cells over {lo:?}..{hi:?}")));
        }
        let h = (hi[0] - lo[0]) / nx as f64;
        let fy = (hi[1] - lo[1]) / h;
        let ny = fy.round() as usize;
        if ny < 2 || (fy - ny as f64).abs() > 1e-9 * fy {
            return Err(Error::Config(format!(
                "domain height {} is not a whole number of cells of size {h}",
                hi[1] - lo[1]
            )));
        }
        Ok(Self { nx, ny, h, origin: lo })
    }

    pub fn upper(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.h,
            self.origin[1] + self.ny as f64 * self.h,
        ]
    }

    pub fn nu(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn nv(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn np(&self) -> usize {
        self.nx * self.ny
    }

    pub fn u_shape(&self) -> (usize, usize) {
        (self.nx + 1, self.ny)
    }

    pub fn v_shape(&self) -> (usize, usize) {
        (self.nx, self.ny + 1)
    }

    pub fn p_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn u_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn v_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn contains(&self, x: &[f64; 2]) -> bool {
        let hi = self.upper();
        x[0] >= self.origin[0] && x[0] <= hi[0] && x[1] >= self.origin[1] && x[1] <= hi[1]
    }
}

/// Scalar array on one of the staggered locations, `i` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub ni: usize,
    pub nj: usize,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn zeros((ni, nj): (usize, usize)) -> Self {
        Self {
            ni,
            nj,
            data: vec![0.0; ni * nj],
        }
    }

    pub fn from_fn((ni, nj): (usize, usize), mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in 0..ni {
                data.push(f(i, j));
            }
        }
        Self { ni, nj, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ni, self.nj)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.ni * j
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.ni * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + self.ni * j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + self.ni * j] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub(crate) fn check(&self, shape: (usize, usize), what: &str) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch(format!("{what} has shape {:?}, expected {shape:?}", self.shape())));
        }
        Ok(())
    }
}

/// MAC velocity, pressure and volume source at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredState {
    pub grid: Grid,
    pub u: GridField,
    pub v: GridField,
    pub p: GridField,
    pub q: GridField,
    pub t: f64,
}

impl StaggeredState {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: GridField::zeros(grid.u_shape()),
            v: GridField::zeros(grid.v_shape()),
            p: GridField::zeros(grid.p_shape()),
            q: GridField::zeros(grid.p_shape()),
            grid,
            t: 0.0,
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        self.u.check(self.grid.u_shape(), "u")?;
        self.v.check(self.grid.v_shape(), "v")?;
        self.p.check(self.grid.p_shape(), "p")?;
        self.q.check(self.grid.p_shape(), "q")
    }

    /// `max(|u|, |v|)` over all faces.
    pub fn max_speed(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }
}

/// Cell-centered `(D u)_ij = (u_{i+1,j} - u_ij + v_{i,j+1} - v_ij) / h`.
pub fn divergence(grid: &Grid, u: &GridField, v: &GridField) -> Result<GridField> {
    u.check(grid.u_shape(), "u")?;
    v.check(grid.v_shape(), "v")?;
    let mut out = GridField::zeros(grid.p_shape());
    divergence_into(grid, &u.data, &v.data, &mut out.data);
    Ok(out)
}

pub(crate) fn divergence_into(grid: &Grid, u: &[f64], v: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let ih = 1.0 / grid.h;
    for j in 0..ny {
        for i in 0..nx {
            let du = u[i + 1 + (nx + 1) * j] - u[i + (nx + 1) * j];
            let dv = v[i + nx * (j + 1)] - v[i + nx * j];
            out[i + nx * j] = (du + dv) * ih;
        }
    }
}

/// Face-centered pressure gradient. Boundary faces use ghost pressures from
/// `bc` where the normal velocity is free and are zero where it is fixed.
pub fn gradient(grid: &Grid, bc: &BoundaryState, p: &GridField) -> Result<(GridField, GridField)> {
    p.check(grid.p_shape(), "p")?;
    let mut gu = GridField::zeros(grid.u_shape());
    let mut gv = GridField::zeros(grid.v_shape());
    gradient_into(grid, bc, &p.data, &mut gu.data, &mut gv.data);
    Ok((gu, gv))
}

pub(crate) fn gradient_into(grid: &Grid, bc: &BoundaryState, p: &[f64], gu: &mut [f64], gv: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let ih = 1.0 / grid.h;
    let pc = |i: usize, j: usize| p[i + nx * j];
    for j in 0..ny {
        let row = (nx + 1) * j;
        for i in 1..nx {
            gu[row + i] = (pc(i, j) - pc(i - 1, j)) * ih;
        }
        gu[row] = match bc.left_normal[j] {
            NormalFace::Free { pressure } => 2.0 * (pc(0, j) - pressure) * ih,
            NormalFace::Fixed(_) => 0.0,
        };
        gu[row + nx] = match bc.right_normal[j] {
            NormalFace::Free { pressure } => 2.0 * (pressure - pc(nx - 1, j)) * ih,
            NormalFace::Fixed(_) => 0.0,
        };
    }
    for j in 1..ny {
        for i in 0..nx {
            gv[i + nx * j] = (pc(i, j) - pc(i, j - 1)) * ih;
        }
    }
    for i in 0..nx {
        gv[i] = match bc.bottom_normal[i] {
            NormalFace::Free { pressure } => 2.0 * (pc(i, 0) - pressure) * ih,
            NormalFace::Fixed(_) => 0.0,
        };
        gv[i + nx * ny] = match bc.top_normal[i] {
            NormalFace::Free { pressure } => 2.0 * (pressure - pc(i, ny - 1)) * ih,
            NormalFace::Fixed(_) => 0.0,
        };
    }
}

/// Which velocity component a face field holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    U,
    V,
}

/// Value of `w` at `(i, j)` where indices one past either end resolve to the
/// ghost rules of `bc`. Normal-direction ghosts beyond a boundary face mirror
/// the first interior face.
#[inline]
pub(crate) fn face_value(grid: &Grid, bc: &BoundaryState, comp: Component, w: &[f64], i: isize, j: isize) -> f64 {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    match comp {
        Component::U => {
            let ni = nx + 1;
            let i = if i < 0 {
                -i
            } else if i > nx {
                2 * nx - i
            } else {
                i
            };
            if j < 0 {
                let (a, b) = bc.bottom_tan[i as usize];
                a * w[i as usize] + b
            } else if j >= ny {
                let (a, b) = bc.top_tan[i as usize];
                a * w[(i + ni * (ny - 1)) as usize] + b
            } else {
                w[(i + ni * j) as usize]
            }
        }
        Component::V => {
            let j = if j < 0 {
                -j
            } else if j > ny {
                2 * ny - j
            } else {
                j
            };
            if i < 0 {
                let (a, b) = bc.left_tan[j as usize];
                a * w[(nx * j) as usize] + b
            } else if i >= nx {
                let (a, b) = bc.right_tan[j as usize];
                a * w[(nx - 1 + nx * j) as usize] + b
            } else {
                w[(i + nx * j) as usize]
            }
        }
    }
}

/// Five-point Laplacian of a face component with ghost values from `bc`.
pub fn laplacian(grid: &Grid, bc: &BoundaryState, comp: Component, w: &GridField) -> Result<GridField> {
    let shape = match comp {
        Component::U => grid.u_shape(),
        Component::V => grid.v_shape(),
    };
    w.check(shape, "face field")?;
    let mut out = GridField::zeros(shape);
    laplacian_into(grid, bc, comp, &w.data, &mut out.data);
    Ok(out)
}

pub(crate) fn laplacian_into(grid: &Grid, bc: &BoundaryState, comp: Component, w: &[f64], out: &mut [f64]) {
    let (ni, nj) = match comp {
        Component::U => grid.u_shape(),
        Component::V => grid.v_shape(),
    };
    let ih2 = 1.0 / (grid.h * grid.h);
    for j in 0..nj {
        let interior_j = j > 0 && j + 1 < nj;
        for i in 0..ni {
            let c = w[i + ni * j];
            let s = if interior_j && i > 0 && i + 1 < ni {
                w[i - 1 + ni * j] + w[i + 1 + ni * j] + w[i + ni * (j - 1)] + w[i + ni * (j + 1)]
            } else {
                let (ii, jj) = (i as isize, j as isize);
                face_value(grid, bc, comp, w, ii - 1, jj)
                    + face_value(grid, bc, comp, w, ii + 1, jj)
                    + face_value(grid, bc, comp, w, ii, jj - 1)
                    + face_value(grid, bc, comp, w, ii, jj + 1)
            };
            out[i + ni * j] = (s - 4.0 * c) * ih2;
        }
    }
}

/// Sets fixed boundary faces of `state` from `spec` at `state.t` and returns the ghost rules.
pub fn apply_boundary_conditions(state: &mut StaggeredState, spec: &BoundarySpec) -> Result<BoundaryState> {
    state.check_shapes()?;
    let bc = BoundaryState::evaluate(spec, &state.grid, state.t)?;
    bc.impose(&state.grid, &mut state.u.data, &mut state.v.data);
    Ok(bc)
}
