use std::collections::HashMap;

use super::{MAX_CROSSINGS_PER_LEG, TIE_EPS};
use crate::error::{Error, Result};
use crate::mac_grid::Grid;
use crate::surface_mesh::Mesh2;

/// Stencil leg families: the DOF type connected and the leg direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LegFamily {
    /// Between horizontally adjacent cell centers.
    PressureX,
    /// Between vertically adjacent cell centers.
    PressureY,
    UX,
    UY,
    VX,
    VY,
}

impl LegFamily {
    pub const ALL: [LegFamily; 6] = [
        LegFamily::PressureX,
        LegFamily::PressureY,
        LegFamily::UX,
        LegFamily::UY,
        LegFamily::VX,
        LegFamily::VY,
    ];

    /// 0 for legs along x, 1 along y.
    pub fn axis(self) -> usize {
        match self {
            LegFamily::PressureX | LegFamily::UX | LegFamily::VX => 0,
            _ => 1,
        }
    }

    /// Node offset along the leg axis in units of `h` (nodes at `o + (k + off) h`).
    pub fn node_offset(self) -> f64 {
        match self {
            LegFamily::PressureX | LegFamily::PressureY | LegFamily::VX | LegFamily::UY => 0.5,
            LegFamily::UX | LegFamily::VY => 0.0,
        }
    }

    /// Line offset across the leg axis in units of `h`.
    pub fn line_offset(self) -> f64 {
        match self {
            LegFamily::PressureX | LegFamily::PressureY | LegFamily::UX | LegFamily::VY => 0.5,
            LegFamily::VX | LegFamily::UY => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LegFamily::PressureX => "px",
            LegFamily::PressureY => "py",
            LegFamily::UX => "ux",
            LegFamily::UY => "uy",
            LegFamily::VX => "vx",
            LegFamily::VY => "vy",
        }
    }

    /// `(node count along the leg axis, line count)` on `grid`.
    pub fn extent(self, grid: &Grid) -> (usize, usize) {
        let (nx, ny) = (grid.nx, grid.ny);
        match self {
            LegFamily::PressureX => (nx, ny),
            LegFamily::UX => (nx + 1, ny),
            LegFamily::VX => (nx, ny + 1),
            LegFamily::PressureY => (ny, nx),
            LegFamily::UY => (ny, nx + 1),
            LegFamily::VY => (ny + 1, nx),
        }
    }

    /// Families whose lines sit at `line_offset` (0 or 0.5) across `axis`.
    fn on_lines(axis: usize, half: bool) -> &'static [LegFamily] {
        match (axis, half) {
            (0, true) => &[LegFamily::PressureX, LegFamily::UX],
            (0, false) => &[LegFamily::VX],
            (_, true) => &[LegFamily::PressureY, LegFamily::VY],
            (_, false) => &[LegFamily::UY],
        }
    }
}

/// `(family, line, leg)`: the leg joins nodes `leg` and `leg + 1` on `line`.
pub type LegKey = (LegFamily, isize, isize);

/// One crossing of one stencil leg by an interface element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntersectionRecord {
    pub family: LegFamily,
    pub line: isize,
    pub leg: isize,
    /// Leg-axis coordinate of the crossing, after tie-breaking.
    pub alpha: f64,
    /// `x_{leg+1} - alpha > 0`.
    pub h_plus: f64,
    /// `x_leg - alpha < 0`.
    pub h_minus: f64,
    pub element: usize,
    pub local: [f64; 2],
    /// +1 when traversal toward `leg + 1` goes from the interior to the exterior.
    pub crossing_sign: f64,
    /// Set when the element is nearly parallel to the leg.
    pub grazing: bool,
    /// Set when `alpha` was moved off a grid node.
    pub perturbed: bool,
}

impl IntersectionRecord {
    pub fn key(&self) -> LegKey {
        (self.family, self.line, self.leg)
    }

    /// Crossing point on the leg.
    pub fn leg_point(&self, grid: &Grid) -> [f64; 2] {
        let a = self.family.axis();
        let mut x = [0.0; 2];
        x[a] = self.alpha;
        x[1 - a] = grid.origin[1 - a] + (self.line as f64 + self.family.line_offset()) * grid.h;
        x
    }
}

/// All crossings for one interface configuration, sorted by leg and `alpha`.
#[derive(Clone, Debug)]
pub struct Intersections {
    records: Vec<IntersectionRecord>,
    index: HashMap<LegKey, (usize, usize)>,
}

impl Intersections {
    pub fn records(&self) -> &[IntersectionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Crossings of one leg in increasing `alpha`.
    pub fn on_leg(&self, key: LegKey) -> &[IntersectionRecord] {
        match self.index.get(&key) {
            Some(&(lo, n)) => &self.records[lo..lo + n],
            None => &[],
        }
    }

    pub fn count(&self, family: LegFamily) -> usize {
        self.records.iter().filter(|r| r.family == family).count()
    }

    /// CSV dump, one row per record.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("family,line,leg,alpha,h_plus,h_minus,element,s,sign,grazing\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{:.17e},{:.17e},{:.17e},{},{:.17e},{},{}",
                r.family.name(),
                r.line,
                r.leg,
                r.alpha,
                r.h_plus,
                r.h_minus,
                r.element,
                r.local[1],
                r.crossing_sign,
                r.grazing
            );
        }
        s
    }
}

/// Crossings of every stencil leg by the current configuration of `mesh`.
///
/// Legs are kept when their line lies on the grid and at least one end is a
/// grid node, so ghost-node legs at the boundary are included.
///
/// A segment crosses the line `y = c` when exactly one endpoint satisfies
/// `y < c`, so a vertex on a line is counted for one of its two segments.
pub fn find_intersections(mesh: &Mesh2, grid: &Grid) -> Result<Intersections> {
    let h = grid.h;
    let eps = TIE_EPS * h;
    let half = 0.5 * h;
    let mut records = Vec::new();
    for e in 0..mesh.n_elements() {
        let [a, b] = mesh.element_points(e, true)?;
        let n = mesh.element_geometry(e, true)?.normal;
        for line_axis in 0..2 {
            // Lines perpendicular to `line_axis`; legs run along `leg_axis`.
            let leg_axis = 1 - line_axis;
            let (ca, cb) = (a[line_axis], b[line_axis]);
            let o = grid.origin[line_axis];
            let m_lo = ((ca.min(cb) - o) / half).ceil() as isize;
            let m_hi = ((ca.max(cb) - o) / half).floor() as isize;
            for m in m_lo..=m_hi {
                let c = o + m as f64 * half;
                if (ca < c) == (cb < c) {
                    continue;
                }
                let s = (c - ca) / (cb - ca);
                let alpha0 = a[leg_axis] + s * (b[leg_axis] - a[leg_axis]);
                let odd = m.rem_euclid(2) == 1;
                let line = if odd { (m - 1).div_euclid(2) } else { m.div_euclid(2) };
                let nl = n[leg_axis];
                for &family in LegFamily::on_lines(leg_axis, odd) {
                    let (n_nodes, n_lines) = family.extent(grid);
                    let base = grid.origin[leg_axis] + family.node_offset() * h;
                    let leg = ((alpha0 - base) / h).floor() as isize;
                    if line < 0 || line >= n_lines as isize || leg < -1 || leg >= n_nodes as isize {
                        continue;
                    }
                    let x0 = base + leg as f64 * h;
                    let x1 = x0 + h;
                    let mut alpha = alpha0;
                    let mut perturbed = false;
                    if alpha - x0 < eps {
                        alpha = x0 + eps;
                        perturbed = true;
                    } else if x1 - alpha < eps {
                        alpha = x1 - eps;
                        perturbed = true;
                    }
                    records.push(IntersectionRecord {
                        family,
                        line,
                        leg,
                        alpha,
                        h_plus: x1 - alpha,
                        h_minus: x0 - alpha,
                        element: e,
                        local: [1.0 - s, s],
                        crossing_sign: nl.signum(),
                        grazing: nl.abs() < 1e-8,
                        perturbed,
                    });
                }
            }
        }
    }
    records.sort_by(|p, q| {
        p.key()
            .cmp(&q.key())
            .then(p.alpha.total_cmp(&q.alpha))
            .then(p.element.cmp(&q.element))
    });
    let mut index = HashMap::new();
    let mut lo = 0;
    while lo < records.len() {
        let key = records[lo].key();
        let mut hi = lo + 1;
        while hi < records.len() && records[hi].key() == key {
            hi += 1;
        }
        if hi - lo > MAX_CROSSINGS_PER_LEG {
            return Err(Error::UnderResolvedInterface {
                leg: format!("{}[{},{}]", key.0.name(), key.1, key.2),
                count: hi - lo,
            });
        }
        index.insert(key, (lo, hi - lo));
        lo = hi;
    }
    Ok(Intersections { records, index })
}
