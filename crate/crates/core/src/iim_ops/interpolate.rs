use crate::error::{Error, Result};
use crate::jump_model::JumpFields;
use crate::mac_grid::{face_value, BoundaryState, Component, Grid, GridField};
use crate::surface_mesh::{closest_on_segment, Mesh2};
use crate::vector::{self, dot, sub};

/// Signed side of `x` relative to the current interface: positive outside.
///
/// Uses the closest point on the polyline; at a vertex the normal is the sum
/// of the adjacent element normals.
pub fn side_of(mesh: &Mesh2, normals: &[[f64; 2]], x: &[f64; 2]) -> f64 {
    let mut best = (f64::INFINITY, 0usize, 0.0, [0.0; 2]);
    for (e, el) in mesh.elements().iter().enumerate() {
        let (a, b) = (mesh.current()[el[0]], mesh.current()[el[1]]);
        let (s, p) = closest_on_segment(&a, &b, x);
        let d = vector::dist(&p, x);
        if d < best.0 {
            best = (d, e, s, p);
        }
    }
    let (_, e, s, p) = best;
    let n = if s <= 0.0 || s >= 1.0 {
        let v = mesh.elements()[e][if s <= 0.0 { 0 } else { 1 }];
        mesh.vertex_elements(v)
            .iter()
            .fold([0.0; 2], |acc, &f| vector::add(&acc, &normals[f]))
    } else {
        normals[e]
    };
    dot(&sub(x, &p), &n)
}

/// Bilinear interpolation of the face velocities at the interface nodes.
///
/// Lattice points on the interior side are replaced by the exterior extension
/// `u + [[grad u]] . (x - chi_j)` with `mu [[du_c/dx_k]] = -G_kc(chi_j)`, so for
/// piecewise-linear fields the result is the exterior limit at the node.
pub fn interpolate(
    mesh: &Mesh2,
    grid: &Grid,
    bc: &BoundaryState,
    u: &GridField,
    v: &GridField,
    jumps: Option<&JumpFields<2>>,
    mu: f64,
) -> Result<Vec<[f64; 2]>> {
    let jumps = jumps.filter(|j| j.velocity_gradient.iter().flatten().flatten().any(|&g| g != 0.0));
    let normals: Vec<[f64; 2]> = match jumps {
        Some(_) => (0..mesh.n_elements())
            .map(|e| mesh.element_geometry(e, true).map(|g| g.normal))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let h = grid.h;
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for (node, x) in mesh.current().iter().enumerate() {
        if !grid.contains(x) {
            return Err(Error::OutsideGrid { node, position: *x });
        }
        let mut vel = [0.0; 2];
        for (c, (comp, w)) in [(Component::U, u), (Component::V, v)].into_iter().enumerate() {
            let (ox, oy, imax, jmin, jmax) = match comp {
                Component::U => (0.0, 0.5, grid.nx as isize - 1, -1, grid.ny as isize - 1),
                Component::V => (0.5, 0.0, grid.nx as isize - 1, 0, grid.ny as isize - 1),
            };
            let fx = (x[0] - grid.origin[0]) / h - ox;
            let fy = (x[1] - grid.origin[1]) / h - oy;
            let (i0, j0) = match comp {
                Component::U => ((fx.floor() as isize).clamp(0, imax), (fy.floor() as isize).clamp(jmin, jmax)),
                Component::V => ((fx.floor() as isize).clamp(-1, imax), (fy.floor() as isize).clamp(jmin, jmax)),
            };
            let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
            let mut acc = 0.0;
            for (di, dj, wt) in [
                (0, 0, (1.0 - tx) * (1.0 - ty)),
                (1, 0, tx * (1.0 - ty)),
                (0, 1, (1.0 - tx) * ty),
                (1, 1, tx * ty),
            ] {
                let (i, j) = (i0 + di, j0 + dj);
                let mut val = face_value(grid, bc, comp, &w.data, i, j);
                if let Some(jf) = jumps {
                    let p = [
                        grid.origin[0] + (i as f64 + ox) * h,
                        grid.origin[1] + (j as f64 + oy) * h,
                    ];
                    if side_of(mesh, &normals, &p) < 0.0 {
                        let g = &jf.velocity_gradient[node];
                        val -= (g[0][c] * (p[0] - x[0]) + g[1][c] * (p[1] - x[1])) / mu;
                    }
                }
                acc += wt * val;
            }
            vel[c] = acc;
        }
        out.push(vel);
    }
    Ok(out)
}
