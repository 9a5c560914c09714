//! Built-in interface geometries.
//!
//! # Panics
//! Every generator panics on non-positive sizes or too few elements, since such
//! inputs cannot produce a valid mesh.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{InterfaceMesh, Mesh2, Mesh3, Winding};
use crate::vector::{self, cross, sub};

fn closed_polyline(points: Vec<[f64; 2]>) -> Mesh2 {
    let n = points.len();
    let elements = (0..n).map(|k| [k, (k + 1) % n]).collect();
    InterfaceMesh::new(points, elements, Winding::Ccw).expect("generated polygon is valid")
}

/// Regular `n`-gon inscribed in the circle, first vertex at angle `phase`.
pub fn circle(center: [f64; 2], radius: f64, n: usize, phase: f64) -> Mesh2 {
    assert!(n >= 3 && radius > 0.0);
    closed_polyline(
        (0..n)
            .map(|k| {
                let t = phase + 2.0 * PI * k as f64 / n as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect(),
    )
}

/// Number of circle segments giving element length close to `m_fac * h`.
pub fn circle_segments(radius: f64, h: f64, m_fac: f64) -> usize {
    ((2.0 * PI * radius / (m_fac * h)).round() as usize).max(3)
}

/// Ellipse with semi-axes `a` (x) and `b` (y), vertices uniform in angle parameter.
pub fn ellipse(center: [f64; 2], a: f64, b: f64, n: usize) -> Mesh2 {
    assert!(n >= 3 && a > 0.0 && b > 0.0);
    closed_polyline(
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [center[0] + a * t.cos(), center[1] + b * t.sin()]
            })
            .collect(),
    )
}

/// Two straight walls `y = y_center -+ half_width` spanning `[x0, x1]`, `n` segments
/// each. Normals point away from the channel: `(0, -1)` on the lower wall and
/// `(0, 1)` on the upper wall.
pub fn channel_walls(x0: f64, x1: f64, y_center: f64, half_width: f64, n: usize) -> Mesh2 {
    assert!(n >= 1 && x1 > x0 && half_width > 0.0);
    let mut pts = Vec::with_capacity(2 * (n + 1));
    let mut els = Vec::with_capacity(2 * n);
    for k in 0..=n {
        pts.push([x0 + (x1 - x0) * k as f64 / n as f64, y_center - half_width]);
    }
    for k in 0..=n {
        pts.push([x1 - (x1 - x0) * k as f64 / n as f64, y_center + half_width]);
    }
    for k in 0..n {
        els.push([k, k + 1]);
        els.push([n + 1 + k, n + 2 + k]);
    }
    InterfaceMesh::new(pts, els, Winding::Ccw).expect("generated walls are valid")
}

/// Icosahedron refined `subdivisions` times, vertices projected to the sphere.
pub fn icosphere(center: [f64; 3], radius: f64, subdivisions: usize) -> Mesh3 {
    assert!(radius > 0.0);
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for p in pts.iter_mut() {
        *p = vector::normalize(p, 0.0).unwrap();
    }
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, pts: &mut Vec<[f64; 3]>| {
            *mid.entry((i.min(j), i.max(j))).or_insert_with(|| {
                let m = vector::scale(&vector::add(&pts[i], &pts[j]), 0.5);
                pts.push(vector::normalize(&m, 0.0).unwrap());
                pts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let pts = pts.iter().map(|p| vector::axpy(&center, radius, p)).collect();
    orient_outward(pts, tris, |p| sub(p, &center))
}

/// Open tube of radius `radius` around the line parallel to x through
/// `(x0, yc, zc)`, spanning `[x0, x0 + length]`.
pub fn cylinder_tube(origin: [f64; 3], radius: f64, length: f64, n_theta: usize, n_axial: usize) -> Mesh3 {
    assert!(n_theta >= 3 && n_axial >= 1 && radius > 0.0 && length > 0.0);
    let mut pts = Vec::with_capacity(n_theta * (n_axial + 1));
    for k in 0..=n_axial {
        let x = origin[0] + length * k as f64 / n_axial as f64;
        for j in 0..n_theta {
            let t = 2.0 * PI * j as f64 / n_theta as f64;
            pts.push([x, origin[1] + radius * t.cos(), origin[2] + radius * t.sin()]);
        }
    }
    let id = |k: usize, j: usize| k * n_theta + j % n_theta;
    let mut tris = Vec::with_capacity(2 * n_theta * n_axial);
    for k in 0..n_axial {
        for j in 0..n_theta {
            tris.push([id(k, j), id(k + 1, j), id(k + 1, j + 1)]);
            tris.push([id(k, j), id(k + 1, j + 1), id(k, j + 1)]);
        }
    }
    orient_outward(pts, tris, |p| [0.0, p[1] - origin[1], p[2] - origin[2]])
}

fn orient_outward(pts: Vec<[f64; 3]>, mut tris: Vec<[usize; 3]>, outward: impl Fn(&[f64; 3]) -> [f64; 3]) -> Mesh3 {
    let [a, b, c] = tris[0];
    let n = cross(&sub(&pts[b], &pts[a]), &sub(&pts[c], &pts[a]));
    let centroid = vector::mean(&[pts[a], pts[b], pts[c]]);
    if vector::dot(&n, &outward(&centroid)) < 0.0 {
        for t in tris.iter_mut() {
            t.swap(1, 2);
        }
    }
    InterfaceMesh::new(pts, tris, Winding::Ccw).expect("generated surface is valid")
}
