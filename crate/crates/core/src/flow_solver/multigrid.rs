//! Cell-centered geometric multigrid for the pressure Poisson operator `D G`.
//!
//! Boundary edges are either closed (zero gradient) or open (pressure held at
//! zero on the boundary face, ghost `-psi`).

#[derive(Clone, Debug)]
struct Level {
    nx: usize,
    ny: usize,
    ih2: f64,
    /// Ghost factors per boundary edge: +1 closed, -1 open.
    left: Vec<f64>,
    right: Vec<f64>,
    bottom: Vec<f64>,
    top: Vec<f64>,
    diag: Vec<f64>,
}

impl Level {
    fn new(nx: usize, ny: usize, h: f64, left: Vec<f64>, right: Vec<f64>, bottom: Vec<f64>, top: Vec<f64>) -> Self {
        let mut diag = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let mut d = 0.0;
                d += if i > 0 { 1.0 } else { 1.0 - left[j] };
                d += if i + 1 < nx { 1.0 } else { 1.0 - right[j] };
                d += if j > 0 { 1.0 } else { 1.0 - bottom[i] };
                d += if j + 1 < ny { 1.0 } else { 1.0 - top[i] };
                diag[i + nx * j] = d;
            }
        }
        Self {
            nx,
            ny,
            ih2: 1.0 / (h * h),
            left,
            right,
            bottom,
            top,
            diag,
        }
    }

    fn n(&self) -> usize {
        self.nx * self.ny
    }

    /// Sum of neighbour values, excluding ghosts (closed ghosts cancel in the
    /// stencil and open ghosts are folded into the diagonal).
    #[inline]
    fn nbsum(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.nx;
        let k = i + nx * j;
        let mut s = 0.0;
        if i > 0 {
            s += x[k - 1];
        }
        if i + 1 < nx {
            s += x[k + 1];
        }
        if j > 0 {
            s += x[k - nx];
        }
        if j + 1 < self.ny {
            s += x[k + nx];
        }
        s
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = i + self.nx * j;
                y[k] = (self.nbsum(x, i, j) - self.diag[k] * x[k]) * self.ih2;
            }
        }
    }

    fn singular(&self) -> bool {
        [&self.left, &self.right, &self.bottom, &self.top]
            .iter()
            .all(|s| s.iter().all(|&a| a > 0.0))
    }

    fn smooth(&self, x: &mut [f64], b: &[f64], sweeps: usize) {
        let h2 = 1.0 / self.ih2;
        for _ in 0..sweeps {
            for color in 0..2 {
                for j in 0..self.ny {
                    let start = (j + color) % 2;
                    for i in (start..self.nx).step_by(2) {
                        let k = i + self.nx * j;
                        x[k] = (self.nbsum(x, i, j) - h2 * b[k]) / self.diag[k];
                    }
                }
            }
        }
    }

    fn can_coarsen(&self) -> bool {
        self.nx.is_multiple_of(2) && self.ny.is_multiple_of(2) && self.nx >= 4 && self.ny >= 4
    }

    fn coarsen(&self) -> Self {
        let pair = |v: &[f64]| -> Vec<f64> {
            v.chunks(2).map(|c| if c[0] < 0.0 || c[1] < 0.0 { -1.0 } else { 1.0 }).collect()
        };
        let h = (1.0 / self.ih2).sqrt() * 2.0;
        Level::new(
            self.nx / 2,
            self.ny / 2,
            h,
            pair(&self.left),
            pair(&self.right),
            pair(&self.bottom),
            pair(&self.top),
        )
    }

    /// Coarse value with ghost rules for `i` in `[-1, nx]` and `j` in `[-1, ny]`.
    fn ghosted(&self, e: &[f64], i: isize, j: isize) -> f64 {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        if i < 0 {
            return self.left[j.clamp(0, ny - 1) as usize] * self.ghosted(e, 0, j);
        }
        if i >= nx {
            return self.right[j.clamp(0, ny - 1) as usize] * self.ghosted(e, nx - 1, j);
        }
        if j < 0 {
            return self.bottom[i as usize] * self.ghosted(e, i, 0);
        }
        if j >= ny {
            return self.top[i as usize] * self.ghosted(e, i, ny - 1);
        }
        e[(i + nx * j) as usize]
    }
}

/// Multigrid hierarchy for one boundary classification.
#[derive(Clone, Debug)]
pub struct PoissonMg {
    levels: Vec<Level>,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
}

fn subtract_mean(x: &mut [f64]) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

impl PoissonMg {
    /// `open_*[k]` marks boundary edges where the pressure is prescribed.
    pub fn new(nx: usize, ny: usize, h: f64, open_left: &[bool], open_right: &[bool], open_bottom: &[bool], open_top: &[bool]) -> Self {
        let f = |v: &[bool]| v.iter().map(|&o| if o { -1.0 } else { 1.0 }).collect();
        let mut levels = vec![Level::new(nx, ny, h, f(open_left), f(open_right), f(open_bottom), f(open_top))];
        while levels.last().unwrap().can_coarsen() {
            let c = levels.last().unwrap().coarsen();
            levels.push(c);
        }
        Self {
            levels,
            pre_sweeps: 2,
            post_sweeps: 2,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// True when the operator has the constant nullspace.
    pub fn singular(&self) -> bool {
        self.levels[0].singular()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.levels[0].apply(x, y);
    }

    /// Runs V-cycles on `L x = b` until `||b - L x|| <= rel_tol ||b||` or
    /// `max_cycles`. Returns the final relative residual.
    pub fn solve(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_cycles: usize) -> f64 {
        let mut b = b.to_vec();
        let singular = self.singular();
        if singular {
            subtract_mean(&mut b);
        }
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bn == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return 0.0;
        }
        let mut r = vec![0.0; b.len()];
        let mut rel = f64::INFINITY;
        for _ in 0..max_cycles {
            self.vcycle(0, x, &b);
            if singular {
                subtract_mean(x);
            }
            self.levels[0].apply(x, &mut r);
            rel = r.iter().zip(&b).map(|(a, c)| (c - a) * (c - a)).sum::<f64>().sqrt() / bn;
            if rel <= rel_tol {
                break;
            }
        }
        rel
    }

    fn vcycle(&self, l: usize, x: &mut [f64], b: &[f64]) {
        let lev = &self.levels[l];
        if l + 1 == self.levels.len() {
            coarse_solve(lev, x, b);
            return;
        }
        lev.smooth(x, b, self.pre_sweeps);
        let mut r = vec![0.0; lev.n()];
        lev.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let c = &self.levels[l + 1];
        let mut rc = vec![0.0; c.n()];
        for j in 0..lev.ny {
            for i in 0..lev.nx {
                rc[i / 2 + c.nx * (j / 2)] += 0.25 * r[i + lev.nx * j];
            }
        }
        let mut ec = vec![0.0; c.n()];
        self.vcycle(l + 1, &mut ec, &rc);
        for j in 0..lev.ny {
            for i in 0..lev.nx {
                let (ci, cj) = ((i / 2) as isize, (j / 2) as isize);
                let di = if i % 2 == 0 { -1 } else { 1 };
                let dj = if j % 2 == 0 { -1 } else { 1 };
                let e = 0.5625 * c.ghosted(&ec, ci, cj)
                    + 0.1875 * (c.ghosted(&ec, ci + di, cj) + c.ghosted(&ec, ci, cj + dj))
                    + 0.0625 * c.ghosted(&ec, ci + di, cj + dj);
                x[i + lev.nx * j] += e;
            }
        }
        lev.smooth(x, b, self.post_sweeps);
    }
}

/// Conjugate gradients on `-L`, which is symmetric positive (semi)definite.
fn coarse_solve(lev: &Level, x: &mut [f64], b: &[f64]) {
    let n = lev.n();
    let singular = lev.singular();
    let mut rhs: Vec<f64> = b.iter().map(|v| -v).collect();
    if singular {
        subtract_mean(&mut rhs);
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        lev.apply(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    };
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
    if singular {
        subtract_mean(&mut r);
    }
    let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..4 * n + 20 {
        if rr.sqrt() <= 1e-13 * bn {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if singular {
            subtract_mean(&mut r);
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    if singular {
        subtract_mean(x);
    }
}
