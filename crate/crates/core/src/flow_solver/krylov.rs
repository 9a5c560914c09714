//! Restarted flexible GMRES with right preconditioning.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Stop when `||b - A x|| <= rel_tol ||b|| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iter: 200,
            rel_tol: 1e-10,
            abs_tol: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub residual: f64,
    pub rhs_norm: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x`. The preconditioner may change between
/// iterations.
pub fn fgmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: &KrylovOptions,
) -> Result<KrylovStats> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let m = opts.restart.max(1);
    let bnorm = norm(b);
    let target = opts.rel_tol * bnorm + opts.abs_tol;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;

    let residual = |apply: &mut dyn FnMut(&[f64], &mut [f64]), x: &[f64], r: &mut [f64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm(r)
    };

    let mut beta = residual(&mut apply, x, &mut r);
    loop {
        if !beta.is_finite() {
            return Err(Error::NonFinite("Krylov residual".into()));
        }
        if beta <= target {
            return Ok(KrylovStats {
                iterations,
                residual: beta,
                rhs_norm: bnorm,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: beta,
            });
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            let mut zk = vec![0.0; n];
            precond(&v[k], &mut zk);
            apply(&zk, &mut w);
            z.push(zk);
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    hess[i][k] += hij;
                    for (wl, vl) in w.iter_mut().zip(vi) {
                        *wl -= hij * vl;
                    }
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / d;
                sn[k] = hess[k + 1][k] / d;
            }
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // Back substitution for the k Hessenberg columns.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = if hess[i][i] != 0.0 { (g[i] - s) / hess[i][i] } else { 0.0 };
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xl, zl) in x.iter_mut().zip(zi) {
                *xl += yi * zl;
            }
        }
        beta = residual(&mut apply, x, &mut r);
    }
}
