use std::collections::{BTreeMap, VecDeque};

use super::quadrature::{self, Rule};
use super::InterfaceMesh;
use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as full CSR.
#[derive(Clone, Debug)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    fn from_map(n: usize, entries: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for (&(i, j), &v) in entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Envelope (skyline) Cholesky factor in a bandwidth-reducing ordering.
#[derive(Clone, Debug)]
struct Skyline {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    l: Vec<f64>,
}

impl Skyline {
    fn factor(a: &SparseSym) -> Result<Self> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (k, &p) in perm.iter().enumerate() {
            for (j, _) in a.row(p) {
                first[k] = first[k].min(inv[j]);
            }
        }
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut l = vec![0.0; offset[n]];
        for (k, &p) in perm.iter().enumerate() {
            for (j, v) in a.row(p) {
                let c = inv[j];
                if c <= k {
                    l[offset[k] + c - first[k]] = v;
                }
            }
        }
        let at = |i: usize, j: usize, first: &[usize]| offset[i] + j - first[i];
        for i in 0..n {
            for j in first[i]..i {
                let lo = first[i].max(first[j]);
                let mut s = l[at(i, j, &first)];
                for k in lo..j {
                    s -= l[at(i, k, &first)] * l[at(j, k, &first)];
                }
                l[at(i, j, &first)] = s / l[at(j, j, &first)];
            }
            let mut d = l[at(i, i, &first)];
            for k in first[i]..i {
                let v = l[at(i, k, &first)];
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: perm[i], value: d });
            }
            l[at(i, i, &first)] = d.sqrt();
        }
        Ok(Self { perm, first, offset, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let at = |i: usize, j: usize| self.offset[i] + j - self.first[i];
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.l[at(i, k)] * y[k];
            }
            y[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[at(i, i)];
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.l[at(i, k)] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nb.sort_by_key(|&j| (degree[j], j));
            for j in nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Consistent P1 mass matrix `M_ij = int psi_i psi_j dA` on the reference configuration.
#[derive(Clone, Debug)]
pub struct MassMatrix {
    matrix: SparseSym,
    factor: Skyline,
}

impl MassMatrix {
    pub fn assemble<const D: usize>(mesh: &InterfaceMesh<D>) -> Result<Self> {
        let rule = quadrature::rule::<D>(Rule::Quadratic);
        let mut entries = BTreeMap::new();
        for e in 0..mesh.n_elements() {
            let g = mesh.element_geometry(e, false)?;
            let el = mesh.element(e)?;
            for a in 0..D {
                for b in 0..D {
                    let m: f64 = rule.iter().map(|q| q.weight * q.local[a] * q.local[b]).sum();
                    *entries.entry((el[a], el[b])).or_insert(0.0) += g.measure * m;
                }
            }
        }
        let matrix = SparseSym::from_map(mesh.n_vertices(), &entries);
        let factor = Skyline::factor(&matrix)?;
        Ok(Self { matrix, factor })
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    /// Lumped weights `int psi_i dA`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!("rhs length {} vs mass matrix {}", b.len(), self.dim())));
        }
        Ok(self.factor.solve(b))
    }
}
