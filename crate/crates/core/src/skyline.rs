//! Envelope (skyline) Cholesky factorization for banded sparse SPD matrices.
//!
//! Structured-grid stiffness matrices have bandwidth O(m) in node order, so
//! the envelope holds O(n m) entries and factorization costs O(n m^2).

use crate::sparse::Csr;
use crate::{Error, Result};

/// `P A P^T = L L^T` stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors `a` in its natural ordering.
    pub fn factor(a: &Csr) -> Result<Self> {
        Self::factor_permuted(a, (0..a.nrows).collect())
    }

    /// Factors `a` after the symmetric permutation `perm[new] = old`.
    pub fn factor_permuted(a: &Csr, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows;
        assert_eq!(a.ncols, n, "matrix must be square");
        assert_eq!(perm.len(), n);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            let (cols, _) = a.row(old);
            for &c in cols {
                let j = inv[c];
                if j < first[new] {
                    first[new] = j;
                }
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, v) = a.row(old);
            for (&c, &x) in cols.iter().zip(v) {
                let j = inv[c];
                if j <= new {
                    vals[offset[new] + j - first[new]] += x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let base_i = offset[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let base_j = offset[j];
                let li = &vals[base_i + k0 - fi..base_i + j - fi];
                let lj = &vals[base_j + k0 - fj..base_j + j - fj];
                let s: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
                let djj = vals[base_j + j - fj];
                let idx = base_i + j - fi;
                vals[idx] = (vals[idx] - s) / djj;
            }
            let row = &vals[base_i..base_i + i - fi];
            let s: f64 = row.iter().map(|x| x * x).sum();
            let d = vals[base_i + i - fi] - s;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: perm[i], pivot: d });
            }
            vals[base_i + i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { n, perm, first, offset, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.vals[self.offset[i + 1] - 1]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vals[self.offset[i]..self.offset[i + 1] - 1]
    }

    /// In place `y <- L^{-1} y` (permuted coordinates).
    pub fn forward(&self, y: &mut [f64]) {
        for i in 0..self.n {
            let fi = self.first[i];
            let s: f64 = self.row(i).iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.diag(i);
        }
    }

    /// In place `y <- L^{-T} y` (permuted coordinates).
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            y[i] /= self.diag(i);
            let xi = y[i];
            let fi = self.first[i];
            for (yk, l) in y[fi..i].iter_mut().zip(self.row(i)) {
                *yk -= l * xi;
            }
        }
    }

    pub fn to_permuted(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&old| x[old]).collect()
    }

    pub fn from_permuted(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = self.to_permuted(b);
        self.forward(&mut y);
        self.backward(&mut y);
        self.from_permuted(&y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = a.matvec(&x);
        let f = SkylineCholesky::factor(&a).unwrap();
        assert_eq!(f.envelope_size(), 50 + 49);
        let y = f.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn permuted_factorization_matches_dense_solve() {
        let a = Csr::from_dense(&[
            vec![4.0, 1.0, 0.0, 0.5],
            vec![1.0, 3.0, 0.2, 0.0],
            vec![0.0, 0.2, 2.0, 0.1],
            vec![0.5, 0.0, 0.1, 5.0],
        ]);
        let b = [1.0, -2.0, 0.5, 3.0];
        let f = SkylineCholesky::factor_permuted(&a, vec![2, 0, 3, 1]).unwrap();
        let x = f.solve(&b);
        let dense = a.to_dense().cholesky().unwrap().solve(&nalgebra::DVector::from_column_slice(&b));
        for i in 0..4 {
            assert!((x[i] - dense[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_reports_row() {
        let a = Csr::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match SkylineCholesky::factor(&a) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
