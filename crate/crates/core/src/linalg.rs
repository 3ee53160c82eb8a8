//! Small dense linear algebra: Gaussian elimination on row-major square
//! matrices of size at most a handful.

use crate::error::{Error, Result};

/// Row-major `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    a: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.a[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        if r1 != r2 {
            for j in 0..self.n {
                self.a.swap(r1 * self.n + j, r2 * self.n + j);
            }
        }
    }

    fn swap_cols(&mut self, c1: usize, c2: usize) {
        if c1 != c2 {
            for i in 0..self.n {
                self.a.swap(i * self.n + c1, i * self.n + c2);
            }
        }
    }

    /// Smallest pivot magnitude of Gaussian elimination with complete
    /// pivoting. Zero-size matrices report `+inf`.
    pub fn min_complete_pivot(&self) -> f64 {
        let n = self.n;
        let mut m = self.clone();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (mut pr, mut pc, mut best) = (k, k, -1.0);
            for i in k..n {
                for j in k..n {
                    let v = m.get(i, j).abs();
                    if v > best {
                        best = v;
                        pr = i;
                        pc = j;
                    }
                }
            }
            min_pivot = min_pivot.min(best);
            if best == 0.0 {
                return 0.0;
            }
            m.swap_rows(k, pr);
            m.swap_cols(k, pc);
            let piv = m.get(k, k);
            for i in k + 1..n {
                let f = m.get(i, k) / piv;
                if f != 0.0 {
                    for j in k..n {
                        let v = m.get(i, j) - f * m.get(k, j);
                        m.set(i, j, v);
                    }
                }
            }
        }
        min_pivot
    }

    /// Solves `A x = b` by elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut m = self.clone();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let pr = (k..n)
                .max_by(|&i, &j| m.get(i, k).abs().total_cmp(&m.get(j, k).abs()))
                .unwrap();
            let piv = m.get(pr, k);
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::Singular);
            }
            m.swap_rows(k, pr);
            rhs.swap(k, pr);
            for i in k + 1..n {
                let f = m.get(i, k) / piv;
                if f != 0.0 {
                    for j in k..n {
                        let v = m.get(i, j) - f * m.get(k, j);
                        m.set(i, j, v);
                    }
                    rhs[i] -= f * rhs[k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| m.get(k, j) * x[j]).sum();
            x[k] = (rhs[k] - s) / m.get(k, k);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(x)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}
