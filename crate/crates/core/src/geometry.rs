//! Affine predicates and barycentric coordinates in exponent space.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `m` points in `R^{m-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::Invalid("point set must be nonempty".into()));
        }
        for p in &points {
            if p.len() != m - 1 {
                return Err(Error::DimensionMismatch {
                    expected: m - 1,
                    got: p.len(),
                });
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Copy with point `i` replaced by `eta`.
    pub fn replaced(&self, i: usize, eta: &[f64]) -> Result<Self> {
        let mut points = self.points.clone();
        points[i] = eta.to_vec();
        Self::new(points)
    }
}

/// True iff the difference matrix `xi_j - xi_1` (j = 2..m) has every
/// complete-pivoting pivot larger than `tol` in magnitude.
pub fn affinely_independent(ps: &PointSet, tol: f64) -> bool {
    let m = ps.len();
    if m == 1 {
        return true;
    }
    let base = &ps.points[0];
    let rows: Vec<Vec<f64>> = ps.points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    Matrix::from_rows(&rows).min_complete_pivot() > tol
}

/// Weights `w` with `sum w = 1` and `sum w_j xi_j = a`.
pub fn barycentric(ps: &PointSet, a: &[f64]) -> Result<Vec<f64>> {
    let m = ps.len();
    if a.len() != m - 1 {
        return Err(Error::DimensionMismatch {
            expected: m - 1,
            got: a.len(),
        });
    }
    let mut mat = Matrix::zeros(m);
    let mut rhs = vec![0.0; m];
    for r in 0..m - 1 {
        for (j, p) in ps.points.iter().enumerate() {
            mat.set(r, j, p[r]);
        }
        rhs[r] = a[r];
    }
    for j in 0..m {
        mat.set(m - 1, j, 1.0);
    }
    rhs[m - 1] = 1.0;
    let w = mat.solve(&rhs)?;
    let scale = 1.0 + a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = mat
        .mul_vec(&w)
        .iter()
        .zip(&rhs)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(Error::Singular);
    }
    Ok(w)
}

/// Index `i` (0-based) such that `a` lies in the simplex obtained by
/// replacing `xi_i` with `eta`, found by scanning `i = 0..m`.
pub fn replacement_vertex(ps: &PointSet, eta: &[f64], a: &[f64], tol: f64) -> Result<usize> {
    let w = barycentric(ps, a)?;
    if w.iter().any(|&v| v <= tol) {
        return Err(Error::Invalid(
            "query point is not interior to the simplex".into(),
        ));
    }
    for i in 0..ps.len() {
        let candidate = ps.replaced(i, eta)?;
        if !affinely_independent(&candidate, tol) {
            continue;
        }
        if let Ok(w) = barycentric(&candidate, a) {
            if w.iter().all(|&v| v >= -tol) {
                return Ok(i);
            }
        }
    }
    Err(Error::HypothesisViolated)
}
