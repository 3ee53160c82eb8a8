//! Reciprocal exponent vectors, the single-ball width monomial `phi`, and
//! dense mixed-norm evaluation on small tensors.
//!
//! Exponents are always carried in reciprocal form `u = 1/p`, so `p = inf`
//! is exactly `u = 0`. Products of powers are carried as natural-log sums.
//!
//! # Axis order
//!
//! Tensors are stored flat with **index 1 fastest-varying**. The mixed norm
//! aggregates axis 1 innermost (with `p_1`), then axis 2 over the resulting
//! slices (with `p_2`), and so on, ending with axis `d` outermost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural logarithm of a positive quantity.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(pub f64);

impl LogValue {
    pub fn get(self) -> f64 {
        self.0
    }

    /// The positive quantity itself.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

/// Reciprocal exponents `u_i = 1/p_i` with every entry in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ExponentVector(Vec<f64>);

impl ExponentVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::Invalid("exponent vector must have d >= 1".into()));
        }
        for (index, &value) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ExponentOutOfRange { index, value });
            }
        }
        Ok(Self(u))
    }

    /// Builds from ordinary exponents `p_i in [1, inf]`.
    pub fn from_p(p: &[f64]) -> Result<Self> {
        let u = p
            .iter()
            .map(|&p| {
                if p.is_infinite() && p > 0.0 {
                    0.0
                } else {
                    1.0 / p
                }
            })
            .collect();
        Self::new(u)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Ordinary exponents; `u = 0` maps to `f64::INFINITY`.
    pub fn to_p(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|&u| if u == 0.0 { f64::INFINITY } else { 1.0 / u })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for ExponentVector {
    type Error = Error;

    fn try_from(u: Vec<f64>) -> Result<Self> {
        Self::new(u)
    }
}

impl From<ExponentVector> for Vec<f64> {
    fn from(v: ExponentVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for ExponentVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Grid shape `k = (k_1, ..., k_d)` of a d-way tensor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct GridShape {
    k: Vec<u64>,
    kprod: u128,
}

impl GridShape {
    pub fn new(k: Vec<u64>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::Invalid("grid shape must have d >= 1".into()));
        }
        let mut kprod: u128 = 1;
        for (index, &value) in k.iter().enumerate() {
            if value == 0 {
                return Err(Error::BadGridSide { index, value });
            }
            kprod = kprod.saturating_mul(value as u128);
        }
        Ok(Self { k, kprod })
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn sides(&self) -> &[u64] {
        &self.k
    }

    /// `k_1 * ... * k_d` (saturating).
    pub fn kprod(&self) -> u128 {
        self.kprod
    }

    pub fn log_sides(&self) -> Vec<f64> {
        self.k.iter().map(|&k| (k as f64).ln()).collect()
    }

    pub fn with_side(&self, axis: usize, value: u64) -> Result<Self> {
        let mut k = self.k.clone();
        k[axis] = value;
        Self::new(k)
    }
}

impl TryFrom<Vec<u64>> for GridShape {
    type Error = Error;

    fn try_from(k: Vec<u64>) -> Result<Self> {
        Self::new(k)
    }
}

impl From<GridShape> for Vec<u64> {
    fn from(g: GridShape) -> Self {
        g.k
    }
}

/// Target exponent `q in [1, 2]` together with `1/q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QParam {
    q: f64,
    uq: f64,
}

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&q) {
            return Err(Error::QOutOfRange(q));
        }
        Ok(Self { q, uq: 1.0 / q })
    }

    pub fn q(self) -> f64 {
        self.q
    }

    /// `1/q`.
    pub fn uq(self) -> f64 {
        self.uq
    }
}

impl TryFrom<f64> for QParam {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<QParam> for f64 {
    fn from(q: QParam) -> Self {
        q.q
    }
}

/// `log prod_j k_j^{(1/q - u_j)_+}`.
pub fn phi(u: &ExponentVector, ks: &GridShape, q: QParam) -> Result<LogValue> {
    check_dim(ks.dim(), u.dim())?;
    Ok(LogValue(phi_raw(u.as_slice(), &ks.log_sides(), q.uq())))
}

/// `phi` on raw slices with precomputed `log k_j`.
pub(crate) fn phi_raw(u: &[f64], log_k: &[f64], uq: f64) -> f64 {
    u.iter()
        .zip(log_k)
        .map(|(&u, &lk)| (uq - u).max(0.0) * lk)
        .sum()
}

/// `log prod_i s_i^{u_i}`: the mixed norm of the indicator of the box
/// `[1, s_1] x ... x [1, s_d]`.
///
/// Sides may be real; the bound is `1 <= s_i <= k_i`, which is checked when
/// `ks` is given.
pub fn box_norm(s: &[f64], u: &ExponentVector, ks: Option<&GridShape>) -> Result<LogValue> {
    check_dim(u.dim(), s.len())?;
    if let Some(ks) = ks {
        check_dim(ks.dim(), s.len())?;
    }
    let mut acc = 0.0;
    for (i, &si) in s.iter().enumerate() {
        let bound = ks.map_or(f64::INFINITY, |ks| ks.sides()[i] as f64);
        if !(si >= 1.0 && si <= bound) {
            return Err(Error::BoxOutOfRange {
                index: i,
                value: si,
                bound,
            });
        }
        acc += u[i] * si.ln();
    }
    Ok(LogValue(acc))
}

/// Dense d-way tensor, index 1 fastest-varying.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: GridShape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: GridShape, data: Vec<f64>) -> Result<Self> {
        let expected = usize::try_from(shape.kprod()).unwrap_or(usize::MAX);
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// `height` on the box `1 <= i_j <= s_j`, zero elsewhere.
    pub fn indicator(shape: GridShape, s: &[u64], height: f64) -> Result<Self> {
        check_dim(shape.dim(), s.len())?;
        for (index, (&si, &ki)) in s.iter().zip(shape.sides()).enumerate() {
            if si < 1 || si > ki {
                return Err(Error::BoxOutOfRange {
                    index,
                    value: si as f64,
                    bound: ki as f64,
                });
            }
        }
        let len = usize::try_from(shape.kprod())
            .map_err(|_| Error::Invalid("tensor too large".into()))?;
        let sides = shape.sides().to_vec();
        let mut data = vec![0.0; len];
        let mut idx = vec![0u64; sides.len()];
        for cell in data.iter_mut() {
            if idx.iter().zip(s).all(|(&i, &si)| i < si) {
                *cell = height;
            }
            for (ij, &kj) in idx.iter_mut().zip(&sides) {
                *ij += 1;
                if *ij < kj {
                    break;
                }
                *ij = 0;
            }
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Flat little-endian f64 dump, index 1 fastest-varying.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

/// Anisotropic norm: axis 1 aggregated innermost with `p_1`, axis `d`
/// outermost with `p_d`.
pub fn mixed_norm(x: &Tensor, u: &ExponentVector) -> Result<f64> {
    check_dim(x.shape.dim(), u.dim())?;
    let mut current: Vec<f64> = x.data.iter().map(|v| v.abs()).collect();
    for (axis, &k) in x.shape.sides().iter().enumerate() {
        let k = k as usize;
        current = current
            .chunks_exact(k)
            .map(|fiber| lp_norm(fiber, u[axis]))
            .collect();
    }
    debug_assert_eq!(current.len(), 1);
    Ok(current[0])
}

/// `l_p` norm of nonnegative entries with `u = 1/p`, scaled by the max entry.
fn lp_norm(values: &[f64], u: f64) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || u == 0.0 {
        return max;
    }
    if u == 1.0 {
        return values.iter().sum();
    }
    let p = 1.0 / u;
    let sum: f64 = values.iter().map(|&v| (v / max).powf(p)).sum();
    max * sum.powf(u)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
