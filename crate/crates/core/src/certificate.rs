//! Enumeration of interpolation certificates and the minimum `psi` over
//! them.
//!
//! A certificate is an m-subset of balls together with an active coordinate
//! set `I` of size `m-1` and weights `lambda > 0` summing to one such that
//! the interpolated exponent `sum_j lambda_j u_{alpha_j}` equals `1/q` on
//! `I`. Its value is `sum_j lambda_j log nu_{alpha_j} + phi(theta_u)`.

use rayon::prelude::*;

use crate::combin::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::exponents::{phi_raw, ExponentVector, LogValue};
use crate::family::BallFamily;
use crate::geometry::{affinely_independent, barycentric, PointSet};

/// Pairs handed to the thread pool per batch.
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Pivot threshold for affine independence of projected points.
    pub rank_tol: f64,
    /// Weights must exceed this to count as strictly positive.
    pub pos_tol: f64,
    /// Maximum number of (tuple, I) pairs examined.
    pub cap: u64,
    /// Keep every certificate in the result.
    pub keep_all: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            pos_tol: 1e-12,
            cap: 10_000_000,
            keep_all: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub m: usize,
    /// Ball indices into the family, in label order.
    pub tuple: Vec<usize>,
    pub labels: Vec<String>,
    /// Active coordinates, 0-based and sorted.
    pub active: Vec<usize>,
    pub lambda: Vec<f64>,
    pub theta_u: ExponentVector,
    pub log_value: LogValue,
}

impl Certificate {
    /// Stable identifier, e.g. `m2:b1+b2:I1` (coordinates 1-based).
    pub fn id(&self) -> String {
        let active: Vec<String> = self.active.iter().map(|i| (i + 1).to_string()).collect();
        format!(
            "m{}:{}:I{}",
            self.m,
            self.labels.join("+"),
            active.join(".")
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSolution {
    Solved {
        lambda: Vec<f64>,
        theta_u: ExponentVector,
    },
    Degenerate,
}

/// Solves `sum_j lambda_j u_{alpha_j, i} = 1/q` for `i in I` together with
/// `sum_j lambda_j = 1`.
pub fn solve_lambda(
    f: &BallFamily,
    tuple: &[usize],
    active: &[usize],
    opts: &SearchOptions,
) -> LambdaSolution {
    let m = tuple.len();
    assert_eq!(active.len() + 1, m, "|I| must equal m - 1");
    let balls = f.balls();
    if m == 1 {
        return LambdaSolution::Solved {
            lambda: vec![1.0],
            theta_u: balls[tuple[0]].u.clone(),
        };
    }
    let points = tuple
        .iter()
        .map(|&a| active.iter().map(|&i| balls[a].u[i]).collect())
        .collect();
    let ps = PointSet::new(points).expect("projected points have dimension m-1");
    if !affinely_independent(&ps, opts.rank_tol) {
        return LambdaSolution::Degenerate;
    }
    let target = vec![f.q().uq(); m - 1];
    let lambda = match barycentric(&ps, &target) {
        Ok(l) => l,
        Err(_) => return LambdaSolution::Degenerate,
    };
    if lambda.iter().any(|&l| l <= opts.pos_tol) {
        return LambdaSolution::Degenerate;
    }
    let theta: Vec<f64> = (0..f.dim())
        .map(|i| {
            tuple
                .iter()
                .zip(&lambda)
                .map(|(&a, &l)| l * balls[a].u[i])
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect();
    LambdaSolution::Solved {
        lambda,
        theta_u: ExponentVector::new(theta).expect("convex combination stays in [0, 1]"),
    }
}

/// Number of (tuple, I) pairs: `sum_m C(|A|, m) C(d, m-1)`.
pub fn pair_count(n_balls: usize, d: usize) -> u64 {
    (1..=(d + 1).min(n_balls))
        .map(|m| binomial(n_balls, m).saturating_mul(binomial(d, m - 1)))
        .fold(0u64, |a, b| a.saturating_add(b))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumerationCounts {
    pub pairs_examined: u64,
    pub certificates: u64,
    /// Certificates found per m (index 0 is m = 1).
    pub per_m: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiResult {
    pub log_psi: LogValue,
    pub best: Certificate,
    pub all_candidates: Option<Vec<Certificate>>,
    pub counts: EnumerationCounts,
}

impl PsiResult {
    pub fn psi(&self) -> f64 {
        self.log_psi.exp()
    }
}

fn pair_stream(f: &BallFamily) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> + '_ {
    let n = f.len();
    let d = f.dim();
    let mut by_label: Vec<usize> = (0..n).collect();
    by_label.sort_by(|&a, &b| f.balls()[a].label.cmp(&f.balls()[b].label));
    (1..=(d + 1).min(n)).flat_map(move |m| {
        let by_label = by_label.clone();
        Combinations::new(n, m).flat_map(move |pos| {
            let tuple: Vec<usize> = pos.iter().map(|&p| by_label[p]).collect();
            Combinations::new(d, m - 1).map(move |active| (tuple.clone(), active))
        })
    })
}

fn make_certificate(
    f: &BallFamily,
    tuple: Vec<usize>,
    active: Vec<usize>,
    opts: &SearchOptions,
    log_k: &[f64],
) -> Option<Certificate> {
    match solve_lambda(f, &tuple, &active, opts) {
        LambdaSolution::Degenerate => None,
        LambdaSolution::Solved { lambda, theta_u } => {
            let nu_part: f64 = tuple
                .iter()
                .zip(&lambda)
                .map(|(&a, &l)| l * f.balls()[a].log_nu)
                .sum();
            let log_value = LogValue(nu_part + phi_raw(theta_u.as_slice(), log_k, f.q().uq()));
            Some(Certificate {
                m: tuple.len(),
                labels: tuple.iter().map(|&a| f.balls()[a].label.clone()).collect(),
                tuple,
                active,
                lambda,
                theta_u,
                log_value,
            })
        }
    }
}

fn enumerate_counted(
    f: &BallFamily,
    opts: &SearchOptions,
) -> Result<(Vec<Certificate>, EnumerationCounts)> {
    let total = pair_count(f.len(), f.dim());
    let limit = total.min(opts.cap);
    let log_k = f.ks().log_sides();
    let mut certs = Vec::new();
    let mut stream = pair_stream(f).take(limit as usize);
    let mut examined = 0u64;
    loop {
        let batch: Vec<_> = stream.by_ref().take(CHUNK).collect();
        if batch.is_empty() {
            break;
        }
        examined += batch.len() as u64;
        let found: Vec<Option<Certificate>> = batch
            .into_par_iter()
            .map(|(tuple, active)| make_certificate(f, tuple, active, opts, &log_k))
            .collect();
        certs.extend(found.into_iter().flatten());
    }
    let mut per_m = vec![0u64; (f.dim() + 1).min(f.len())];
    for c in &certs {
        per_m[c.m - 1] += 1;
    }
    let counts = EnumerationCounts {
        pairs_examined: examined,
        certificates: certs.len() as u64,
        per_m,
    };
    if total > opts.cap {
        return Err(Error::CapExceeded {
            cap: opts.cap,
            total,
            partial: certs,
        });
    }
    Ok((certs, counts))
}

/// All non-degenerate certificates, ordered by `(m, tuple labels, I)`.
pub fn enumerate_certificates(f: &BallFamily, opts: &SearchOptions) -> Result<Vec<Certificate>> {
    enumerate_counted(f, opts).map(|(c, _)| c)
}

/// Minimum certificate value; the first minimal certificate in enumeration
/// order is reported.
pub fn psi(f: &BallFamily, opts: &SearchOptions) -> Result<PsiResult> {
    let (certs, counts) = enumerate_counted(f, opts)?;
    let mut best: Option<&Certificate> = None;
    for c in &certs {
        if best.is_none_or(|b| c.log_value.get() < b.log_value.get()) {
            best = Some(c);
        }
    }
    let best = best.expect("m = 1 certificates always exist").clone();
    Ok(PsiResult {
        log_psi: best.log_value,
        best,
        all_candidates: opts.keep_all.then_some(certs),
        counts,
    })
}
