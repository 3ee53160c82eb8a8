//! Seeded random families and the invariant suite run by `widthcalc check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{psi, SearchOptions};
use crate::error::Result;
use crate::exponents::{mixed_norm, ExponentVector, GridShape, QParam, Tensor};
use crate::extremal::{construct_witness, verify_membership, DENSE_LIMIT};
use crate::family::{
    check_general_position, perturb, representable_u, BallFamily, BallSpec, DEFAULT_GP_TOL,
};
use crate::oracle::{compare, minimize, MinimizeOptions};

/// Oracle agreement tolerance on log values.
pub const ORACLE_TOL: f64 = 1e-6;
/// Witness q-norm identity tolerance on log values.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative slack in the interpolation inequality.
pub const INTERPOLATION_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomBounds {
    pub max_balls: usize,
    pub max_dim: usize,
    pub q_values: Vec<f64>,
    pub k_min: u64,
    pub k_max: u64,
    /// `log nu` is drawn uniformly from `[-log_nu_span, log_nu_span]`.
    pub log_nu_span: f64,
    /// Perturbation used to reach general position.
    pub perturb_delta: f64,
}

impl Default for RandomBounds {
    fn default() -> Self {
        Self {
            max_balls: 4,
            max_dim: 3,
            q_values: vec![1.0, 1.5, 2.0],
            k_min: 2,
            k_max: 64,
            log_nu_span: 3.0,
            perturb_delta: 1e-7,
        }
    }
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw within `bounds`; not necessarily in general position.
pub fn random_family(rng: &mut impl Rng, bounds: &RandomBounds) -> Result<BallFamily> {
    let n = rng.gen_range(1..=bounds.max_balls);
    let d = rng.gen_range(1..=bounds.max_dim);
    let q = bounds.q_values[rng.gen_range(0..bounds.q_values.len())];
    let k: Vec<u64> = (0..d)
        .map(|_| rng.gen_range(bounds.k_min..=bounds.k_max))
        .collect();
    let balls = (0..n)
        .map(|a| {
            let u: Vec<f64> = (0..d)
                .map(|_| representable_u(rng.gen_range(0.0..=1.0)))
                .collect();
            let log_nu = rng.gen_range(-bounds.log_nu_span..=bounds.log_nu_span);
            BallSpec::new(format!("b{}", a + 1), log_nu.exp(), ExponentVector::new(u)?)
        })
        .collect::<Result<Vec<_>>>()?;
    BallFamily::new(balls, GridShape::new(k)?, QParam::new(q)?, None)
}

/// Random family number `index` of the stream `seed`, perturbed into
/// general position when needed.
pub fn general_position_family(seed: u64, index: u64, bounds: &RandomBounds) -> Result<BallFamily> {
    let mut rng = trial_rng(seed, index);
    loop {
        let f = random_family(&mut rng, bounds)?;
        if check_general_position(&f, DEFAULT_GP_TOL).ok {
            return Ok(f);
        }
        if let Ok(g) = perturb(&f, bounds.perturb_delta, rng.gen()) {
            return Ok(g);
        }
    }
}

/// Random tensor of the given shape, mixing signs and magnitudes.
pub fn random_tensor(rng: &mut impl Rng, shape: GridShape) -> Result<Tensor> {
    let len = shape.kprod() as usize;
    let data = (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                let mag: f64 = rng.gen_range(0.0..1.0);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * mag * mag * 10f64.powi(rng.gen_range(-2..=2))
            }
        })
        .collect();
    Tensor::new(shape, data)
}

/// Random simplex weights (normalized exponentials).
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Checks `||x||_theta <= prod_j ||x||_{u_j}^{lambda_j}` for
/// `theta = sum_j lambda_j u_j`. Returns `(lhs, rhs)` as logs.
pub fn interpolation_gap(
    x: &Tensor,
    exps: &[ExponentVector],
    lambda: &[f64],
) -> Result<(f64, f64)> {
    let d = x.shape().dim();
    let theta: Vec<f64> = (0..d)
        .map(|i| {
            exps.iter()
                .zip(lambda)
                .map(|(u, l)| l * u[i])
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect();
    let lhs = mixed_norm(x, &ExponentVector::new(theta)?)?.ln();
    let mut rhs = 0.0;
    for (u, l) in exps.iter().zip(lambda) {
        rhs += l * mixed_norm(x, u)?.ln();
    }
    Ok((lhs, rhs))
}

/// Shape with the same dimension and `kprod <= DENSE_LIMIT`.
fn desk_shape(ks: &GridShape) -> GridShape {
    let mut k = ks.sides().to_vec();
    while k.iter().map(|&v| v as u128).product::<u128>() > DENSE_LIMIT {
        let i = (0..k.len()).max_by_key(|&i| k[i]).unwrap();
        k[i] = k[i].div_ceil(2);
    }
    GridShape::new(k).expect("sides stay positive")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub index: u64,
    pub balls: usize,
    pub dim: usize,
    pub q: f64,
    pub log_psi: f64,
    pub oracle_equality: bool,
    pub witness_membership: bool,
    pub witness_identity: bool,
    pub interpolation: bool,
    pub failures: Vec<String>,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_trial(seed: u64, index: u64, bounds: &RandomBounds) -> Result<TrialOutcome> {
    let f = general_position_family(seed, index, bounds)?;
    let mut failures = Vec::new();

    let p = psi(&f, &SearchOptions::default())?;
    let orc = minimize(&f, &MinimizeOptions::default())?;
    let verdict = compare(&p, &orc, ORACLE_TOL);
    if !verdict.pass {
        failures.push(format!(
            "oracle_equality: log psi {} vs oracle {}",
            verdict.log_psi, verdict.oracle_log_value
        ));
    }

    let (membership, identity) = match construct_witness(&f, &p.best) {
        Ok(w) => {
            let report = verify_membership(&w, &f, true);
            if !report.pass {
                failures.push(format!(
                    "witness_membership: worst margin {} at {}",
                    report.worst_margin, report.worst_label
                ));
            }
            let gap = (w.log_q_norm.get() - p.log_psi.get()).abs();
            if gap > IDENTITY_TOL {
                failures.push(format!("witness_identity: gap {gap}"));
            }
            (report.pass, gap <= IDENTITY_TOL)
        }
        Err(e) => {
            failures.push(format!("witness_membership: {e}"));
            (false, false)
        }
    };

    let mut rng = trial_rng(seed ^ 0x5eed_1e55, index);
    let x = random_tensor(&mut rng, desk_shape(f.ks()))?;
    let exps: Vec<ExponentVector> = f.balls().iter().map(|b| b.u.clone()).collect();
    let lambda = random_weights(&mut rng, exps.len());
    let (lhs, rhs) = interpolation_gap(&x, &exps, &lambda)?;
    let interpolation = lhs <= rhs + INTERPOLATION_SLACK.ln_1p() || lhs == f64::NEG_INFINITY;
    if !interpolation {
        failures.push(format!("interpolation: log lhs {lhs} > log rhs {rhs}"));
    }

    Ok(TrialOutcome {
        index,
        balls: f.len(),
        dim: f.dim(),
        q: f.q().q(),
        log_psi: p.log_psi.get(),
        oracle_equality: verdict.pass,
        witness_membership: membership,
        witness_identity: identity,
        interpolation,
        failures,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckCounts {
    pub pass: u64,
    pub fail: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub trials: u64,
    pub seed: u64,
    pub passed: u64,
    pub failed: u64,
    pub oracle_equality: CheckCounts,
    pub witness_membership: CheckCounts,
    pub witness_identity: CheckCounts,
    pub interpolation: CheckCounts,
    pub failures: Vec<TrialOutcome>,
}

fn tally(c: &mut CheckCounts, ok: bool) {
    if ok {
        c.pass += 1;
    } else {
        c.fail += 1;
    }
}

/// Runs `trials` seeded trials; results are independent of thread count.
pub fn run_check(trials: u64, seed: u64, bounds: &RandomBounds) -> Result<CheckSummary> {
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(seed, i, bounds))
        .collect::<Result<Vec<_>>>()?;
    let mut s = CheckSummary {
        trials,
        seed,
        passed: 0,
        failed: 0,
        oracle_equality: CheckCounts::default(),
        witness_membership: CheckCounts::default(),
        witness_identity: CheckCounts::default(),
        interpolation: CheckCounts::default(),
        failures: Vec::new(),
    };
    for o in outcomes {
        tally(&mut s.oracle_equality, o.oracle_equality);
        tally(&mut s.witness_membership, o.witness_membership);
        tally(&mut s.witness_identity, o.witness_identity);
        tally(&mut s.interpolation, o.interpolation);
        if o.passed() {
            s.passed += 1;
        } else {
            s.failed += 1;
            s.failures.push(o);
        }
    }
    Ok(s)
}
