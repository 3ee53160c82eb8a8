//! Continuous minimization of the interpolation upper bound over the
//! probability simplex on the ball index set:
//!
//! `F(w) = sum_a w_a log nu_a + sum_i max(0, 1/q - sum_a w_a u_{a,i}) log k_i`
//!
//! `F` is convex and piecewise linear. Any simplex point gives an upper
//! bound, and every certificate embeds as a simplex point, so the minimum
//! never exceeds `psi`.
//!
//! Two routes:
//! * exact (|A| <= 3): evaluate `F` at every vertex of the arrangement
//!   formed by the simplex edges and the kink lines `sum_a w_a u_{a,i} = 1/q`;
//! * iterative: coarse-to-fine lattice search, projected subgradient with
//!   diminishing steps, then exact line searches along the edge directions
//!   of the arrangement (pair directions `e_a - e_b` included) until no
//!   direction decreases `F`.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::PsiResult;
use crate::combin::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::exponents::LogValue;
use crate::family::BallFamily;

/// Tolerance for accepting input weights as a simplex point.
const SIMPLEX_TOL: f64 = 1e-9;

/// Largest edge-direction set computed for the refinement.
const MAX_DIRECTIONS: u64 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Exact,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions {
    /// Final lattice step is `2^-grid_levels`.
    pub grid_levels: u32,
    /// Subgradient stage stops after its best value stalls by less than this.
    pub refine_tol: f64,
    /// Dense lattice search only for `|A| <= dense_bound`.
    pub dense_bound: usize,
    /// `Auto` uses the exact route for `|A| <= 3`.
    pub method: Method,
    pub subgradient_iters: usize,
    pub max_iters: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_levels: 7,
            refine_tol: 1e-9,
            dense_bound: 6,
            method: Method::Auto,
            subgradient_iters: 400,
            max_iters: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    CapReached,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub weights: Vec<f64>,
    pub log_value: LogValue,
    pub iterations: usize,
    pub status: Status,
    pub method: Method,
    /// Best value after the lattice stage (iterative route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_value: Option<f64>,
    /// Best value after the subgradient stage (iterative route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgradient_value: Option<f64>,
}

/// Objective data in matrix form.
struct Problem {
    n: usize,
    c: Vec<f64>,
    /// Kinks with positive weight: (u row over balls, log k).
    kinks: Vec<(Vec<f64>, f64)>,
    b: f64,
}

impl Problem {
    fn new(f: &BallFamily) -> Self {
        let log_k = f.ks().log_sides();
        let kinks = (0..f.dim())
            .filter(|&i| log_k[i] > 0.0)
            .map(|i| (f.balls().iter().map(|b| b.u[i]).collect(), log_k[i]))
            .collect();
        Self {
            n: f.len(),
            c: f.balls().iter().map(|b| b.log_nu).collect(),
            kinks,
            b: f.q().uq(),
        }
    }

    fn eval(&self, w: &[f64]) -> f64 {
        let lin: f64 = dot(&self.c, w);
        let kink: f64 = self
            .kinks
            .iter()
            .map(|(row, g)| g * (self.b - dot(row, w)).max(0.0))
            .sum();
        lin + kink
    }

    fn subgradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = self.c.clone();
        for (row, gk) in &self.kinks {
            if dot(row, w) < self.b {
                for (ga, ra) in g.iter_mut().zip(row) {
                    *ga -= gk * ra;
                }
            }
        }
        g
    }

    /// Exact minimization of `t -> F(w + t v)` on the feasible segment.
    /// Returns `(t, value)`; ties go to the largest `t` when `far` is set.
    fn line_search(&self, w: &[f64], v: &[f64], far: bool) -> (f64, f64) {
        let mut tmax = f64::INFINITY;
        for (wa, va) in w.iter().zip(v) {
            if *va < 0.0 {
                tmax = tmax.min((wa / -va).max(0.0));
            }
        }
        if !tmax.is_finite() {
            return (0.0, self.eval(w));
        }
        let mut ts = vec![0.0, tmax];
        for (row, _) in &self.kinks {
            let slope = dot(row, v);
            if slope != 0.0 {
                let t = (self.b - dot(row, w)) / slope;
                if t > 0.0 && t < tmax {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        let mut best = (0.0, self.eval(w));
        let mut point = vec![0.0; w.len()];
        for t in ts {
            for ((p, wa), va) in point.iter_mut().zip(w).zip(v) {
                *p = (wa + t * va).max(0.0);
            }
            let val = self.eval(&point);
            if val < best.1 || (far && val <= best.1) {
                best = (t, val);
            }
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_simplex(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::SimplexViolation(format!(
            "expected {n} weights, got {}",
            w.len()
        )));
    }
    if w.iter().any(|&x| x.is_nan() || x < -SIMPLEX_TOL) {
        return Err(Error::SimplexViolation("negative weight".into()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::SimplexViolation(format!("weights sum to {s}")));
    }
    Ok(())
}

/// `F(w)` for a simplex point `w`.
pub fn objective(f: &BallFamily, weights: &[f64]) -> Result<LogValue> {
    check_simplex(weights, f.len())?;
    Ok(LogValue(Problem::new(f).eval(weights)))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (j + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|&v| (v - tau).max(0.0)).collect()
}

fn normalize(w: &mut [f64]) {
    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
}

pub fn minimize(f: &BallFamily, opts: &MinimizeOptions) -> Result<OracleResult> {
    let exact = match opts.method {
        Method::Exact => {
            if f.len() > 3 {
                return Err(Error::Invalid(
                    "exact oracle supports at most 3 balls".into(),
                ));
            }
            true
        }
        Method::Iterative => false,
        Method::Auto => f.len() <= 3,
    };
    let prob = Problem::new(f);
    if exact {
        Ok(minimize_exact(&prob))
    } else {
        Ok(minimize_iterative(&prob, opts))
    }
}

fn finish_exact(prob: &Problem, candidates: Vec<Vec<f64>>) -> OracleResult {
    let iterations = candidates.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mut w in candidates {
        normalize(&mut w);
        let v = prob.eval(&w);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((w, v));
        }
    }
    let (weights, value) = best.expect("at least one candidate");
    OracleResult {
        weights,
        log_value: LogValue(value),
        iterations,
        status: Status::Converged,
        method: Method::Exact,
        lattice_value: None,
        subgradient_value: None,
    }
}

fn minimize_exact(prob: &Problem) -> OracleResult {
    match prob.n {
        1 => finish_exact(prob, vec![vec![1.0]]),
        2 => {
            // w = (1 - t, t)
            let mut cands = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
            for (row, _) in &prob.kinks {
                let den = row[1] - row[0];
                if den != 0.0 {
                    let t = (prob.b - row[0]) / den;
                    if (0.0..=1.0).contains(&t) {
                        cands.push(vec![1.0 - t, t]);
                    }
                }
            }
            finish_exact(prob, cands)
        }
        3 => {
            // w = (1 - s - t, s, t); lines a s + b t = c
            let mut lines: Vec<(f64, f64, f64)> =
                vec![(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 1.0, 1.0)];
            for (row, _) in &prob.kinks {
                let (a, b) = (row[1] - row[0], row[2] - row[0]);
                if a != 0.0 || b != 0.0 {
                    lines.push((a, b, prob.b - row[0]));
                }
            }
            let mut cands = Vec::new();
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let (a1, b1, c1) = lines[i];
                    let (a2, b2, c2) = lines[j];
                    let det = a1 * b2 - a2 * b1;
                    if det == 0.0 {
                        continue;
                    }
                    let s = (c1 * b2 - c2 * b1) / det;
                    let t = (a1 * c2 - a2 * c1) / det;
                    let eps = 1e-12;
                    if s >= -eps && t >= -eps && s + t <= 1.0 + eps {
                        cands.push(vec![1.0 - s - t, s, t]);
                    }
                }
            }
            finish_exact(prob, cands)
        }
        _ => unreachable!("exact route limited to three balls"),
    }
}

/// All compositions of `total` into `n` nonnegative parts.
fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in (0..=left).rev() {
            cur.push(v);
            rec(n, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::with_capacity(n), &mut out);
    out
}

fn lattice_search(prob: &Problem, levels: u32) -> (Vec<f64>, usize) {
    let n = prob.n;
    let start_level = levels.min(2);
    let res = 1usize << start_level;
    let points = compositions(n, res);
    let values: Vec<f64> = points
        .par_iter()
        .map(|c| {
            let w: Vec<f64> = c.iter().map(|&x| x as f64 / res as f64).collect();
            prob.eval(&w)
        })
        .collect();
    let mut evals = values.len();
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    let mut w: Vec<f64> = points[bi].iter().map(|&x| x as f64 / res as f64).collect();
    for level in start_level..=levels {
        let h = 0.5f64.powi(level as i32);
        loop {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for a in 0..n {
                for b in 0..n {
                    if a == b || w[b] < h - 1e-15 {
                        continue;
                    }
                    let mut c = w.clone();
                    c[a] += h;
                    c[b] = (c[b] - h).max(0.0);
                    let v = prob.eval(&c);
                    evals += 1;
                    if v < bv && best.as_ref().is_none_or(|x| v < x.1) {
                        best = Some((c, v));
                    }
                }
            }
            match best {
                Some((c, v)) => {
                    w = c;
                    bv = v;
                }
                None => break,
            }
        }
    }
    (w, evals)
}

/// Unit null vector of `rows` (each of length `n`) when the null space is
/// one-dimensional.
fn null_vector(rows: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == m.len() {
            break;
        }
        let p = (r..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            continue;
        }
        m.swap(r, p);
        let piv = m[r][col];
        for x in m[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..m.len() {
            if i != r {
                let fct = m[i][col];
                if fct != 0.0 {
                    let pivot_row = m[r].clone();
                    for (x, p) in m[i].iter_mut().zip(&pivot_row) {
                        *x -= fct * p;
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![0.0; n];
    v[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free];
    }
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    Some(v.iter().map(|x| x / norm).collect())
}

/// Edge directions of the arrangement: null spaces of `{1} + R` for every
/// set `R` of `n - 2` hyperplane normals (simplex facets and kinks).
fn edge_directions(prob: &Problem) -> Vec<Vec<f64>> {
    let n = prob.n;
    let mut normals: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            e
        })
        .collect();
    normals.extend(prob.kinks.iter().map(|(row, _)| row.clone()));
    let pick = n.saturating_sub(2);
    if binomial(normals.len(), pick) > MAX_DIRECTIONS {
        // pair directions only
        let mut dirs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let mut v = vec![0.0; n];
                v[a] = 0.5;
                v[b] = -0.5;
                dirs.push(v);
            }
        }
        return dirs;
    }
    let ones = vec![1.0; n];
    Combinations::new(normals.len(), pick)
        .filter_map(|sel| {
            let mut rows = vec![ones.clone()];
            rows.extend(sel.iter().map(|&i| normals[i].clone()));
            null_vector(&rows, n)
        })
        .collect()
}

fn minimize_iterative(prob: &Problem, opts: &MinimizeOptions) -> OracleResult {
    let n = prob.n;
    let mut iterations = 0usize;

    // Stage 1: starting point.
    let mut w = if n <= opts.dense_bound {
        let (w, evals) = lattice_search(prob, opts.grid_levels);
        iterations += evals;
        w
    } else {
        let best = (0..n)
            .min_by(|&a, &b| {
                let mut ea = vec![0.0; n];
                ea[a] = 1.0;
                let mut eb = vec![0.0; n];
                eb[b] = 1.0;
                prob.eval(&ea).total_cmp(&prob.eval(&eb))
            })
            .unwrap_or(0);
        let mut e = vec![0.0; n];
        e[best] = 1.0;
        e
    };
    let mut value = prob.eval(&w);
    let lattice_value = value;

    // Stage 2: projected subgradient, diminishing normalized steps.
    let radius = 0.5f64.powi(opts.grid_levels as i32) * (n as f64).sqrt();
    let mut x = w.clone();
    let mut last_gain_at = 0;
    let mut mark = value;
    for k in 0..opts.subgradient_iters {
        iterations += 1;
        let g = prob.subgradient(&x);
        let mean = g.iter().sum::<f64>() / n as f64;
        let gt: Vec<f64> = g.iter().map(|v| v - mean).collect();
        let norm = gt.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = radius / (norm * ((k + 1) as f64).sqrt());
        let y: Vec<f64> = x.iter().zip(&gt).map(|(a, b)| a - step * b).collect();
        x = project_simplex(&y);
        let v = prob.eval(&x);
        if v < value {
            value = v;
            w = x.clone();
        }
        if mark - value > opts.refine_tol {
            mark = value;
            last_gain_at = k;
        } else if k - last_gain_at > 50 {
            break;
        }
    }
    let subgradient_value = value;

    // Stage 3: exact line searches along arrangement edge directions.
    let dirs = edge_directions(prob);
    let mut status = Status::CapReached;
    let mut steps = 0;
    while steps < opts.max_iters {
        steps += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for v in &dirs {
            for sign in [1.0, -1.0] {
                let sv: Vec<f64> = v.iter().map(|x| sign * x).collect();
                let (t, val) = prob.line_search(&w, &sv, false);
                if t > 0.0
                    && val < value - 1e-15 * (1.0 + value.abs())
                    && best.as_ref().is_none_or(|b| val < b.1)
                {
                    let mut c: Vec<f64> = w.iter().zip(&sv).map(|(a, b)| a + t * b).collect();
                    normalize(&mut c);
                    best = Some((c, val));
                }
            }
        }
        match best {
            Some((c, _)) => {
                w = c;
                value = prob.eval(&w);
            }
            None => {
                if !snap_along_face(prob, &mut w, &dirs) {
                    status = Status::Converged;
                    break;
                }
                value = prob.eval(&w);
            }
        }
    }
    iterations += steps;

    OracleResult {
        weights: w,
        log_value: LogValue(value),
        iterations,
        status,
        method: Method::Iterative,
        lattice_value: Some(lattice_value),
        subgradient_value: Some(subgradient_value),
    }
}

/// At a non-vertex point where no direction decreases `F`, slides along the
/// current face (F unchanged) to a point with more active hyperplanes.
/// Returns false when `w` is already a vertex of the arrangement.
fn snap_along_face(prob: &Problem, w: &mut Vec<f64>, dirs: &[Vec<f64>]) -> bool {
    let n = prob.n;
    let mut active: Vec<Vec<f64>> = Vec::new();
    for a in 0..n {
        if w[a] <= 1e-14 {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            active.push(e);
        }
    }
    for (row, _) in &prob.kinks {
        if (dot(row, w) - prob.b).abs() <= 1e-12 {
            active.push(row.clone());
        }
    }
    let value = prob.eval(w);
    for v in dirs {
        if active.iter().all(|r| dot(r, v).abs() <= 1e-12) {
            for sign in [1.0, -1.0] {
                let sv: Vec<f64> = v.iter().map(|x| sign * x).collect();
                let (t, val) = prob.line_search(w, &sv, true);
                if t > 1e-12 && val <= value + 1e-15 * (1.0 + value.abs()) {
                    let mut c: Vec<f64> = w.iter().zip(&sv).map(|(a, b)| a + t * b).collect();
                    normalize(&mut c);
                    *w = c;
                    return true;
                }
            }
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub log_psi: f64,
    pub oracle_log_value: f64,
    pub difference: f64,
    pub tol: f64,
}

/// PASS iff the two minima agree within `tol` and the oracle does not
/// exceed `psi`.
pub fn compare(psi: &PsiResult, orc: &OracleResult, tol: f64) -> Verdict {
    let a = psi.log_psi.get();
    let b = orc.log_value.get();
    Verdict {
        pass: (a - b).abs() <= tol && b <= a + tol,
        log_psi: a,
        oracle_log_value: b,
        difference: b - a,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{enumerate_certificates, psi, SearchOptions};

    fn fam(json: &str) -> BallFamily {
        BallFamily::from_json(json).unwrap()
    }

    fn two_ball() -> BallFamily {
        fam(r#"{"q":2,"k":[16],"balls":[{"nu":1,"p":["inf"]},{"nu":4,"p":[1]}]}"#)
    }

    /// Bisection on the kink of a 1-D convex function.
    fn ternary_min(f: impl Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        f(0.5 * (lo + hi))
    }

    #[test]
    fn objective_examples() {
        let f = fam(r#"{"q":2,"k":[4,4],"balls":[{"nu":5,"p":["inf",2]}]}"#);
        assert!((objective(&f, &[1.0]).unwrap().exp() - 10.0).abs() < 1e-12);

        let f = two_ball();
        assert!((objective(&f, &[0.5, 0.5]).unwrap().get() - 2f64.ln()).abs() < 1e-15);
        let certs = enumerate_certificates(&f, &SearchOptions::default()).unwrap();
        for c in certs.iter().filter(|c| c.m == 1) {
            let mut w = vec![0.0; 2];
            w[c.tuple[0]] = 1.0;
            assert_eq!(objective(&f, &w).unwrap().get(), c.log_value.get());
        }
    }

    #[test]
    fn objective_rejects_off_simplex() {
        let f = two_ball();
        assert!(objective(&f, &[0.7, 0.7]).is_err());
        assert!(objective(&f, &[1.5, -0.5]).is_err());
        assert!(objective(&f, &[1.0]).is_err());
    }

    #[test]
    fn minimize_two_ball_both_routes() {
        let f = two_ball();
        let reference = ternary_min(|t| objective(&f, &[1.0 - t, t]).unwrap().get());
        assert!((reference - 2f64.ln()).abs() < 1e-9);
        for method in [Method::Exact, Method::Iterative] {
            let r = minimize(
                &f,
                &MinimizeOptions {
                    method,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(
                (r.log_value.get() - 2f64.ln()).abs() < 1e-12,
                "{method:?} {r:?}"
            );
            assert!((r.weights[0] - 0.5).abs() < 1e-9);
            assert_eq!(r.status, Status::Converged);
        }
    }

    #[test]
    fn minimize_single_ball() {
        let f = fam(r#"{"q":1.5,"k":[9,4],"balls":[{"nu":2,"p":[4,1.2]}]}"#);
        let expect = psi(&f, &SearchOptions::default()).unwrap().log_psi.get();
        for method in [Method::Exact, Method::Iterative] {
            let r = minimize(
                &f,
                &MinimizeOptions {
                    method,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((r.log_value.get() - expect).abs() < 1e-15);
            assert_eq!(r.weights, vec![1.0]);
        }
    }

    #[test]
    fn three_ball_upper_bound() {
        let f = fam(
            r#"{"q":1.5,"k":[12,30],"balls":[{"nu":1.3,"p":[1.1,6]},{"nu":0.4,"p":[7,1.05]},{"nu":2.2,"p":[1.7,1.3]}]}"#,
        );
        let certs = enumerate_certificates(&f, &SearchOptions::default()).unwrap();
        let m1 = certs
            .iter()
            .filter(|c| c.m == 1)
            .map(|c| c.log_value.get())
            .fold(f64::INFINITY, f64::min);
        let exact = minimize(&f, &MinimizeOptions::default()).unwrap();
        let iter = minimize(
            &f,
            &MinimizeOptions {
                method: Method::Iterative,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(exact.log_value.get() <= m1 + 1e-15);
        assert!((exact.log_value.get() - iter.log_value.get()).abs() < 1e-12);
        let p = psi(&f, &SearchOptions::default()).unwrap();
        assert!(compare(&p, &exact, 1e-9).pass);
    }

    #[test]
    fn exact_rejects_large_families() {
        let f = fam(
            r#"{"q":2,"k":[4],"balls":[{"nu":1,"p":[1]},{"nu":1,"p":[2]},{"nu":1,"p":[3]},{"nu":1,"p":[4]}]}"#,
        );
        assert!(minimize(
            &f,
            &MinimizeOptions {
                method: Method::Exact,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.8, 0.6, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15 && p[2] == 0.0);
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn compare_verdicts() {
        let f = two_ball();
        let p = psi(&f, &SearchOptions::default()).unwrap();
        let o = minimize(&f, &MinimizeOptions::default()).unwrap();
        assert!(compare(&p, &o, 1e-6).pass);
        let mut worse = o.clone();
        worse.log_value = LogValue(o.log_value.get() + 1e-3);
        assert!(!compare(&p, &worse, 1e-6).pass);
    }

    #[test]
    fn lattice_compositions_count() {
        assert_eq!(compositions(3, 4).len(), 15);
        assert_eq!(compositions(1, 4), vec![vec![4]]);
    }
}
