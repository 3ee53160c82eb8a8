//! Lower-bound witness: a scaled box indicator that lies in every ball of
//! the family and whose `l_q` norm equals the certificate value.
//!
//! For a certificate with active set `I`, coordinates off `I` split into
//! `T_plus` (`1/theta_i < 1/q`, side `k_i`) and `T_minus` (`1/theta_i > 1/q`,
//! side `1`). Sides on `I` solve a linear system in `log s` that makes every
//! ball of the tuple tight. Box sides are kept real.
//!
//! Requires general position; use [`crate::family::perturb`] first.

use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::exponents::{mixed_norm, LogValue, QParam, Tensor};
use crate::family::{BallFamily, DEFAULT_GP_TOL};
use crate::linalg::Matrix;

/// Largest `kprod` for which dense tensors are materialized.
pub const DENSE_LIMIT: u128 = 4096;

/// Relative slack on `1 <= s_i <= k_i`.
pub const SIDE_TOL: f64 = 1e-9;

/// Tolerance for membership margins.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub active: Vec<usize>,
    pub t_plus: Vec<usize>,
    pub t_minus: Vec<usize>,
}

pub fn partition_coordinates(cert: &Certificate, q: QParam, tol: f64) -> Result<Partition> {
    let d = cert.theta_u.dim();
    let uq = q.uq();
    let mut t_plus = Vec::new();
    let mut t_minus = Vec::new();
    for i in 0..d {
        if cert.active.contains(&i) {
            continue;
        }
        let gap = cert.theta_u[i] - uq;
        if gap.abs() <= tol {
            return Err(Error::NotGeneralPosition { coordinate: i + 1 });
        }
        if gap < 0.0 {
            t_plus.push(i);
        } else {
            t_minus.push(i);
        }
    }
    Ok(Partition {
        active: cert.active.clone(),
        t_plus,
        t_minus,
    })
}

/// Box sides `s` for the certificate; returns `(s, log s)`.
pub fn solve_sbar(f: &BallFamily, cert: &Certificate, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let part = partition_coordinates(cert, f.q(), tol)?;
    let log_k = f.ks().log_sides();
    let d = f.dim();
    let mut log_s = vec![0.0; d];
    for &i in &part.t_plus {
        log_s[i] = log_k[i];
    }
    let m = cert.m;
    if m > 1 {
        let balls = f.balls();
        let base = &balls[cert.tuple[0]];
        let mut mat = Matrix::zeros(m - 1);
        let mut rhs = vec![0.0; m - 1];
        for (r, &a) in cert.tuple[1..].iter().enumerate() {
            let b = &balls[a];
            for (c, &i) in part.active.iter().enumerate() {
                mat.set(r, c, b.u[i] - base.u[i]);
            }
            let tplus: f64 = part
                .t_plus
                .iter()
                .map(|&i| (b.u[i] - base.u[i]) * log_k[i])
                .sum();
            rhs[r] = b.log_nu - base.log_nu - tplus;
        }
        let sol = mat.solve(&rhs)?;
        for (c, &i) in part.active.iter().enumerate() {
            log_s[i] = sol[c];
        }
    }
    for i in 0..d {
        let slack = SIDE_TOL * (1.0 + log_k[i]);
        if log_s[i] < -slack || log_s[i] > log_k[i] + slack {
            return Err(Error::BoxOutOfRange {
                index: i,
                value: log_s[i].exp(),
                bound: f.ks().sides()[i] as f64,
            });
        }
    }
    Ok((log_s.iter().map(|v| v.exp()).collect(), log_s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalWitness {
    pub certificate: String,
    pub s: Vec<f64>,
    pub log_s: Vec<f64>,
    pub log_scale: LogValue,
    pub labels: Vec<String>,
    pub log_norms: Vec<LogValue>,
    pub log_margins: Vec<LogValue>,
    pub log_q_norm: LogValue,
}

impl ExtremalWitness {
    pub fn worst_margin(&self) -> f64 {
        self.log_margins
            .iter()
            .map(|m| m.get())
            .fold(f64::INFINITY, f64::min)
    }

    /// Integer box sides `floor(s)` (with a small slack for values like
    /// `3.9999999999`).
    pub fn floor_sides(&self, f: &BallFamily) -> Vec<u64> {
        self.s
            .iter()
            .zip(f.ks().sides())
            .map(|(&s, &k)| ((s * (1.0 + SIDE_TOL)).floor() as u64).clamp(1, k))
            .collect()
    }

    /// Same scale on the integer box `floor(s)`; norms only decrease.
    pub fn floored(&self, f: &BallFamily) -> ExtremalWitness {
        let sides = self.floor_sides(f);
        let s: Vec<f64> = sides.iter().map(|&v| v as f64).collect();
        let log_s: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        norms_for(f, self.certificate.clone(), s, log_s, self.log_scale)
    }

    /// Dense tensor of the floored witness.
    pub fn materialize(&self, f: &BallFamily) -> Result<Tensor> {
        if f.ks().kprod() > DENSE_LIMIT {
            return Err(Error::Invalid(format!(
                "kprod = {} exceeds the dense limit {}",
                f.ks().kprod(),
                DENSE_LIMIT
            )));
        }
        Tensor::indicator(f.ks().clone(), &self.floor_sides(f), self.log_scale.exp())
    }
}

fn norms_for(
    f: &BallFamily,
    certificate: String,
    s: Vec<f64>,
    log_s: Vec<f64>,
    log_scale: LogValue,
) -> ExtremalWitness {
    let dot = |u: &[f64]| -> f64 { u.iter().zip(&log_s).map(|(a, b)| a * b).sum() };
    let log_norms: Vec<LogValue> = f
        .balls()
        .iter()
        .map(|b| LogValue(log_scale.get() + dot(b.u.as_slice())))
        .collect();
    let log_margins = f
        .balls()
        .iter()
        .zip(&log_norms)
        .map(|(b, n)| LogValue(b.log_nu - n.get()))
        .collect();
    let uq = f.q().uq();
    let log_q_norm = LogValue(log_scale.get() + uq * log_s.iter().sum::<f64>());
    ExtremalWitness {
        certificate,
        s,
        log_s,
        log_scale,
        labels: f.balls().iter().map(|b| b.label.clone()).collect(),
        log_norms,
        log_margins,
        log_q_norm,
    }
}

/// Scaled indicator `prod nu^lambda * prod s_i^{-1/theta_i} * x(s)` with its
/// closed-form norms.
pub fn build_witness(f: &BallFamily, cert: &Certificate, log_s: &[f64]) -> ExtremalWitness {
    let nu_part: f64 = cert
        .tuple
        .iter()
        .zip(&cert.lambda)
        .map(|(&a, &l)| l * f.balls()[a].log_nu)
        .sum();
    let theta_part: f64 = cert
        .theta_u
        .as_slice()
        .iter()
        .zip(log_s)
        .map(|(t, ls)| t * ls)
        .sum();
    let log_scale = LogValue(nu_part - theta_part);
    let s = log_s.iter().map(|v| v.exp()).collect();
    norms_for(f, cert.id(), s, log_s.to_vec(), log_scale)
}

/// Partition, box sides and witness in one step.
pub fn construct_witness(f: &BallFamily, cert: &Certificate) -> Result<ExtremalWitness> {
    let (_, log_s) = solve_sbar(f, cert, DEFAULT_GP_TOL)?;
    Ok(build_witness(f, cert, &log_s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallMargin {
    pub label: String,
    pub log_margin: f64,
    /// Margin of the floored dense witness, when materialized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense_log_margin: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_label: String,
    pub balls: Vec<BallMargin>,
}

/// Recomputes every margin from `log_scale` and `log_s`; with `dense`, also
/// from the materialized floored tensor (only when `kprod <= DENSE_LIMIT`).
pub fn verify_membership(w: &ExtremalWitness, f: &BallFamily, dense: bool) -> MembershipReport {
    let tensor = if dense && f.ks().kprod() <= DENSE_LIMIT {
        w.materialize(f).ok()
    } else {
        None
    };
    let mut balls = Vec::with_capacity(f.len());
    for b in f.balls() {
        let log_norm = w.log_scale.get()
            + b.u
                .as_slice()
                .iter()
                .zip(&w.log_s)
                .map(|(u, ls)| u * ls)
                .sum::<f64>();
        let log_margin = b.log_nu - log_norm;
        let dense_log_margin = tensor
            .as_ref()
            .map(|t| b.log_nu - mixed_norm(t, &b.u).expect("shapes agree").ln());
        let pass = log_margin >= -MARGIN_TOL && dense_log_margin.is_none_or(|m| m >= -MARGIN_TOL);
        balls.push(BallMargin {
            label: b.label.clone(),
            log_margin,
            dense_log_margin,
            pass,
        });
    }
    let (worst_label, worst_margin) = balls.iter().map(|b| (b.label.clone(), b.log_margin)).fold(
        (String::new(), f64::INFINITY),
        |acc, x| if x.1 < acc.1 { x } else { acc },
    );
    MembershipReport {
        pass: balls.iter().all(|b| b.pass),
        worst_margin,
        worst_label,
        balls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{psi, SearchOptions};
    use crate::exponents::ExponentVector;

    fn fam(json: &str) -> BallFamily {
        BallFamily::from_json(json).unwrap()
    }

    fn single_cert(f: &BallFamily, ball: usize) -> Certificate {
        let b = &f.balls()[ball];
        Certificate {
            m: 1,
            tuple: vec![ball],
            labels: vec![b.label.clone()],
            active: vec![],
            lambda: vec![1.0],
            theta_u: b.u.clone(),
            log_value: LogValue(0.0),
        }
    }

    fn two_ball() -> BallFamily {
        fam(r#"{"q":2,"k":[16],"balls":[{"nu":1,"p":["inf"]},{"nu":4,"p":[1]}]}"#)
    }

    #[test]
    fn partition_examples() {
        let f = fam(r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":["inf",1]}]}"#);
        let p = partition_coordinates(&single_cert(&f, 0), f.q(), 1e-10).unwrap();
        assert_eq!((p.t_plus, p.t_minus), (vec![0], vec![1]));

        let f = two_ball();
        let best = psi(&f, &SearchOptions::default()).unwrap().best;
        let p = partition_coordinates(&best, f.q(), 1e-10).unwrap();
        assert!(p.t_plus.is_empty() && p.t_minus.is_empty());
        assert_eq!(p.active, vec![0]);

        let f = fam(r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":[2,1]}]}"#);
        assert!(matches!(
            partition_coordinates(&single_cert(&f, 0), f.q(), 1e-10),
            Err(Error::NotGeneralPosition { coordinate: 1 })
        ));
    }

    #[test]
    fn sbar_examples() {
        let f = two_ball();
        let best = psi(&f, &SearchOptions::default()).unwrap().best;
        let (s, _) = solve_sbar(&f, &best, 1e-10).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-12);

        let f = fam(r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":["inf",1]}]}"#);
        let (s, _) = solve_sbar(&f, &single_cert(&f, 0), 1e-10).unwrap();
        assert_eq!(s, vec![4.0, 1.0]);

        let f = fam(r#"{"q":2,"k":[5,7,3],"balls":[{"nu":1,"p":[1,1.5,1.2]}]}"#);
        let (s, _) = solve_sbar(&f, &single_cert(&f, 0), 1e-10).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn sbar_rejects_out_of_range_sides() {
        // a non-minimal certificate can push s outside [1, k]
        let f = fam(r#"{"q":2,"k":[16],"balls":[{"nu":1,"p":["inf"]},{"nu":1000,"p":[1]}]}"#);
        let certs =
            crate::certificate::enumerate_certificates(&f, &SearchOptions::default()).unwrap();
        let c2 = certs.iter().find(|c| c.m == 2).unwrap();
        assert!(matches!(
            solve_sbar(&f, c2, 1e-10),
            Err(Error::BoxOutOfRange { .. })
        ));
    }

    #[test]
    fn two_ball_witness() {
        let f = two_ball();
        let best = psi(&f, &SearchOptions::default()).unwrap().best;
        let w = construct_witness(&f, &best).unwrap();
        assert!(w.log_scale.get().abs() < 1e-12);
        assert!(w.log_norms[0].get().abs() < 1e-12);
        assert!((w.log_norms[1].exp() - 4.0).abs() < 1e-12);
        assert!((w.log_q_norm.exp() - 2.0).abs() < 1e-12);
        for m in &w.log_margins {
            assert!(m.get().abs() < 1e-12);
        }
        let r = verify_membership(&w, &f, true);
        assert!(r.pass, "{r:?}");
        for b in &r.balls {
            assert!(b.dense_log_margin.unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn single_ball_witness() {
        let f = fam(r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":["inf",1]}]}"#);
        let best = psi(&f, &SearchOptions::default()).unwrap().best;
        let w = construct_witness(&f, &best).unwrap();
        assert_eq!(w.s, vec![4.0, 1.0]);
        assert!(w.log_scale.get().abs() < 1e-15);
        assert!(w.log_norms[0].get().abs() < 1e-15);
        assert!((w.log_q_norm.exp() - 2.0).abs() < 1e-12);
        let dense = w.materialize(&f).unwrap();
        assert!(
            (mixed_norm(&dense, &ExponentVector::new(vec![0.5, 0.5]).unwrap()).unwrap() - 2.0)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn unit_box_margin_is_radius_gap() {
        // k = 1 everywhere: the witness is a single entry of height prod nu^lambda
        let f = fam(r#"{"q":1.5,"k":[1,1],"balls":[{"nu":3,"p":[1.2,4]},{"nu":5,"p":[3,1.1]}]}"#);
        let best = psi(&f, &SearchOptions::default()).unwrap().best;
        let w = construct_witness(&f, &best).unwrap();
        assert_eq!(w.s, vec![1.0, 1.0]);
        let height: f64 = best
            .tuple
            .iter()
            .zip(&best.lambda)
            .map(|(&a, &l)| l * f.balls()[a].log_nu)
            .sum();
        for (b, m) in f.balls().iter().zip(&w.log_margins) {
            assert!((m.get() - (b.log_nu - height)).abs() < 1e-12);
            assert!(m.get() >= -1e-12);
        }
    }

    #[test]
    fn margins_invariant_under_scaling() {
        let f = fam(r#"{"q":2,"k":[8,8],"balls":[{"nu":1,"p":["inf",1.3]},{"nu":3,"p":[1.1,5]}]}"#);
        let g =
            fam(r#"{"q":2,"k":[8,8],"balls":[{"nu":7,"p":["inf",1.3]},{"nu":21,"p":[1.1,5]}]}"#);
        let wf = construct_witness(&f, &psi(&f, &SearchOptions::default()).unwrap().best).unwrap();
        let wg = construct_witness(&g, &psi(&g, &SearchOptions::default()).unwrap().best).unwrap();
        for (a, b) in wf.log_margins.iter().zip(&wg.log_margins) {
            assert!((a.get() - b.get()).abs() < 1e-12);
        }
    }
}
