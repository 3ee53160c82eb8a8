//! Finite families of weighted anisotropic balls `nu_alpha * B_{p_alpha}`,
//! their JSON schema, general-position checks and perturbation.
//!
//! Schema:
//!
//! ```json
//! {"q": 2, "n": 3, "k": [16],
//!  "balls": [{"label": "a", "nu": 1, "p": ["inf"]}, {"label": "b", "nu": 4, "p": [1]}]}
//! ```
//!
//! `p` entries are numbers `>= 1` or the token `"inf"` (case-insensitive).
//! Labels are optional on input and default to `b1`, `b2`, ...

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{enumerate_certificates, SearchOptions};
use crate::combin::Combinations;
use crate::error::{Error, Result};
use crate::exponents::{ExponentVector, GridShape, QParam};
use crate::geometry::{affinely_independent, PointSet};

/// Default tolerance for general-position decisions.
pub const DEFAULT_GP_TOL: f64 = 1e-10;

/// Perturbation attempts before giving up.
const PERTURB_ATTEMPTS: u32 = 256;

/// One `p` entry as written in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawExponent {
    Number(f64),
    Token(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub nu: f64,
    pub p: Vec<RawExponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFamily {
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub k: Vec<u64>,
    pub balls: Vec<RawBall>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub label: String,
    pub nu: f64,
    pub log_nu: f64,
    pub u: ExponentVector,
}

impl BallSpec {
    pub fn new(label: impl Into<String>, nu: f64, u: ExponentVector) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidFamily(format!(
                "nu must be positive, got {nu}"
            )));
        }
        Ok(Self {
            label: label.into(),
            nu,
            log_nu: nu.ln(),
            u,
        })
    }

    /// Radius given by its logarithm.
    pub fn from_log_nu(label: impl Into<String>, log_nu: f64, u: ExponentVector) -> Result<Self> {
        if !log_nu.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "log nu must be finite, got {log_nu}"
            )));
        }
        Ok(Self {
            label: label.into(),
            nu: log_nu.exp(),
            log_nu,
            u,
        })
    }
}

/// Validated family `{(nu_alpha, u_alpha)}` with grid shape and `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    balls: Vec<BallSpec>,
    ks: GridShape,
    q: QParam,
    n: Option<u64>,
    warnings: Vec<String>,
}

impl BallFamily {
    pub fn new(balls: Vec<BallSpec>, ks: GridShape, q: QParam, n: Option<u64>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::InvalidFamily("empty ball list".into()));
        }
        let d = ks.dim();
        for b in &balls {
            if b.u.dim() != d {
                return Err(Error::InvalidFamily(format!(
                    "ball '{}' has {} exponents but k has {} entries",
                    b.label,
                    b.u.dim(),
                    d
                )));
            }
        }
        for (i, a) in balls.iter().enumerate() {
            if balls[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::InvalidFamily(format!(
                    "duplicate label '{}'",
                    a.label
                )));
            }
        }
        let mut warnings = Vec::new();
        if let Some(n) = n {
            if 2 * (n as u128) > ks.kprod() {
                warnings.push(format!(
                    "n = {n} exceeds kprod/2 = {}; the estimate applies to n <= k/2",
                    ks.kprod() / 2
                ));
            }
        }
        for (i, a) in balls.iter().enumerate() {
            for b in &balls[..i] {
                if a.u == b.u && a.log_nu == b.log_nu {
                    warnings.push(format!(
                        "balls '{}' and '{}' are identical",
                        b.label, a.label
                    ));
                } else if a.u == b.u {
                    warnings.push(format!(
                        "balls '{}' and '{}' share the same exponents",
                        b.label, a.label
                    ));
                }
            }
        }
        Ok(Self {
            balls,
            ks,
            q,
            n,
            warnings,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFamily = serde_json::from_str(text)?;
        validate(&raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("family serializes")
    }

    pub fn balls(&self) -> &[BallSpec] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ks.dim()
    }

    pub fn ks(&self) -> &GridShape {
        &self.ks
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn n(&self) -> Option<u64> {
        self.n
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn with_ks(&self, ks: GridShape) -> Result<Self> {
        Self::new(self.balls.clone(), ks, self.q, self.n)
    }

    pub fn with_balls(&self, balls: Vec<BallSpec>) -> Result<Self> {
        Self::new(balls, self.ks.clone(), self.q, self.n)
    }

    /// Serializable form. Exponents are written as `p` values chosen so that
    /// `1/p` reproduces the stored `u` bit-for-bit.
    pub fn to_raw(&self) -> RawFamily {
        RawFamily {
            q: self.q.q(),
            n: self.n,
            k: self.ks.sides().to_vec(),
            balls: self
                .balls
                .iter()
                .map(|b| RawBall {
                    label: Some(b.label.clone()),
                    nu: b.nu,
                    p: b.u.as_slice().iter().map(|&u| p_for_u(u)).collect(),
                })
                .collect(),
        }
    }
}

/// Nearest value to `u` that is the reciprocal of some float `p`, so that it
/// survives a trip through the `p`-based JSON schema.
pub fn representable_u(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        1.0 / (1.0 / u)
    }
}

/// A `p` whose reciprocal is exactly `u` when one exists (always the case
/// for [`representable_u`] values); `u = 0` becomes `"inf"`.
pub fn p_for_u(u: f64) -> RawExponent {
    if u == 0.0 {
        return RawExponent::Token("inf".into());
    }
    let p0 = 1.0 / u;
    let bits = p0.to_bits();
    for delta in 0..=8u64 {
        for cand in [bits.wrapping_add(delta), bits.wrapping_sub(delta)] {
            let p = f64::from_bits(cand);
            if p >= 1.0 && 1.0 / p == u {
                return RawExponent::Number(p);
            }
        }
    }
    RawExponent::Number(p0)
}

fn parse_exponent(e: &RawExponent, label: &str) -> Result<f64> {
    match e {
        RawExponent::Token(t) if t.eq_ignore_ascii_case("inf") => Ok(0.0),
        RawExponent::Token(t) => Err(Error::InvalidFamily(format!(
            "ball '{label}': unrecognized exponent token '{t}'"
        ))),
        RawExponent::Number(p) if *p >= 1.0 && p.is_finite() => Ok(1.0 / p),
        RawExponent::Number(p) => Err(Error::InvalidFamily(format!(
            "ball '{label}': p = {p} is below 1"
        ))),
    }
}

pub fn validate(raw: &RawFamily) -> Result<BallFamily> {
    let q = QParam::new(raw.q)?;
    let ks = GridShape::new(raw.k.clone())?;
    if raw.balls.is_empty() {
        return Err(Error::InvalidFamily("empty ball list".into()));
    }
    let mut balls = Vec::with_capacity(raw.balls.len());
    for (i, rb) in raw.balls.iter().enumerate() {
        let label = rb.label.clone().unwrap_or_else(|| format!("b{}", i + 1));
        if rb.p.len() != ks.dim() {
            return Err(Error::InvalidFamily(format!(
                "ball '{label}' has {} exponents but k has {} entries",
                rb.p.len(),
                ks.dim()
            )));
        }
        let u =
            rb.p.iter()
                .map(|e| parse_exponent(e, &label))
                .collect::<Result<Vec<_>>>()?;
        balls.push(BallSpec::new(label, rb.nu, ExponentVector::new(u)?)?);
    }
    BallFamily::new(balls, ks, q, raw.n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    AffineDependence,
    ThetaEqualsQ,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Ball labels.
    pub tuple: Vec<String>,
    /// Active coordinates, 1-based.
    pub active: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Checks both general-position conditions: affine independence of every
/// projected m-subset, and `1/theta_i != 1/q` off the active set for every
/// certificate.
pub fn check_general_position(f: &BallFamily, tol: f64) -> GeneralPositionReport {
    let d = f.dim();
    let n = f.len();
    let mut violations = Vec::new();
    for m in 2..=(d + 1).min(n) {
        for active in Combinations::new(d, m - 1) {
            for tuple in Combinations::new(n, m) {
                let points = tuple
                    .iter()
                    .map(|&a| active.iter().map(|&i| f.balls[a].u[i]).collect())
                    .collect();
                let ps = PointSet::new(points).expect("projected points have dimension m-1");
                if !affinely_independent(&ps, tol) {
                    violations.push(Violation {
                        kind: ViolationKind::AffineDependence,
                        tuple: labels_of(f, &tuple),
                        active: active.iter().map(|i| i + 1).collect(),
                        detail: format!("projected points of {m} balls are affinely dependent"),
                    });
                }
            }
        }
    }

    let opts = SearchOptions {
        rank_tol: tol.min(DEFAULT_GP_TOL),
        ..SearchOptions::default()
    };
    let certs = match enumerate_certificates(f, &opts) {
        Ok(c) => c,
        Err(Error::CapExceeded { partial, .. }) => partial,
        Err(_) => Vec::new(),
    };
    let uq = f.q.uq();
    for c in &certs {
        for i in 0..d {
            if c.active.contains(&i) {
                continue;
            }
            let gap = c.theta_u[i] - uq;
            if gap.abs() <= tol {
                let detail = if c.m == 1 {
                    format!("p_{} equals q (1/p - 1/q = {gap:e})", i + 1)
                } else {
                    format!("theta_{} equals q off the active set (gap {gap:e})", i + 1)
                };
                violations.push(Violation {
                    kind: ViolationKind::ThetaEqualsQ,
                    tuple: c.labels.clone(),
                    active: c.active.iter().map(|i| i + 1).collect(),
                    detail,
                });
            }
        }
    }

    GeneralPositionReport {
        ok: violations.is_empty(),
        violations,
    }
}

fn labels_of(f: &BallFamily, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&a| f.balls[a].label.clone()).collect()
}

/// Moves every `u_i` by at most `delta` (then clamps to `[0, 1]`) until the
/// family is in general position at tolerance `delta / 10`.
///
/// Attempt 0 draws a direction `r` in `[-1, 1]^{|A| x d}` from `seed`, so
/// the same seed with different `delta` perturbs along the same direction.
pub fn perturb(f: &BallFamily, delta: f64, seed: u64) -> Result<BallFamily> {
    if delta == 0.0 {
        return Ok(f.clone());
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Invalid(format!(
            "perturbation delta {delta} outside (0, 1/2)"
        )));
    }
    for attempt in 0..PERTURB_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let balls = f
            .balls
            .iter()
            .map(|b| {
                let u =
                    b.u.as_slice()
                        .iter()
                        .map(|&u| {
                            representable_u((u + delta * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0))
                        })
                        .collect();
                Ok(BallSpec {
                    u: ExponentVector::new(u)?,
                    ..b.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let candidate = f.with_balls(balls)?;
        if check_general_position(&candidate, delta / 10.0).ok {
            return Ok(candidate);
        }
    }
    Err(Error::PerturbationFailed {
        attempts: PERTURB_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_ball() -> BallFamily {
        BallFamily::from_json(r#"{"q":2,"k":[16],"balls":[{"nu":1,"p":["inf"]},{"nu":4,"p":[1]}]}"#)
            .unwrap()
    }

    #[test]
    fn validate_examples() {
        let f = two_ball();
        assert_eq!(f.dim(), 1);
        assert_eq!(f.len(), 2);
        assert_eq!(f.balls()[0].label, "b1");
        assert_eq!(f.balls()[0].u.as_slice(), &[0.0]);
        assert_eq!(f.balls()[1].u.as_slice(), &[1.0]);

        let err =
            BallFamily::from_json(r#"{"q":3,"k":[16],"balls":[{"nu":1,"p":[2]}]}"#).unwrap_err();
        assert!(err.to_string().contains("q out of range"));

        let f =
            BallFamily::from_json(r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":["inf",2]}]}"#).unwrap();
        assert_eq!(f.balls()[0].u.as_slice(), &[0.0, 0.5]);
    }

    #[test]
    fn validate_errors() {
        let cases = [
            r#"{"q":2,"k":[4],"balls":[]}"#,
            r#"{"q":2,"k":[4],"balls":[{"nu":0,"p":[2]}]}"#,
            r#"{"q":2,"k":[4],"balls":[{"nu":-1,"p":[2]}]}"#,
            r#"{"q":2,"k":[4],"balls":[{"nu":1,"p":[0.5]}]}"#,
            r#"{"q":2,"k":[4],"balls":[{"nu":1,"p":[2,2]}]}"#,
            r#"{"q":2,"k":[4,4],"balls":[{"nu":1,"p":[2,2]},{"nu":1,"p":[2]}]}"#,
            r#"{"q":2,"k":[4],"balls":[{"nu":1,"p":["infinity"]}]}"#,
            r#"{"q":2,"k":[4],"balls":[{"label":"a","nu":1,"p":[2]},{"label":"a","nu":1,"p":[3]}]}"#,
            r#"{"q":0.9,"k":[4],"balls":[{"nu":1,"p":[2]}]}"#,
            r#"{"q":2,"k":[0],"balls":[{"nu":1,"p":[2]}]}"#,
        ];
        for c in cases {
            assert!(BallFamily::from_json(c).is_err(), "accepted {c}");
        }
        // case-insensitive token
        assert!(BallFamily::from_json(r#"{"q":2,"k":[4],"balls":[{"nu":1,"p":["INF"]}]}"#).is_ok());
    }

    #[test]
    fn warnings_for_duplicates_and_large_n() {
        let f = BallFamily::from_json(
            r#"{"q":2,"n":9,"k":[16],"balls":[{"nu":1,"p":[3]},{"nu":1,"p":[3]}]}"#,
        )
        .unwrap();
        assert_eq!(f.warnings().len(), 2);
        assert!(f.warnings().iter().any(|w| w.contains("identical")));
    }

    #[test]
    fn round_trip_is_identity() {
        let f = BallFamily::from_json(
            r#"{"q":1.5,"n":2,"k":[3,7],"balls":[{"label":"x","nu":0.3,"p":[3,"inf"]},{"nu":2.5,"p":[1.7,1]}]}"#,
        )
        .unwrap();
        let g = BallFamily::from_json(&f.to_json()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn p_for_u_inverts_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut samples = vec![1.0, 0.5, 1.0 / 3.0, 0.123456789, 0.9999999, 1e-9, 0.7];
        samples.extend((0..10_000).map(|_| rng.gen_range(0.0..1.0)));
        for u in samples {
            let u = representable_u(u);
            match p_for_u(u) {
                RawExponent::Number(p) => assert_eq!(1.0 / p, u),
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(p_for_u(0.0), RawExponent::Token("inf".into()));
    }

    #[test]
    fn general_position_examples() {
        let r = check_general_position(&two_ball(), DEFAULT_GP_TOL);
        assert!(r.ok, "{r:?}");

        let f = BallFamily::from_json(r#"{"q":2,"k":[8,8],"balls":[{"nu":1,"p":[2,3]}]}"#).unwrap();
        let r = check_general_position(&f, DEFAULT_GP_TOL);
        assert!(!r.ok);
        assert_eq!(r.violations[0].kind, ViolationKind::ThetaEqualsQ);
        assert_eq!(r.violations[0].tuple, vec!["b1".to_string()]);

        let f =
            BallFamily::from_json(r#"{"q":2,"k":[8],"balls":[{"nu":1,"p":[3]},{"nu":2,"p":[3]}]}"#)
                .unwrap();
        let r = check_general_position(&f, DEFAULT_GP_TOL);
        assert!(r
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::AffineDependence && v.active == vec![1]));
    }

    #[test]
    fn perturb_zero_is_identity() {
        let f = two_ball();
        assert_eq!(perturb(&f, 0.0, 3).unwrap(), f);
        assert!(perturb(&f, 0.5, 3).is_err());
        assert!(perturb(&f, -1e-3, 3).is_err());
    }

    #[test]
    fn perturb_separates_degenerate_pair() {
        let f = BallFamily::from_json(
            r#"{"q":2,"k":[8,8],"balls":[{"nu":1,"p":[3,1.5]},{"nu":1,"p":[3,1.5]}]}"#,
        )
        .unwrap();
        assert!(!check_general_position(&f, DEFAULT_GP_TOL).ok);
        let g = perturb(&f, 1e-4, 11).unwrap();
        assert_ne!(g.balls()[0].u, g.balls()[1].u);
        assert!(check_general_position(&g, 1e-5).ok);
        for (a, b) in f.balls().iter().zip(g.balls()) {
            for (x, y) in a.u.as_slice().iter().zip(b.u.as_slice()) {
                assert!((x - y).abs() <= 1e-4);
            }
            assert_eq!(a.nu, b.nu);
        }
    }

    #[test]
    fn perturb_is_deterministic() {
        let f = two_ball();
        let a = perturb(&f, 1e-3, 99).unwrap().to_json();
        let b = perturb(&f, 1e-3, 99).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, perturb(&f, 1e-3, 100).unwrap().to_json());
    }
}
