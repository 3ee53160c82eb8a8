//! Command-line front end: `psi`, `sweep`, `check`, `witness`, `oracle`.
//!
//! Every command returns an [`Output`] carrying stdout, stderr and the exit
//! code: 0 when all verdicts pass, 2 when any fails, 1 on input errors or
//! an exceeded enumeration cap.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certificate::{psi, Certificate, PsiResult, SearchOptions};
use crate::error::{Error, Result};
use crate::extremal::{construct_witness, verify_membership, ExtremalWitness, MembershipReport};
use crate::family::{
    check_general_position, p_for_u, perturb, BallFamily, GeneralPositionReport, RawExponent,
    RawFamily, DEFAULT_GP_TOL,
};
use crate::harness::{run_check, RandomBounds, IDENTITY_TOL, ORACLE_TOL};
use crate::oracle::{compare, minimize, Method, MinimizeOptions, OracleResult, Status, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Tolerance on fitted sweep slopes.
pub const SLOPE_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "widthcalc",
    version,
    about = "Order estimates for Kolmogorov widths of intersections of anisotropic balls"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (falls back to WIDTHCALC_THREADS, then all cores).
    #[arg(long, global = true, env = "WIDTHCALC_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report: psi, certificate, witness, oracle comparison.
    Psi {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute psi over a range of k_i and fit the exponent of k_i.
    Sweep {
        config: PathBuf,
        /// Axis to vary, 1-based.
        #[arg(long)]
        axis: usize,
        /// Comma-separated increasing values of k_i.
        #[arg(long, value_delimiter = ',', required = true)]
        kvalues: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized invariant suite over seeded general-position families.
    Check {
        /// Optional JSON file with generator bounds.
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Witness construction and membership check only.
    Witness {
        config: PathBuf,
        /// Write the floored dense witness as little-endian f64, index 1 fastest.
        #[arg(long)]
        dump_tensor: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Continuous minimization over the weight simplex only.
    Oracle {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of (tuple, I) pairs to enumerate.
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
    /// General-position tolerance.
    #[arg(long, default_value_t = DEFAULT_GP_TOL)]
    pub tol: f64,
    /// Oracle lattice refinement depth.
    #[arg(long, default_value_t = 7)]
    pub grid_levels: u32,
    /// Magnitude of the automatic perturbation.
    #[arg(long, default_value_t = 1e-7)]
    pub perturb_delta: f64,
    /// Seed for perturbation and random trials.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Materialize the witness tensor when kprod <= 4096.
    #[arg(long)]
    pub dense_verify: bool,
    /// Allowed gap between log psi and the oracle minimum.
    #[arg(long, default_value_t = ORACLE_TOL)]
    pub compare_tol: f64,
    /// Include wall-clock timings (output is then not reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Iterative,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Exact => Method::Exact,
            MethodArg::Iterative => Method::Iterative,
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Output {
    fn error(e: &Error) -> Self {
        Self {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: EXIT_INPUT,
        }
    }
}

impl Common {
    fn search(&self) -> SearchOptions {
        SearchOptions {
            cap: self.cap,
            ..SearchOptions::default()
        }
    }

    fn oracle(&self, method: Method) -> MinimizeOptions {
        MinimizeOptions {
            grid_levels: self.grid_levels,
            method,
            ..MinimizeOptions::default()
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Psi { common, .. }
            | Command::Sweep { common, .. }
            | Command::Check { common, .. }
            | Command::Witness { common, .. }
            | Command::Oracle { common, .. } => common,
        }
    }
}

/// Runs the parsed command on a dedicated thread pool and writes `--out`.
pub fn execute(cli: &Cli) -> Output {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return Output::error(&Error::Invalid(format!("thread pool: {e}"))),
    };
    let result = pool.install(|| match &cli.command {
        Command::Psi { config, common } => cmd_psi(config, common),
        Command::Sweep {
            config,
            axis,
            kvalues,
            common,
        } => cmd_sweep(config, *axis, kvalues, common),
        Command::Check {
            config,
            trials,
            common,
        } => cmd_check(config.as_deref(), *trials, common),
        Command::Witness {
            config,
            dump_tensor,
            common,
        } => cmd_witness(config, dump_tensor.as_deref(), common),
        Command::Oracle {
            config,
            method,
            common,
        } => cmd_oracle(config, (*method).into(), common),
    });
    let mut out = match result {
        Ok(o) => o,
        Err(e) => return Output::error(&e),
    };
    if let Some(path) = &cli.command.common().out {
        if let Err(e) = fs::write(path, &out.stdout) {
            return Output::error(&e.into());
        }
        out.stdout.clear();
    }
    out
}

fn load_family(path: &Path) -> Result<BallFamily> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    BallFamily::from_json(&text)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct CertificateReport {
    pub id: String,
    pub m: usize,
    pub tuple: Vec<String>,
    /// Active coordinates, 1-based.
    pub active: Vec<usize>,
    pub lambda: Vec<f64>,
    pub theta_u: Vec<f64>,
    pub theta_p: Vec<RawExponent>,
    pub log_value: f64,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        Self {
            id: c.id(),
            m: c.m,
            tuple: c.labels.clone(),
            active: c.active.iter().map(|i| i + 1).collect(),
            lambda: c.lambda.clone(),
            theta_u: c.theta_u.as_slice().to_vec(),
            theta_p: c.theta_u.as_slice().iter().map(|&u| p_for_u(u)).collect(),
            log_value: c.log_value.get(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CountsReport {
    pub pairs_examined: u64,
    pub certificates: u64,
    pub per_m: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct PerturbationReport {
    pub delta: f64,
    pub seed: u64,
    pub note: String,
    pub family: RawFamily,
    pub log_psi: f64,
    pub certificate: String,
    /// `log psi(perturbed) - log psi(original)`.
    pub log_psi_shift: f64,
}

#[derive(Debug, Serialize)]
pub struct WitnessReport {
    /// `"original"` or `"perturbed"`.
    pub family: String,
    pub witness: ExtremalWitness,
    pub membership: MembershipReport,
    /// `|log ||w||_q - log psi|` for the family the witness was built on.
    pub identity_gap: f64,
    pub identity_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub result: OracleResult,
    pub verdict: Verdict,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub psi_ms: f64,
    pub witness_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub family: RawFamily,
    pub warnings: Vec<String>,
    pub log_psi: f64,
    pub psi: f64,
    pub certificate: CertificateReport,
    pub counts: CountsReport,
    pub general_position: GeneralPositionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationReport>,
    pub witness: WitnessReport,
    pub oracle: OracleReport,
    /// `"PASS"` or `"FAIL"`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// The family on which witnesses are built: the input itself when in
/// general position, otherwise its seeded perturbation.
struct Prepared {
    family: BallFamily,
    result: PsiResult,
    gp: GeneralPositionReport,
    witness_family: Option<(BallFamily, PsiResult)>,
}

impl Prepared {
    fn witness_source(&self) -> (&BallFamily, &PsiResult, &str) {
        match &self.witness_family {
            Some((f, r)) => (f, r, "perturbed"),
            None => (&self.family, &self.result, "original"),
        }
    }
}

fn prepare(path: &Path, common: &Common) -> Result<Prepared> {
    let family = load_family(path)?;
    let opts = common.search();
    let result = psi(&family, &opts)?;
    let gp = check_general_position(&family, common.tol);
    let witness_family = if gp.ok {
        None
    } else {
        let g = perturb(&family, common.perturb_delta, common.seed)?;
        let r = psi(&g, &opts)?;
        Some((g, r))
    };
    Ok(Prepared {
        family,
        result,
        gp,
        witness_family,
    })
}

fn witness_report(
    f: &BallFamily,
    r: &PsiResult,
    source: &str,
    dense: bool,
) -> Result<WitnessReport> {
    let witness = construct_witness(f, &r.best)?;
    let membership = verify_membership(&witness, f, dense);
    let identity_gap = (witness.log_q_norm.get() - r.log_psi.get()).abs();
    let identity_pass = identity_gap <= IDENTITY_TOL;
    Ok(WitnessReport {
        family: source.to_string(),
        pass: membership.pass && identity_pass,
        witness,
        membership,
        identity_gap,
        identity_pass,
    })
}

fn verdict_str(pass: bool) -> String {
    if pass { "PASS" } else { "FAIL" }.to_string()
}

pub fn cmd_psi(path: &Path, common: &Common) -> Result<Output> {
    let t0 = Instant::now();
    let prep = prepare(path, common)?;
    let psi_ms = millis(t0);

    let t1 = Instant::now();
    let (wf, wr, source) = prep.witness_source();
    let witness = witness_report(wf, wr, source, common.dense_verify)?;
    let witness_ms = millis(t1);

    let t2 = Instant::now();
    let orc = minimize(&prep.family, &common.oracle(Method::Auto))?;
    let verdict = compare(&prep.result, &orc, common.compare_tol);
    let oracle_ms = millis(t2);

    let perturbation = prep.witness_family.as_ref().map(|(g, r)| PerturbationReport {
        delta: common.perturb_delta,
        seed: common.seed,
        note: format!(
            "family not in general position ({} violation(s)); witness built on a perturbation of size {:e}",
            prep.gp.violations.len(),
            common.perturb_delta
        ),
        family: g.to_raw(),
        log_psi: r.log_psi.get(),
        certificate: r.best.id(),
        log_psi_shift: r.log_psi.get() - prep.result.log_psi.get(),
    });

    let pass = witness.pass && verdict.pass && orc.status == Status::Converged;
    let counts = &prep.result.counts;
    let report = Report {
        family: prep.family.to_raw(),
        warnings: prep.family.warnings().to_vec(),
        log_psi: prep.result.log_psi.get(),
        psi: prep.result.psi(),
        certificate: (&prep.result.best).into(),
        counts: CountsReport {
            pairs_examined: counts.pairs_examined,
            certificates: counts.certificates,
            per_m: counts.per_m.clone(),
        },
        general_position: prep.gp,
        perturbation,
        witness,
        oracle: OracleReport {
            result: orc,
            verdict,
        },
        verdict: verdict_str(pass),
        timings: common.timings.then_some(Timings {
            psi_ms,
            witness_ms,
            oracle_ms,
        }),
    };
    Ok(Output {
        stdout: to_json(&report),
        stderr: String::new(),
        code: if pass { EXIT_PASS } else { EXIT_FAIL },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: u64,
    pub log_psi: f64,
    pub certificate: String,
    /// `(1/q - 1/theta_axis)_+` of the row's certificate.
    pub expected_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    pub axis: usize,
    pub certificate: String,
    pub rows: usize,
    pub k_from: u64,
    pub k_to: u64,
    pub slope: f64,
    pub expected_slope: f64,
    pub pass: bool,
}

/// Psi at each `k_axis` value (axis 0-based), all else fixed.
pub fn sweep_rows(
    f: &BallFamily,
    axis: usize,
    kvalues: &[u64],
    opts: &SearchOptions,
) -> Result<Vec<SweepRow>> {
    if axis >= f.dim() {
        return Err(Error::Invalid(format!(
            "axis {} outside 1..={}",
            axis + 1,
            f.dim()
        )));
    }
    if kvalues.is_empty() || kvalues[0] == 0 || kvalues.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "kvalues must be positive and strictly increasing".into(),
        ));
    }
    let uq = f.q().uq();
    kvalues
        .iter()
        .map(|&k| {
            let g = f.with_ks(f.ks().with_side(axis, k)?)?;
            let r = psi(&g, opts)?;
            Ok(SweepRow {
                k,
                log_psi: r.log_psi.get(),
                certificate: r.best.id(),
                expected_slope: (uq - r.best.theta_u[axis]).max(0.0),
            })
        })
        .collect()
}

/// Least-squares slope of `log_psi` against `log k` over the longest run of
/// consecutive rows sharing one certificate (earliest run on ties).
pub fn fit_slope(rows: &[SweepRow], axis: usize) -> Option<SweepFit> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    for end in 1..=rows.len() {
        if end == rows.len() || rows[end].certificate != rows[start].certificate {
            let len = end - start;
            if len >= 2 && best.is_none_or(|(s, e)| len > e - s) {
                best = Some((start, end));
            }
            start = end;
        }
    }
    let (s, e) = best?;
    let run = &rows[s..e];
    let n = run.len() as f64;
    let xs: Vec<f64> = run.iter().map(|r| (r.k as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = run.iter().map(|r| r.log_psi).sum::<f64>() / n;
    let sxy: f64 = xs
        .iter()
        .zip(run)
        .map(|(x, r)| (x - mx) * (r.log_psi - my))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let expected_slope = run[0].expected_slope;
    Some(SweepFit {
        axis: axis + 1,
        certificate: run[0].certificate.clone(),
        rows: run.len(),
        k_from: run[0].k,
        k_to: run[run.len() - 1].k,
        slope,
        expected_slope,
        pass: (slope - expected_slope).abs() <= SLOPE_TOL,
    })
}

pub fn cmd_sweep(path: &Path, axis: usize, kvalues: &[u64], common: &Common) -> Result<Output> {
    let f = load_family(path)?;
    if axis == 0 {
        return Err(Error::Invalid("axis is 1-based".into()));
    }
    let rows = sweep_rows(&f, axis - 1, kvalues, &common.search())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([format!("k_{axis}"), "log_psi".into(), "certificate".into()])?;
    for r in &rows {
        w.write_record([
            r.k.to_string(),
            r.log_psi.to_string(),
            r.certificate.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let stdout = String::from_utf8(bytes).expect("csv output is utf-8");
    let fit = fit_slope(&rows, axis - 1);
    let code = match &fit {
        Some(fit) if !fit.pass => EXIT_FAIL,
        _ => EXIT_PASS,
    };
    Ok(Output {
        stdout,
        stderr: to_json(&serde_json::json!({ "fit": fit })),
        code,
    })
}

pub fn cmd_check(config: Option<&Path>, trials: u64, common: &Common) -> Result<Output> {
    let bounds = match config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => RandomBounds::default(),
    };
    validate_bounds(&bounds)?;
    let summary = run_check(trials, common.seed, &bounds)?;
    Ok(Output {
        stdout: to_json(&summary),
        stderr: String::new(),
        code: if summary.failed == 0 {
            EXIT_PASS
        } else {
            EXIT_FAIL
        },
    })
}

fn validate_bounds(b: &RandomBounds) -> Result<()> {
    let bad = |m: &str| Err(Error::Invalid(format!("random bounds: {m}")));
    if b.max_balls == 0 || b.max_dim == 0 {
        return bad("max_balls and max_dim must be positive");
    }
    if b.q_values.is_empty() || b.q_values.iter().any(|q| !(1.0..=2.0).contains(q)) {
        return bad("q_values must be non-empty and within [1, 2]");
    }
    if b.k_min == 0 || b.k_min > b.k_max {
        return bad("need 1 <= k_min <= k_max");
    }
    if !(b.log_nu_span >= 0.0 && b.log_nu_span.is_finite()) {
        return bad("log_nu_span must be a finite non-negative number");
    }
    if !(b.perturb_delta > 0.0 && b.perturb_delta < 0.5) {
        return bad("perturb_delta must lie in (0, 1/2)");
    }
    Ok(())
}

pub fn cmd_witness(path: &Path, dump: Option<&Path>, common: &Common) -> Result<Output> {
    let prep = prepare(path, common)?;
    let (wf, wr, source) = prep.witness_source();
    let report = witness_report(wf, wr, source, common.dense_verify)?;
    if let Some(dump) = dump {
        let tensor = report.witness.materialize(wf)?;
        fs::write(dump, tensor.to_le_bytes())?;
    }
    Ok(Output {
        stdout: to_json(&serde_json::json!({
            "certificate": CertificateReport::from(&wr.best),
            "log_psi": wr.log_psi.get(),
            "witness": report,
        })),
        stderr: String::new(),
        code: if report.pass { EXIT_PASS } else { EXIT_FAIL },
    })
}

pub fn cmd_oracle(path: &Path, method: Method, common: &Common) -> Result<Output> {
    let f = load_family(path)?;
    let orc = minimize(&f, &common.oracle(method))?;
    let code = match orc.status {
        Status::Converged => EXIT_PASS,
        Status::CapReached => EXIT_FAIL,
    };
    Ok(Output {
        stdout: to_json(&orc),
        stderr: String::new(),
        code,
    })
}
