//! Command-line front-end: parse distribution specs and restart policies,
//! run analyses, and emit deterministic structured reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use fpur::dist::{DistError, Pmf};
use fpur::hitting::{mean_hitting_time, optimize_sharp, simulate, HitError, RestartPolicy};
use fpur::perturb::{
    gap_sequence_direct, post_gap_benefit_preserved, pre_gap_benefit_threshold,
    predicted_gap_sequence, GapSpec, GapThreshold, PerturbError,
};
use fpur::reconstruct::{reconstruct_cmf, ReconstructError};
use fpur::report::{fmt_f64, fmt_slice, two_column, Report};
use fpur::restart_seq::{
    beneficial, epsilon_sign, fsa, log_shape, tail_class, CertifiedReason, LogShape,
    RestartSequence, SeqError, TailClass, Verdict,
};

const EXIT_HELP: &str = "Exit codes:
  0  success
  1  internal limit exceeded (truncation horizon or restart cap)
  2  parse or usage error
  3  operation requires a finite mean
  4  preemptive or degenerate restart policy
  5  input does not define a probability distribution";

#[derive(Parser)]
#[command(
    name = "fpur",
    version,
    about = "Decide whether restart reduces the mean hitting time of a discrete first-passage process",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full analysis: verdict, first-step test, shape classes, sequence preview
    Analyze {
        /// JSON distribution spec file
        spec: PathBuf,
        /// Truncation tail tolerance
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Cap on the sequence length (default: automatic from --tol)
        #[arg(long)]
        horizon: Option<u64>,
        /// Write the full sequence as two-column plot data
        #[arg(long)]
        seq_out: Option<PathBuf>,
    },
    /// Exact mean hitting time under a restart policy
    Et {
        spec: PathBuf,
        /// sharp:N | dist:<spec-file> | none
        #[arg(long, default_value = "none")]
        policy: String,
    },
    /// Best sharp restart time, if any beats no restart
    Optimize {
        spec: PathBuf,
        /// Largest sharp restart time to scan
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Effect of a support gap or delay on the sequence and on benefit
    Perturb {
        spec: PathBuf,
        /// Gap as m,g: zero out g support points starting at m
        #[arg(long, conflicts_with = "delay")]
        gap: Option<String>,
        /// Delay by g (a gap at the origin)
        #[arg(long)]
        delay: Option<u64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Sequence indices to report
        #[arg(long, default_value_t = 12)]
        len: usize,
        /// Write the transformed sequence as two-column plot data
        #[arg(long)]
        seq_out: Option<PathBuf>,
    },
    /// Recover the distribution realizing a sequence at a given mean
    Reconstruct {
        /// Sequence file: one real per line, or a JSON array
        seq: PathBuf,
        #[arg(long)]
        mean: f64,
    },
    /// Seeded Monte Carlo estimate of the mean hitting time
    Simulate {
        spec: PathBuf,
        /// sharp:N | dist:<spec-file> | none
        #[arg(long, default_value = "none")]
        policy: String,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Hit(#[from] HitError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
}

fn dist_code(e: &DistError) -> u8 {
    match e {
        DistError::InvalidParameter(_) => 5,
        DistError::InfiniteMean => 3,
        DistError::HorizonExceeded { .. } => 1,
    }
}

fn seq_code(e: &SeqError) -> u8 {
    match e {
        SeqError::InfiniteMean => 3,
        SeqError::NotApplicable(_) | SeqError::InvalidIndex(_) => 2,
        SeqError::Dist(d) => dist_code(d),
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(..) | CliError::Json(_) | CliError::Usage(_) => 2,
            CliError::Dist(d) => dist_code(d),
            CliError::Seq(s) => seq_code(s),
            CliError::Hit(h) => match h {
                HitError::Preemptive | HitError::DegenerateZeroRestart => 4,
                HitError::InfiniteMean => 3,
                HitError::RestartCapExceeded { .. } => 1,
                HitError::Dist(d) => dist_code(d),
                HitError::Seq(s) => seq_code(s),
            },
            CliError::Perturb(p) => match p {
                PerturbError::InfiniteMean => 3,
                PerturbError::Inapplicable(_) => 2,
                PerturbError::Dist(d) => dist_code(d),
                PerturbError::Seq(s) => seq_code(s),
            },
            CliError::Reconstruct(r) => match r {
                ReconstructError::NotADistribution(_)
                | ReconstructError::InconsistentTail { .. } => 5,
                ReconstructError::InvalidMean => 2,
                ReconstructError::Dist(d) => dist_code(d),
                ReconstructError::Seq(s) => seq_code(s),
            },
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn load_spec(path: &Path) -> Result<Pmf, CliError> {
    let text = read_file(path)?;
    let d: Pmf = serde_json::from_str(&text)?;
    Ok(d.validated()?)
}

fn parse_policy(s: &str) -> Result<RestartPolicy, CliError> {
    if s == "none" {
        return Ok(RestartPolicy::NoRestart);
    }
    if let Some(n) = s.strip_prefix("sharp:") {
        let n: u64 = n
            .parse()
            .map_err(|_| CliError::Usage(format!("bad sharp restart time in policy '{s}'")))?;
        return Ok(RestartPolicy::sharp(n)?);
    }
    if let Some(path) = s.strip_prefix("dist:") {
        let r = load_spec(Path::new(path))?;
        return Ok(RestartPolicy::distributional(r)?);
    }
    Err(CliError::Usage(format!(
        "policy must be sharp:N, dist:<spec-file>, or none (got '{s}')"
    )))
}

fn parse_seq_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_file(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            line.parse::<f64>().map_err(|_| {
                CliError::Usage(format!("line {}: '{line}' is not a number", i + 1))
            })?,
        );
    }
    Ok(out)
}

fn spec_echo(d: &Pmf) -> String {
    serde_json::to_string(d).expect("spec serialization is infallible")
}

/// Path-free policy rendering so reports are machine-independent.
fn policy_echo(pol: &RestartPolicy) -> String {
    match pol {
        RestartPolicy::NoRestart => "none".to_string(),
        RestartPolicy::Sharp { n } => format!("sharp:{n}"),
        RestartPolicy::Distributional { r } => format!("dist:{}", spec_echo(r)),
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Beneficial { witness, s_value } => format!(
            "beneficial sharp_restart_at={witness} s_value={}",
            fmt_f64(*s_value)
        ),
        Verdict::NotBeneficialCertified { reason } => {
            let r = match reason {
                CertifiedReason::LogConcave => "log_concave",
                CertifiedReason::ConvexOrLinearBounded => "convex_or_linear_bounded",
                CertifiedReason::AllNonNegativeFiniteSupport => "all_non_negative_finite_support",
            };
            format!("not_beneficial certificate={r}")
        }
        Verdict::NotBeneficialWithinHorizon { horizon, min_s } => format!(
            "not_beneficial_within_horizon horizon={horizon} min_s={}",
            fmt_f64(*min_s)
        ),
        Verdict::Neutral => "neutral".to_string(),
        Verdict::TriviallyBeneficial => "trivially_beneficial".to_string(),
    }
}

fn log_shape_text(s: LogShape) -> &'static str {
    match s {
        LogShape::LogConcave => "log_concave",
        LogShape::LogConvex => "log_convex",
        LogShape::GeometricExact => "geometric_exact",
        LogShape::Neither => "neither",
    }
}

fn tail_class_text(t: TailClass) -> &'static str {
    match t {
        TailClass::ConvexTail => "convex",
        TailClass::ConcaveTail => "concave",
        TailClass::LinearTail => "linear",
        TailClass::Undetermined => "undetermined",
    }
}

const PREVIEW_LEN: usize = 10;

fn cmd_analyze(
    spec: &Path,
    tol: f64,
    horizon: Option<u64>,
    seq_out: Option<&Path>,
) -> Result<String, CliError> {
    let d = load_spec(spec)?;
    let mut r = Report::new("analyze");
    r.kv("spec", spec_echo(&d));
    let mean = d.mean();
    r.kvf("mean", mean);
    let verdict = beneficial(&d, tol);
    r.kv("verdict", verdict_text(&verdict));
    if mean.is_finite() {
        let seq = match horizon {
            Some(cap) => RestartSequence::compute_capped(&d, tol, cap)?,
            None => RestartSequence::compute(&d, tol)?,
        };
        let f = fsa(&d)?;
        r.kv("fsa_admits", if f.admits { "true" } else { "false" });
        r.kvf("fsa_threshold", f.threshold);
        r.kv("log_shape", log_shape_text(log_shape(&d)));
        let (change_at, tc) = tail_class(&d, tol)?;
        r.kv("tail_class", tail_class_text(tc));
        if let Some(n) = change_at {
            r.kvu("tail_class_from", n);
        }
        let k = seq.values.len().min(PREVIEW_LEN);
        r.kv("sequence_preview", fmt_slice(&seq.values[..k]));
        r.kvf("min_s", seq.min_value());
        r.kvu("horizon", seq.horizon);
        r.kvf("tail_mass", seq.tail_mass);
        r.kvf("tol", tol);
        r.kvf("epsilon_sign", epsilon_sign(mean));
        if let Some(path) = seq_out {
            write_file(path, &two_column(&seq.values))?;
        }
    }
    Ok(r.render().to_string())
}

fn cmd_et(spec: &Path, policy: &str) -> Result<String, CliError> {
    let d = load_spec(spec)?;
    let pol = parse_policy(policy)?;
    let res = mean_hitting_time(&d, &pol)?;
    let mut r = Report::new("et");
    r.kv("spec", spec_echo(&d));
    r.kv("policy", policy_echo(&pol));
    r.kvf("mean_u", d.mean());
    r.kvf("e_t", res.e_t);
    r.kvf("p_restart", res.p_r);
    r.kvf("mean_min", res.e_min);
    r.kvf("benefit_gap", res.benefit_gap);
    Ok(r.render().to_string())
}

fn cmd_optimize(spec: &Path, n_max: Option<u64>) -> Result<String, CliError> {
    let d = load_spec(spec)?;
    let mut r = Report::new("optimize");
    r.kv("spec", spec_echo(&d));
    let mean = d.mean();
    r.kvf("mean", mean);
    match optimize_sharp(&d, n_max)? {
        Some((n, e_t)) => {
            r.kvu("best_sharp_restart", n);
            r.kvf("e_t", e_t);
            r.kvf("improvement", mean - e_t);
        }
        None => {
            r.kv("best_sharp_restart", "none");
            r.kv("note", "no beneficial sharp restart");
        }
    }
    Ok(r.render().to_string())
}

fn cmd_perturb(
    spec: &Path,
    gap: Option<&str>,
    delay: Option<u64>,
    tol: f64,
    len: usize,
    seq_out: Option<&Path>,
) -> Result<String, CliError> {
    let d = load_spec(spec)?;
    let g_spec = match (gap, delay) {
        (Some(s), None) => {
            let (m, g) = s
                .split_once(',')
                .ok_or_else(|| CliError::Usage("--gap expects m,g".into()))?;
            let m: u64 = m
                .trim()
                .parse()
                .map_err(|_| CliError::Usage("--gap expects integer m".into()))?;
            let g: u64 = g
                .trim()
                .parse()
                .map_err(|_| CliError::Usage("--gap expects integer g".into()))?;
            GapSpec::new(m, g)?
        }
        (None, Some(g)) => GapSpec::new(0, g)?,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --gap or --delay is required".into(),
            ))
        }
    };
    let base = RestartSequence::compute(&d, tol)?;
    let direct = gap_sequence_direct(&d, &g_spec, len)?;
    let predicted = predicted_gap_sequence(&d, &g_spec, len, tol)?;
    let max_dev = direct
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let mut r = Report::new("perturb");
    r.kv("spec", spec_echo(&d));
    r.kvu("gap_start", g_spec.m);
    r.kvu("gap_length", g_spec.g);
    r.kvf("mean", d.mean());
    r.kvf(
        "mean_perturbed",
        d.mean() + g_spec.g as f64 * (1.0 - d.cmf_at(g_spec.m as i64 - 1)),
    );
    let k = base.values.len().min(len);
    r.kv("sequence", fmt_slice(&base.values[..k]));
    r.kv("sequence_perturbed", fmt_slice(&direct));
    r.kvf("closed_form_max_dev", max_dev);
    for n in 0..g_spec.m {
        let text = match pre_gap_benefit_threshold(&d, n, g_spec.m, tol) {
            Ok(GapThreshold::AlwaysBeneficial) => "any".to_string(),
            Ok(GapThreshold::Threshold { g_star }) => fmt_f64(g_star),
            Err(PerturbError::Inapplicable(why)) => format!("n/a ({why})"),
            Err(e) => return Err(e.into()),
        };
        r.kv(&format!("pre_gap_threshold_{n}"), text);
    }
    if let Verdict::Beneficial { witness, .. } = beneficial(&d, tol) {
        // the negative index is witness - 1 (witness is the restart time)
        if witness >= 1 && witness > g_spec.m {
            let kept = post_gap_benefit_preserved(&d, witness - 1, g_spec.m, g_spec.g, tol)?;
            r.kvu("witness_index", witness - 1);
            r.kv(
                "witness_benefit_preserved",
                if kept { "true" } else { "false" },
            );
        }
    }
    if let Some(path) = seq_out {
        write_file(path, &two_column(&direct))?;
    }
    Ok(r.render().to_string())
}

fn cmd_reconstruct(seq: &Path, mean: f64) -> Result<String, CliError> {
    let s = parse_seq_file(seq)?;
    let d = reconstruct_cmf(&s, mean)?;
    let mut r = Report::new("reconstruct");
    r.kvu("sequence_length", s.len() as u64);
    r.kvf("target_mean", mean);
    r.kvf("mean", d.mean());
    r.kv("spec", spec_echo(&d));
    Ok(r.render().to_string())
}

fn cmd_simulate(spec: &Path, policy: &str, reps: u64, seed: u64) -> Result<String, CliError> {
    let d = load_spec(spec)?;
    let pol = parse_policy(policy)?;
    let res = simulate(&d, &pol, reps, seed)?;
    let mut r = Report::new("simulate");
    r.kv("spec", spec_echo(&d));
    r.kv("policy", policy_echo(&pol));
    r.kvu("replicates", res.replicates);
    r.kvu("seed", res.seed);
    r.kvf("mean_estimate", res.mean_estimate);
    r.kvf("std_error", res.std_error);
    r.kvf("restarts_per_run_mean", res.restarts_per_run_mean);
    Ok(r.render().to_string())
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.cmd {
        Cmd::Analyze {
            spec,
            tol,
            horizon,
            seq_out,
        } => cmd_analyze(&spec, tol, horizon, seq_out.as_deref()),
        Cmd::Et { spec, policy } => cmd_et(&spec, &policy),
        Cmd::Optimize { spec, n_max } => cmd_optimize(&spec, n_max),
        Cmd::Perturb {
            spec,
            gap,
            delay,
            tol,
            len,
            seq_out,
        } => cmd_perturb(&spec, gap.as_deref(), delay, tol, len, seq_out.as_deref()),
        Cmd::Reconstruct { seq, mean } => cmd_reconstruct(&seq, mean),
        Cmd::Simulate {
            spec,
            policy,
            reps,
            seed,
        } => cmd_simulate(&spec, &policy, reps, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
