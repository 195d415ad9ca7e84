//! Inverting the restart-sequence map: from a candidate sequence `{S_n}`
//! and a target mean, recover the unique consistent CMF through
//! `U(n) = p F_n + q U(n-1)` with `F_n = 1 + S_{n-1} - S_n`,
//! `p = 1/(mean+1)`, `q = 1 - p`.

use thiserror::Error;

use crate::dist::{DistError, Pmf};
use crate::kahan::kahan_sum;
use crate::restart_seq::{restart_sequence, SeqError};

/// Monotonicity violations up to this size are clamped; anything larger
/// means no distribution with the given mean realizes the sequence.
const CLAMP_TOL: f64 = 1e-9;

/// A realizable sequence ends at 0; a non-zero final value beyond this
/// cannot be extended and is only accepted subject to the tail check.
const ZERO_TAIL_TOL: f64 = 1e-9;

const MEAN_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ReconstructError {
    #[error("no distribution with this mean realizes the sequence: {0}")]
    NotADistribution(String),
    #[error("reconstructed mean {actual} deviates from target {target} beyond tolerance")]
    InconsistentTail { target: f64, actual: f64 },
    #[error("mean must be positive")]
    InvalidMean,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// `F_n = 1 + S_{n-1} - S_n` with `S_{-1} = 0`.
pub fn f_sequence(s: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len());
    let mut prev = 0.0;
    for &v in s {
        out.push(1.0 + prev - v);
        prev = v;
    }
    out
}

/// Recover the explicit distribution whose restart sequence is `s` and
/// whose mean is `mean`, validating that the recovered CMF is genuine.
///
/// When the sequence ends at 0 it is extended by zeros until the recovered
/// CMF has negligible tail, matching the fact that realizable sequences
/// converge to 0.
pub fn reconstruct_cmf(s: &[f64], mean: f64) -> Result<Pmf, ReconstructError> {
    let cmf = reconstruct_cmf_values(s, mean)?;
    let mut probs = Vec::with_capacity(cmf.len());
    let mut prev = 0.0;
    for &u in &cmf {
        probs.push((u - prev).max(0.0));
        prev = u;
    }
    // tight offset: strip leading zeros (and anything below f64 noise)
    let first = probs
        .iter()
        .position(|&p| p > 1e-15)
        .ok_or_else(|| ReconstructError::NotADistribution("all mass vanished".into()))?;
    let last = probs.iter().rposition(|&p| p > 1e-15).unwrap();
    let window: Vec<f64> = probs[first..=last].to_vec();
    let total = kahan_sum(&window);
    if total <= 0.0 {
        return Err(ReconstructError::NotADistribution("zero total mass".into()));
    }
    let normalized: Vec<f64> = window.iter().map(|p| p / total).collect();
    let mut m = 0.0;
    for (i, &p) in normalized.iter().enumerate() {
        m += (first + i) as f64 * p;
    }
    if (m - mean).abs() > MEAN_CHECK_TOL * (mean + 1.0) {
        return Err(ReconstructError::InconsistentTail {
            target: mean,
            actual: m,
        });
    }
    Ok(Pmf::explicit(first as u64, normalized)?)
}

/// The recovered CMF values themselves (the recurrence form).
pub fn reconstruct_cmf_values(s: &[f64], mean: f64) -> Result<Vec<f64>, ReconstructError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(ReconstructError::InvalidMean);
    }
    if s.is_empty() {
        return Err(ReconstructError::NotADistribution("empty sequence".into()));
    }
    let p = 1.0 / (mean + 1.0);
    let q = 1.0 - p;
    let mut cmf = Vec::with_capacity(s.len());
    let mut prev_u = 0.0;
    let mut prev_s = 0.0;
    for (n, &sn) in s.iter().enumerate() {
        let f = 1.0 + prev_s - sn;
        let u = push_cmf_value(p * f + q * prev_u, prev_u, n)?;
        cmf.push(u);
        prev_u = u;
        prev_s = sn;
    }
    // a sequence resting at 0 continues at 0: extend until the CMF closes
    let s_last = *s.last().unwrap();
    if s_last.abs() <= ZERO_TAIL_TOL {
        let f = 1.0; // F_n = 1 + s_last - s_last
        let mut n = s.len();
        while 1.0 - prev_u > 1e-12 && n < s.len() + (1 << 20) {
            let u = push_cmf_value(p * f + q * prev_u, prev_u, n)?;
            cmf.push(u);
            prev_u = u;
            n += 1;
        }
    }
    Ok(cmf)
}

fn push_cmf_value(u: f64, prev: f64, n: usize) -> Result<f64, ReconstructError> {
    if u > 1.0 + CLAMP_TOL {
        return Err(ReconstructError::NotADistribution(format!(
            "U({n}) = {u} exceeds 1"
        )));
    }
    if u < prev - CLAMP_TOL {
        return Err(ReconstructError::NotADistribution(format!(
            "U({n}) = {u} decreases below U({}) = {prev}",
            n as i64 - 1
        )));
    }
    Ok(u.min(1.0).max(prev))
}

/// Max CMF discrepancy over the window after a full round trip
/// (distribution → restart sequence → reconstruction at the same mean).
pub fn round_trip_error(d: &Pmf, tol: f64) -> Result<f64, ReconstructError> {
    let seq = restart_sequence(d, tol)?;
    let cmf = reconstruct_cmf_values(&seq.values, seq.mean_u)?;
    let mut worst = 0.0f64;
    let mut cum = crate::kahan::KahanSum::new();
    let mut it = d.pmf_iter();
    for &c in cmf.iter().take(seq.values.len()) {
        cum.add(it.next().unwrap_or(0.0));
        let err = (c - cum.value().min(1.0)).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}
