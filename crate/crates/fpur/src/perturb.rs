//! Support perturbations: cutting the distribution at `m` and pushing all
//! later mass back by `g` (a support gap; `m = 0` is a pure delay), the
//! closed-form restart sequence of the perturbed distribution in its three
//! regions, and the thresholds on `g` that create or destroy beneficial
//! restart.

use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, Pmf};
use crate::kahan::KahanSum;
use crate::restart_seq::{epsilon_sign, restart_sequence, SeqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapSpec {
    /// cut point: mass at `n >= m` is shifted back by `g`
    pub m: u64,
    /// gap length, `g >= 1`
    pub g: u64,
}

impl GapSpec {
    pub fn new(m: u64, g: u64) -> Result<Self, PerturbError> {
        if g < 1 {
            return Err(PerturbError::Inapplicable("gap length must be >= 1".into()));
        }
        Ok(GapSpec { m, g })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PerturbError {
    #[error("mean is infinite")]
    InfiniteMean,
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum GapThreshold {
    /// `S_n <= 0` already: any gap length makes the index negative.
    AlwaysBeneficial,
    /// `S̃_n < 0` exactly for `g` above this value.
    Threshold { g_star: f64 },
}

/// The gapped distribution `ũ`: `u(n)` below `m`, zero on `[m, m+g)`,
/// `u(n-g)` from `m+g` on. For unbounded supports the result is an explicit
/// window at tolerance `tol` (which must be at most 1e-9 so the window
/// still normalizes).
pub fn insert_gap(d: &Pmf, spec: &GapSpec, tol: f64) -> Result<Pmf, PerturbError> {
    if d.mean().is_infinite() {
        return Err(PerturbError::InfiniteMean);
    }
    let view = d.truncate(tol)?;
    let (offset, probs) = (view.offset, view.probs);
    let out = if spec.m <= offset {
        // whole support shifts
        Pmf::explicit(offset + spec.g, probs)
    } else if spec.m > view.n_max {
        // gap beyond the support is inert
        Pmf::explicit(offset, probs)
    } else {
        let cut = (spec.m - offset) as usize;
        let mut out = Vec::with_capacity(probs.len() + spec.g as usize);
        out.extend_from_slice(&probs[..cut]);
        out.extend(std::iter::repeat_n(0.0, spec.g as usize));
        out.extend_from_slice(&probs[cut..]);
        Pmf::explicit(offset, out)
    };
    Ok(out?)
}

/// Three-region closed form (pre-gap, within-gap, post-gap) for the restart
/// sequence of the gapped distribution. [`gap_sequence_direct`] is the
/// canonical value; this is the cross-check.
pub fn predicted_gap_sequence(
    d: &Pmf,
    spec: &GapSpec,
    n_len: usize,
    tol: f64,
) -> Result<Vec<f64>, PerturbError> {
    if d.mean().is_infinite() {
        return Err(PerturbError::InfiniteMean);
    }
    let seq = restart_sequence(d, tol)?;
    let (m, g) = (spec.m, spec.g as f64);
    let u_m1 = d.cmf_at(m as i64 - 1);
    let surv_m1 = 1.0 - u_m1;
    let s_m1 = if m == 0 { 0.0 } else { seq.at(m - 1) };
    let mut out = Vec::with_capacity(n_len);
    for n in 0..n_len as u64 {
        let v = if n < m {
            seq.at(n) - d.cmf_at(n as i64) * surv_m1 * g
        } else if n < m + spec.g {
            s_m1 + surv_m1 * (1.0 - u_m1 * g + (n - m) as f64)
        } else {
            seq.at(n - spec.g) + surv_m1 * d.survival((n - spec.g) as i64) * g
        };
        out.push(v);
    }
    Ok(out)
}

/// Restart sequence of the gapped distribution by direct summation over the
/// exact transformed PMF, with the exact mean
/// `E[Ũ] = E[U] + g (1 - U(m-1))`. Exact-tail counterpart to running
/// [`restart_sequence`] on the windowed output of [`insert_gap`].
pub fn gap_sequence_direct(
    d: &Pmf,
    spec: &GapSpec,
    n_len: usize,
) -> Result<Vec<f64>, PerturbError> {
    let mean_u = d.mean();
    if mean_u.is_infinite() {
        return Err(PerturbError::InfiniteMean);
    }
    let mean_gapped = mean_u + spec.g as f64 * (1.0 - d.cmf_at(spec.m as i64 - 1));
    let mut it = d.pmf_iter();
    let mut cum = KahanSum::new();
    let mut s = KahanSum::new();
    let mut out = Vec::with_capacity(n_len);
    for n in 0..n_len as u64 {
        let u = if n >= spec.m && n < spec.m + spec.g {
            0.0
        } else {
            it.next().unwrap_or(0.0)
        };
        cum.add(u);
        s.add(1.0 - cum.value() - u * mean_gapped);
        out.push(s.value());
    }
    Ok(out)
}

/// Pre-gap region: smallest gap length making `S̃_n` negative at `n < m`.
pub fn pre_gap_benefit_threshold(
    d: &Pmf,
    n: u64,
    m: u64,
    tol: f64,
) -> Result<GapThreshold, PerturbError> {
    if n >= m {
        return Err(PerturbError::Inapplicable("requires n < m".into()));
    }
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(PerturbError::InfiniteMean);
    }
    let u_n = d.cmf_at(n as i64);
    let u_m1 = d.cmf_at(m as i64 - 1);
    if u_n <= 0.0 {
        return Err(PerturbError::Inapplicable("U(n) = 0".into()));
    }
    if u_m1 >= 1.0 {
        return Err(PerturbError::Inapplicable(
            "U(m-1) = 1: gap is inert".into(),
        ));
    }
    let s_n = restart_sequence(d, tol)?.at(n);
    if s_n <= epsilon_sign(mean) {
        return Ok(GapThreshold::AlwaysBeneficial);
    }
    Ok(GapThreshold::Threshold {
        g_star: s_n / (u_n * (1.0 - u_m1)),
    })
}

/// Post-gap region: does benefit at index `N` (with `S_N < 0`) survive the
/// gap, i.e. is `S̃_{N+g}` still negative?
pub fn post_gap_benefit_preserved(
    d: &Pmf,
    n: u64,
    m: u64,
    g: u64,
    tol: f64,
) -> Result<bool, PerturbError> {
    if n < m {
        return Err(PerturbError::Inapplicable("requires N >= m".into()));
    }
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(PerturbError::InfiniteMean);
    }
    let surv_n = d.survival(n as i64);
    if surv_n <= 0.0 {
        return Err(PerturbError::Inapplicable("U(N) = 1".into()));
    }
    let s_n = restart_sequence(d, tol)?.at(n);
    if s_n >= -epsilon_sign(mean) {
        return Err(PerturbError::Inapplicable("requires S_N < 0".into()));
    }
    let surv_m1 = 1.0 - d.cmf_at(m as i64 - 1);
    if surv_m1 <= 0.0 {
        return Ok(true); // gap beyond the support leaves S unchanged
    }
    Ok((g as f64) < s_n.abs() / (surv_m1 * surv_n))
}

/// Delay special case (`m = 0`): benefit at `N` survives a delay of `g`
/// iff `g < |S_N| / (1 - U(N))`.
pub fn delay_benefit_preserved(d: &Pmf, n: u64, g: u64, tol: f64) -> Result<bool, PerturbError> {
    post_gap_benefit_preserved(d, n, 0, g, tol)
}
