//! The restart sequence `S_n` and the diagnostics built on it: the
//! beneficial-restart verdict, first step analysis, convexity and log-shape
//! classification, tail classification, and the bounded-support dichotomy.
//!
//! `S_n` is the partial sum of `1 - U(k) - u(k) E[U]`; restart can reduce
//! the mean hitting time iff `S_n < 0` at some index.

use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, Pmf, TruncatedView, HORIZON_CAP};
use crate::kahan::KahanSum;

/// Values within `±epsilon_sign` of zero count as zero for verdicts and
/// classifications; the geometric case is analytically zero but numerically
/// noisy.
pub fn epsilon_sign(mean_u: f64) -> f64 {
    1e-10 * mean_u.max(1.0)
}

/// Default cap on sequence length when the tail tolerance alone would
/// demand an enormous window (heavy polynomial tails).
pub const SEQ_CAP: u64 = 1 << 22;

#[derive(Debug, Error, PartialEq)]
pub enum SeqError {
    #[error("mean is infinite")]
    InfiniteMean,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartSequence {
    /// `S_0..S_horizon`
    pub values: Vec<f64>,
    pub mean_u: f64,
    /// `K = E[U] / (E[U] + 1)`
    pub k_ratio: f64,
    pub tail_mass: f64,
    pub horizon: u64,
    finite_support: bool,
}

impl RestartSequence {
    pub fn compute(d: &Pmf, tol: f64) -> Result<Self, SeqError> {
        Self::compute_capped(d, tol, SEQ_CAP)
    }

    /// Compute over a window capped at `cap` indices; a capped window simply
    /// carries more tail mass, it is not an error.
    pub fn compute_capped(d: &Pmf, tol: f64, cap: u64) -> Result<Self, SeqError> {
        let mean = d.mean();
        if mean.is_infinite() {
            return Err(SeqError::InfiniteMean);
        }
        let view = truncate_soft(d, tol, cap)?;
        Ok(Self::from_view(&view, mean, d.has_finite_support()))
    }

    fn from_view(view: &TruncatedView, mean: f64, finite_support: bool) -> Self {
        let mut values = Vec::with_capacity(view.n_max as usize + 1);
        let mut s = KahanSum::new();
        let mut cum = KahanSum::new();
        for n in 0..=view.n_max {
            let u = view.at(n);
            cum.add(u);
            s.add(1.0 - cum.value() - u * mean);
            values.push(s.value());
        }
        if finite_support {
            // S_n = 0 exactly for n >= b
            if let Some(last) = values.last_mut() {
                *last = 0.0;
            }
        }
        RestartSequence {
            values,
            mean_u: mean,
            k_ratio: mean / (mean + 1.0),
            tail_mass: view.tail_mass,
            horizon: view.n_max,
            finite_support,
        }
    }

    /// `S_n`, treating indices beyond the window as 0 (exact past a finite
    /// support, a tail-bounded approximation otherwise).
    pub fn at(&self, n: u64) -> f64 {
        self.values.get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Least index with `S_n < -eps`, if any.
    pub fn first_negative(&self, eps: f64) -> Option<(u64, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -eps)
            .map(|(n, &v)| (n as u64, v))
    }

    pub fn finite_support(&self) -> bool {
        self.finite_support
    }
}

// Truncation that stops at the cap instead of erroring; verdicts report the
// realized tail mass.
fn truncate_soft(d: &Pmf, tol: f64, cap: u64) -> Result<TruncatedView, SeqError> {
    match d.truncate_capped(tol, cap) {
        Ok(v) => Ok(v),
        Err(DistError::HorizonExceeded { .. }) => {
            let v = d.truncate_capped(1.0 - f64::EPSILON, cap);
            // with tol ~ 1 the walk cannot hit the cap before satisfying it
            let mut v = v.map_err(SeqError::Dist)?;
            // extend to the cap so the window is as informative as allowed
            let mut cum = KahanSum::new();
            cum.add(1.0 - v.tail_mass);
            let mut it = d.pmf_iter();
            for _ in 0..=v.n_max {
                it.next();
            }
            for n in v.n_max + 1..=cap {
                match it.next() {
                    Some(u) => {
                        v.probs.push(u);
                        cum.add(u);
                        v.n_max = n;
                    }
                    None => break,
                }
            }
            v.tail_mass = (1.0 - cum.value()).max(0.0);
            Ok(v)
        }
        Err(e) => Err(SeqError::Dist(e)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tag")]
pub enum Verdict {
    /// `S_{n*} < 0` at witness index; sharp restart at `N = n* + 1` reduces
    /// the mean hitting time.
    Beneficial {
        witness: u64,
        s_value: f64,
    },
    NotBeneficialCertified {
        reason: CertifiedReason,
    },
    /// No negative value found over a finite scan; not a proof for
    /// unbounded supports without a tail certificate.
    NotBeneficialWithinHorizon {
        horizon: u64,
        min_s: f64,
    },
    /// Geometric: every non-preemptive policy leaves the mean unchanged.
    Neutral,
    /// Infinite mean: any finite-mean non-preemptive restart is beneficial.
    TriviallyBeneficial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertifiedReason {
    LogConcave,
    ConvexOrLinearBounded,
    AllNonNegativeFiniteSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FsaResult {
    /// `(a + 1 - u(a)) / u(a)`
    pub threshold: f64,
    pub mean_u: f64,
    /// true iff `threshold < E[U]`, which forces `S_a < 0`
    pub admits: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvexityClass {
    Convex,
    Linear,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LogShape {
    LogConcave,
    LogConvex,
    GeometricExact,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailClass {
    ConvexTail,
    ConcaveTail,
    LinearTail,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundedVerdict {
    NonNegativeEverywhere,
    FsaDecides,
}

/// The restart sequence of `d` over the truncation window.
pub fn restart_sequence(d: &Pmf, tol: f64) -> Result<RestartSequence, SeqError> {
    RestartSequence::compute(d, tol)
}

/// First Step Analysis: `S_a < 0` iff `(a + 1 - u(a)) / u(a) < E[U]`.
/// Sufficient for beneficial restart, not necessary.
pub fn fsa(d: &Pmf) -> Result<FsaResult, SeqError> {
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(SeqError::InfiniteMean);
    }
    let (a, _) = d.support_bounds();
    let ua = d.pmf_at(a);
    let threshold = match d {
        // (a+1)(b-a+1) - 1 = a(b-a) + b, exact in integers
        Pmf::Uniform { a, b } => (*a as f64 + 1.0) * ((b - a + 1) as f64) - 1.0,
        _ => (a as f64 + 1.0 - ua) / ua,
    };
    Ok(FsaResult {
        threshold,
        mean_u: mean,
        admits: threshold < mean,
    })
}

fn is_geometric_neutral(d: &Pmf) -> bool {
    match d {
        Pmf::Geometric { .. } => true,
        Pmf::NegativeBinomial { r, p } => *p > 0.0 && (*r - 1.0).abs() <= 1e-12,
        Pmf::Explicit { .. } => log_shape(d) == LogShape::GeometricExact,
        _ => false,
    }
}

/// Beneficial-restart verdict. Dispatch order: infinite mean, geometric,
/// negative `S_n`, non-benefit certificate, horizon-bounded report.
pub fn beneficial(d: &Pmf, tol: f64) -> Verdict {
    let mean = d.mean();
    if mean.is_infinite() {
        return Verdict::TriviallyBeneficial;
    }
    if is_geometric_neutral(d) {
        return Verdict::Neutral;
    }
    let seq = match RestartSequence::compute(d, tol) {
        Ok(s) => s,
        Err(_) => unreachable!("finite mean and soft cap cannot fail"),
    };
    let eps = epsilon_sign(mean);
    if let Some((n, s)) = seq.first_negative(eps) {
        return Verdict::Beneficial {
            witness: n + 1,
            s_value: s,
        };
    }
    if log_shape(d) == LogShape::LogConcave {
        return Verdict::NotBeneficialCertified {
            reason: CertifiedReason::LogConcave,
        };
    }
    if d.has_finite_support() {
        // the scan covered the whole support, so non-negativity is proven;
        // name the stronger convexity certificate when it applies
        let reason = match bounded_verdict(d) {
            Ok(BoundedVerdict::NonNegativeEverywhere) => CertifiedReason::ConvexOrLinearBounded,
            _ => CertifiedReason::AllNonNegativeFiniteSupport,
        };
        return Verdict::NotBeneficialCertified { reason };
    }
    Verdict::NotBeneficialWithinHorizon {
        horizon: seq.horizon,
        min_s: seq.min_value(),
    }
}

/// Local convexity of `S` at `n >= 1`:
/// `C_n = ((E[U]+1)/2) (u(n) K - u(n+1))`, classified by the sign of
/// `u(n+1) - K u(n)` within the zero band.
pub fn convexity_at(d: &Pmf, n: u64) -> Result<(f64, ConvexityClass), SeqError> {
    if n < 1 {
        return Err(SeqError::InvalidIndex(
            "convexity_at requires n >= 1".into(),
        ));
    }
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(SeqError::InfiniteMean);
    }
    let k = mean / (mean + 1.0);
    let (un, un1) = (d.pmf_at(n), d.pmf_at(n + 1));
    let c = (mean + 1.0) / 2.0 * (un * k - un1);
    Ok((c, classify_step(un1 - k * un, epsilon_sign(mean))))
}

fn classify_step(diff: f64, eps: f64) -> ConvexityClass {
    if diff > eps {
        ConvexityClass::Concave
    } else if diff < -eps {
        ConvexityClass::Convex
    } else {
        ConvexityClass::Linear
    }
}

/// Log-shape of the PMF: analytic monotonicity of `r_n = u(n+1)/u(n)` for
/// the parametric families, a windowed ratio check for explicit tables.
pub fn log_shape(d: &Pmf) -> LogShape {
    match d {
        Pmf::Deterministic { .. } => LogShape::LogConcave,
        Pmf::Geometric { .. } => LogShape::GeometricExact,
        // constant ratio on the support {1, 2, ...}
        Pmf::ShiftedGeometric { .. } => LogShape::LogConcave,
        Pmf::TwoPoint { n1, n2, .. } => {
            if *n2 == *n1 + 1 {
                LogShape::LogConcave
            } else {
                LogShape::Neither // internal zeros
            }
        }
        Pmf::Uniform { .. } => LogShape::LogConcave,
        Pmf::Binomial { .. } => LogShape::LogConcave,
        Pmf::Poisson { .. } => LogShape::LogConcave,
        Pmf::Zeta { .. } => LogShape::LogConvex,
        Pmf::NegativeBinomial { r, p } => {
            if *p == 0.0 {
                LogShape::LogConcave // point mass at 0
            } else if (*r - 1.0).abs() <= 1e-12 {
                LogShape::GeometricExact
            } else if *r > 1.0 {
                LogShape::LogConcave
            } else {
                LogShape::LogConvex
            }
        }
        Pmf::Explicit { offset, probs } => explicit_log_shape(*offset, probs),
    }
}

fn explicit_log_shape(offset: u64, probs: &[f64]) -> LogShape {
    if probs.len() == 1 {
        return LogShape::LogConcave;
    }
    if probs.contains(&0.0) {
        // offsets are tight, so any zero is internal
        return LogShape::Neither;
    }
    let ratios: Vec<f64> = probs.windows(2).map(|w| w[1] / w[0]).collect();
    let r0 = ratios[0];
    let constant = ratios.iter().all(|r| (r - r0).abs() <= 1e-12 * r0.max(1.0));
    if constant && offset == 0 && r0 < 1.0 && (probs[0] - (1.0 - r0)).abs() <= 1e-9 {
        // consistent with Geom(1 - r0) truncated at a negligible tail
        return LogShape::GeometricExact;
    }
    let mut concave = true;
    let mut convex = true;
    for i in 1..probs.len() - 1 {
        let sq = probs[i] * probs[i];
        let prod = probs[i - 1] * probs[i + 1];
        let band = 1e-12 * sq.max(prod);
        if sq < prod - band {
            concave = false;
        }
        if sq > prod + band {
            convex = false;
        }
    }
    match (concave, convex) {
        (true, _) => LogShape::LogConcave,
        (false, true) => LogShape::LogConvex,
        (false, false) => LogShape::Neither,
    }
}

/// Tail classification: index `M` past which the sign of
/// `d_n = u(n+1) - K u(n)` is constant, and the resulting class. A concave
/// tail means every sharp restart after `M` is beneficial.
pub fn tail_class(d: &Pmf, _tol: f64) -> Result<(Option<u64>, TailClass), SeqError> {
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(SeqError::InfiniteMean);
    }
    if let (_, Some(b)) = d.support_bounds() {
        // S_n = 0 exactly beyond the support
        return Ok((Some(b), TailClass::LinearTail));
    }
    let k = mean / (mean + 1.0);
    let class = match d {
        Pmf::Geometric { .. } => return Ok((Some(0), TailClass::LinearTail)),
        Pmf::ShiftedGeometric { .. } => return Ok((Some(1), TailClass::ConvexTail)),
        Pmf::Poisson { .. } => TailClass::ConvexTail,
        Pmf::Zeta { .. } => TailClass::ConcaveTail,
        Pmf::NegativeBinomial { r, .. } => {
            if (*r - 1.0).abs() <= 1e-12 {
                return Ok((Some(0), TailClass::LinearTail));
            } else if *r > 1.0 {
                TailClass::ConvexTail
            } else {
                TailClass::ConcaveTail
            }
        }
        _ => return Ok((None, TailClass::Undetermined)),
    };
    // monotone r_n: M is the first index where the limiting sign holds
    let want_concave = class == TailClass::ConcaveTail;
    let mut n = 0u64;
    loop {
        let (un, un1) = (d.pmf_at(n), d.pmf_at(n + 1));
        let diff = un1 - k * un;
        let matches = if want_concave { diff > 0.0 } else { diff < 0.0 };
        if matches {
            return Ok((Some(n), class));
        }
        n += 1;
        if n > HORIZON_CAP {
            return Ok((None, TailClass::Undetermined));
        }
    }
}

/// The finite-support dichotomy: with a constant convexity class, either
/// `S` is non-negative everywhere (convex/linear) or FSA alone decides
/// (concave).
pub fn bounded_verdict(d: &Pmf) -> Result<BoundedVerdict, SeqError> {
    let (a, b) = d.support_bounds();
    let b = b.ok_or_else(|| SeqError::NotApplicable("support is unbounded".into()))?;
    if a == b {
        // single-point support: trivially constant class, FSA rejects
        return Ok(BoundedVerdict::FsaDecides);
    }
    let mean = d.mean();
    let k = mean / (mean + 1.0);
    let eps = epsilon_sign(mean);
    let mut saw_concave = false;
    let mut saw_convex = false;
    for n in a..b {
        match classify_step(d.pmf_at(n + 1) - k * d.pmf_at(n), eps) {
            ConvexityClass::Concave => saw_concave = true,
            ConvexityClass::Convex => saw_convex = true,
            ConvexityClass::Linear => {}
        }
    }
    if saw_concave && saw_convex {
        return Err(SeqError::NotApplicable(
            "convexity class is mixed on the support".into(),
        ));
    }
    if saw_concave {
        Ok(BoundedVerdict::FsaDecides)
    } else {
        Ok(BoundedVerdict::NonNegativeEverywhere)
    }
}
