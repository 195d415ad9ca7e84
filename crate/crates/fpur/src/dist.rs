//! Discrete distributions on the non-negative integers.
//!
//! A [`Pmf`] is either an explicit finite table or a parametric family with
//! analytic accessors for the mass function `u(n)`, the cumulative mass
//! function `U(n)` (with the convention `U(-1) = 0`), the mean, and support
//! bounds. Infinite supports are handled through [`Pmf::truncate`], which
//! produces a finite window with an explicit tail mass.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::kahan::{kahan_sum, KahanSum};
use crate::special::{zeta, zeta_tail};

/// Hard cap on truncation windows; heavier tails than this must be handled
/// analytically or at a looser tolerance.
pub const HORIZON_CAP: u64 = 1 << 24;

/// Explicit tables whose sum deviates from 1 by more than this are rejected.
pub const EXPLICIT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mean is infinite")]
    InfiniteMean,
    #[error("truncation horizon exceeds cap {cap}")]
    HorizonExceeded { cap: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Pmf {
    Explicit { offset: u64, probs: Vec<f64> },
    Deterministic { n: u64 },
    Geometric { rho: f64 },
    ShiftedGeometric { rho: f64 },
    TwoPoint { w1: f64, n1: u64, n2: u64 },
    Uniform { a: u64, b: u64 },
    Binomial { n: u64, p: f64 },
    Poisson { lambda: f64 },
    Zeta { p: f64 },
    NegativeBinomial { r: f64, p: f64 },
}

/// Finite window onto a distribution: probabilities for `offset..=n_max`
/// plus the mass beyond the window.
#[derive(Debug, Clone)]
pub struct TruncatedView {
    pub offset: u64,
    pub probs: Vec<f64>,
    pub tail_mass: f64,
    pub n_max: u64,
}

impl TruncatedView {
    /// `u(n)` within the window, 0 before the offset.
    pub fn at(&self, n: u64) -> f64 {
        if n < self.offset {
            return 0.0;
        }
        self.probs
            .get((n - self.offset) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn to_explicit(&self) -> Result<Pmf, DistError> {
        Pmf::explicit(self.offset, self.probs.clone())
    }
}

impl Pmf {
    /// Build an explicit table, normalizing away sub-1e-9 rounding in the
    /// input and rejecting anything worse.
    pub fn explicit(offset: u64, probs: Vec<f64>) -> Result<Pmf, DistError> {
        let d = Pmf::Explicit { offset, probs };
        d.validated()
    }

    pub fn geometric(rho: f64) -> Result<Pmf, DistError> {
        Pmf::Geometric { rho }.validated()
    }

    pub fn shifted_geometric(rho: f64) -> Result<Pmf, DistError> {
        Pmf::ShiftedGeometric { rho }.validated()
    }

    pub fn two_point(w1: f64, n1: u64, n2: u64) -> Result<Pmf, DistError> {
        Pmf::TwoPoint { w1, n1, n2 }.validated()
    }

    pub fn uniform(a: u64, b: u64) -> Result<Pmf, DistError> {
        Pmf::Uniform { a, b }.validated()
    }

    pub fn binomial(n: u64, p: f64) -> Result<Pmf, DistError> {
        Pmf::Binomial { n, p }.validated()
    }

    pub fn poisson(lambda: f64) -> Result<Pmf, DistError> {
        Pmf::Poisson { lambda }.validated()
    }

    pub fn zeta_dist(p: f64) -> Result<Pmf, DistError> {
        Pmf::Zeta { p }.validated()
    }

    pub fn negative_binomial(r: f64, p: f64) -> Result<Pmf, DistError> {
        Pmf::NegativeBinomial { r, p }.validated()
    }

    /// Check parameter constraints, returning a (possibly normalized) valid
    /// distribution. Deserialized specs must pass through here.
    pub fn validated(self) -> Result<Pmf, DistError> {
        let err = |m: &str| Err(DistError::InvalidParameter(m.to_string()));
        match self {
            Pmf::Explicit { offset, probs } => {
                if probs.is_empty() {
                    return err("explicit: empty probability table");
                }
                if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
                    return err("explicit: probabilities must be finite and non-negative");
                }
                if probs[0] <= 0.0 || *probs.last().unwrap() <= 0.0 {
                    return err("explicit: first and last entries must be positive (tight offset)");
                }
                let sum = kahan_sum(&probs);
                let dev = (sum - 1.0).abs();
                if dev > EXPLICIT_SUM_TOL {
                    return err("explicit: probabilities must sum to 1 within 1e-9");
                }
                // leave sub-1e-12 rounding alone so truncation windows
                // round-trip bit-exactly
                let probs = if dev > 1e-12 {
                    probs.iter().map(|p| p / sum).collect()
                } else {
                    probs
                };
                Ok(Pmf::Explicit { offset, probs })
            }
            Pmf::Deterministic { .. } => Ok(self),
            Pmf::Geometric { rho } | Pmf::ShiftedGeometric { rho } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return err("geometric: rho must lie in (0,1)");
                }
                Ok(self)
            }
            Pmf::TwoPoint { w1, n1, n2 } => {
                if !(w1 > 0.0 && w1 < 1.0) {
                    return err("two_point: w1 must lie in (0,1)");
                }
                if n2 <= n1 {
                    return err("two_point: requires n2 > n1");
                }
                Ok(self)
            }
            Pmf::Uniform { a, b } => {
                if b < a {
                    return err("uniform: requires a <= b");
                }
                Ok(self)
            }
            Pmf::Binomial { n, p } => {
                if n < 1 {
                    return err("binomial: n must be >= 1");
                }
                if !(0.0..=1.0).contains(&p) {
                    return err("binomial: p must lie in [0,1]");
                }
                Ok(self)
            }
            Pmf::Poisson { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return err("poisson: lambda must be positive");
                }
                Ok(self)
            }
            Pmf::Zeta { p } => {
                if !(p > 1.0 && p.is_finite()) {
                    return err("zeta: p must be > 1");
                }
                Ok(self)
            }
            Pmf::NegativeBinomial { r, p } => {
                if !(r > 0.0 && r.is_finite()) {
                    return err("negative_binomial: r must be positive");
                }
                if !(0.0..1.0).contains(&p) {
                    return err("negative_binomial: p must lie in [0,1)");
                }
                Ok(self)
            }
        }
    }

    /// `u(n)`; 0 outside the support.
    pub fn pmf_at(&self, n: u64) -> f64 {
        match self {
            Pmf::Zeta { p } => zeta_pmf(n, *p, zeta(*p)),
            _ => self.pmf_no_norm(n),
        }
    }

    // pmf for every family that needs no cached normalizing constant
    fn pmf_no_norm(&self, n: u64) -> f64 {
        match *self {
            Pmf::Explicit { offset, ref probs } => {
                if n < offset {
                    0.0
                } else {
                    probs.get((n - offset) as usize).copied().unwrap_or(0.0)
                }
            }
            Pmf::Deterministic { n: point } => {
                if n == point {
                    1.0
                } else {
                    0.0
                }
            }
            Pmf::Geometric { rho } => rho * (1.0 - rho).powi(n as i32),
            Pmf::ShiftedGeometric { rho } => {
                if n == 0 {
                    0.0
                } else {
                    rho * (1.0 - rho).powi((n - 1) as i32)
                }
            }
            Pmf::TwoPoint { w1, n1, n2 } => {
                if n == n1 {
                    w1
                } else if n == n2 {
                    1.0 - w1
                } else {
                    0.0
                }
            }
            Pmf::Uniform { a, b } => {
                if n >= a && n <= b {
                    1.0 / (b - a + 1) as f64
                } else {
                    0.0
                }
            }
            Pmf::Binomial { n: trials, p } => {
                if n > trials {
                    return 0.0;
                }
                if p == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                if p == 1.0 {
                    return if n == trials { 1.0 } else { 0.0 };
                }
                let (nf, kf) = (trials as f64, n as f64);
                let ln_choose = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
                (ln_choose + kf * p.ln() + (nf - kf) * (1.0 - p).ln()).exp()
            }
            Pmf::Poisson { lambda } => {
                let nf = n as f64;
                (nf * lambda.ln() - lambda - ln_gamma(nf + 1.0)).exp()
            }
            Pmf::Zeta { .. } => unreachable!("handled with cached norm"),
            Pmf::NegativeBinomial { r, p } => {
                if p == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                let nf = n as f64;
                // generalized binomial coefficient via log-gamma: real r
                // must not overflow the factorial route
                let ln_coef = ln_gamma(nf + r) - ln_gamma(r) - ln_gamma(nf + 1.0);
                (ln_coef + nf * p.ln() + r * (1.0 - p).ln()).exp()
            }
        }
    }

    /// `U(n)` with the convention `U(-1) = 0`. Closed form where the family
    /// admits one, compensated cumulative summation otherwise.
    pub fn cmf_at(&self, n: i64) -> f64 {
        if n < 0 {
            return 0.0;
        }
        let n = n as u64;
        match *self {
            Pmf::Deterministic { n: point } => {
                if n >= point {
                    1.0
                } else {
                    0.0
                }
            }
            Pmf::Geometric { rho } => 1.0 - (1.0 - rho).powi(n as i32 + 1),
            Pmf::ShiftedGeometric { rho } => 1.0 - (1.0 - rho).powi(n as i32),
            Pmf::TwoPoint { w1, n1, n2 } => {
                if n >= n2 {
                    1.0
                } else if n >= n1 {
                    w1
                } else {
                    0.0
                }
            }
            Pmf::Uniform { a, b } => {
                if n < a {
                    0.0
                } else if n >= b {
                    1.0
                } else {
                    (n - a + 1) as f64 / (b - a + 1) as f64
                }
            }
            Pmf::Zeta { p } => (1.0 - zeta_tail(p, n + 2) / zeta(p)).clamp(0.0, 1.0),
            _ => {
                let mut cum = KahanSum::new();
                let mut it = self.pmf_iter();
                for _ in 0..=n {
                    match it.next() {
                        Some(u) => cum.add(u),
                        None => break,
                    }
                }
                cum.value().min(1.0)
            }
        }
    }

    /// `1 - U(n)`; sharper than `1 - cmf_at(n)` for families with a
    /// closed-form survival.
    pub fn survival(&self, n: i64) -> f64 {
        if n < 0 {
            return 1.0;
        }
        match *self {
            Pmf::Geometric { rho } => (1.0 - rho).powi(n as i32 + 1),
            Pmf::ShiftedGeometric { rho } => (1.0 - rho).powi(n as i32),
            Pmf::Zeta { p } => (zeta_tail(p, n as u64 + 2) / zeta(p)).clamp(0.0, 1.0),
            _ => (1.0 - self.cmf_at(n)).max(0.0),
        }
    }

    /// Mean hitting time `E[U]`; `f64::INFINITY` for divergent families.
    pub fn mean(&self) -> f64 {
        match *self {
            Pmf::Explicit { offset, ref probs } => {
                let mut m = KahanSum::new();
                for (i, &p) in probs.iter().enumerate() {
                    m.add((offset + i as u64) as f64 * p);
                }
                m.value()
            }
            Pmf::Deterministic { n } => n as f64,
            Pmf::Geometric { rho } => (1.0 - rho) / rho,
            Pmf::ShiftedGeometric { rho } => 1.0 / rho,
            Pmf::TwoPoint { w1, n1, n2 } => w1 * n1 as f64 + (1.0 - w1) * n2 as f64,
            Pmf::Uniform { a, b } => (a + b) as f64 / 2.0,
            Pmf::Binomial { n, p } => n as f64 * p,
            Pmf::Poisson { lambda } => lambda,
            Pmf::Zeta { p } => {
                if p <= 2.0 {
                    f64::INFINITY
                } else {
                    zeta(p - 1.0) / zeta(p) - 1.0
                }
            }
            Pmf::NegativeBinomial { r, p } => p * r / (1.0 - p),
        }
    }

    /// `(a, b)`: least support point and greatest when it exists.
    pub fn support_bounds(&self) -> (u64, Option<u64>) {
        match *self {
            Pmf::Explicit { offset, ref probs } => (offset, Some(offset + probs.len() as u64 - 1)),
            Pmf::Deterministic { n } => (n, Some(n)),
            Pmf::Geometric { .. } => (0, None),
            Pmf::ShiftedGeometric { .. } => (1, None),
            Pmf::TwoPoint { n1, n2, .. } => (n1, Some(n2)),
            Pmf::Uniform { a, b } => (a, Some(b)),
            Pmf::Binomial { n, p } => {
                if p == 0.0 {
                    (0, Some(0))
                } else if p == 1.0 {
                    (n, Some(n))
                } else {
                    (0, Some(n))
                }
            }
            Pmf::Poisson { .. } | Pmf::Zeta { .. } => (0, None),
            Pmf::NegativeBinomial { p, .. } => {
                if p == 0.0 {
                    (0, Some(0))
                } else {
                    (0, None)
                }
            }
        }
    }

    pub fn has_finite_support(&self) -> bool {
        self.support_bounds().1.is_some()
    }

    /// Iterator over `u(0), u(1), ...`, caching the zeta normalizing
    /// constant so windows agree bit-exactly with `pmf_at`.
    pub(crate) fn pmf_iter(&self) -> PmfIter<'_> {
        let norm = match self {
            Pmf::Zeta { p } => zeta(*p),
            _ => 0.0,
        };
        PmfIter {
            d: self,
            n: 0,
            norm,
        }
    }

    /// Finite window with tail mass at most `tol`.
    pub fn truncate(&self, tol: f64) -> Result<TruncatedView, DistError> {
        self.truncate_capped(tol, HORIZON_CAP)
    }

    /// Like [`Pmf::truncate`] but with an explicit cap on the window length;
    /// a capped window may carry more tail mass than `tol`.
    pub fn truncate_capped(&self, tol: f64, cap: u64) -> Result<TruncatedView, DistError> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(DistError::InvalidParameter(
                "truncation tolerance must lie in (0,1)".into(),
            ));
        }
        if self.mean().is_infinite() {
            return Err(DistError::InfiniteMean);
        }
        let (a, b) = self.support_bounds();
        if let Some(b) = b {
            let probs: Vec<f64> = self
                .pmf_iter()
                .skip(a as usize)
                .take((b - a + 1) as usize)
                .collect();
            return Ok(TruncatedView {
                offset: a,
                probs,
                tail_mass: 0.0,
                n_max: b,
            });
        }
        let mut cum = KahanSum::new();
        let mut probs = Vec::new();
        for (n, u) in (0u64..).zip(self.pmf_iter()) {
            if n >= a {
                probs.push(u);
            }
            cum.add(u);
            let tail = 1.0 - cum.value();
            if tail <= tol {
                return Ok(TruncatedView {
                    offset: a,
                    probs,
                    tail_mass: tail.max(0.0),
                    n_max: n,
                });
            }
            if n >= cap {
                return Err(DistError::HorizonExceeded { cap });
            }
        }
        unreachable!("pmf_iter is unbounded");
    }

    /// Inverse-CMF draw: the smallest `n` with `U(n) > x` for a uniform `x`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let x: f64 = rng.gen();
        self.quantile(x)
    }

    /// Smallest `n` with `U(n) > x`.
    pub fn quantile(&self, x: f64) -> u64 {
        match *self {
            Pmf::Deterministic { n } => n,
            Pmf::TwoPoint { w1, n1, n2 } => {
                if x < w1 {
                    n1
                } else {
                    n2
                }
            }
            Pmf::Uniform { a, b } => {
                let c = (b - a + 1) as f64;
                a + ((x * c) as u64).min(b - a)
            }
            _ => {
                let mut cum = KahanSum::new();
                for (n, u) in self.pmf_iter().enumerate() {
                    cum.add(u);
                    if cum.value() > x {
                        return n as u64;
                    }
                }
                unreachable!("pmf_iter is unbounded")
            }
        }
    }
}

pub(crate) struct PmfIter<'a> {
    d: &'a Pmf,
    n: u64,
    norm: f64,
}

impl Iterator for PmfIter<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let n = self.n;
        if let (_, Some(b)) = self.d.support_bounds() {
            if n > b {
                return None;
            }
        }
        self.n += 1;
        Some(match self.d {
            Pmf::Zeta { p } => zeta_pmf(n, *p, self.norm),
            d => d.pmf_no_norm(n),
        })
    }
}

fn zeta_pmf(n: u64, p: f64, norm: f64) -> f64 {
    ((n + 1) as f64).powf(-p).min(f64::MAX) / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ZETA3: f64 = 1.2020569031595943;
    const ZETA2: f64 = 1.6449340668482264;

    #[test]
    fn pmf_values() {
        let g = Pmf::geometric(0.5).unwrap();
        assert_eq!(g.pmf_at(2), 0.125);
        let d = Pmf::Deterministic { n: 3 };
        assert_eq!(d.pmf_at(3), 1.0);
        assert_eq!(d.pmf_at(2), 0.0);
        let z = Pmf::zeta_dist(3.0).unwrap();
        assert!((z.pmf_at(0) - 1.0 / ZETA3).abs() < 1e-12);
    }

    #[test]
    fn cmf_values() {
        let g = Pmf::geometric(0.5).unwrap();
        assert_eq!(g.cmf_at(1), 0.75);
        assert_eq!(g.cmf_at(-1), 0.0);
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        assert_eq!(tp.cmf_at(3), 0.5);
        let po = Pmf::poisson(2.0).unwrap();
        assert_eq!(po.cmf_at(-1), 0.0);
    }

    #[test]
    fn means() {
        assert_eq!(Pmf::geometric(0.5).unwrap().mean(), 1.0);
        let z = Pmf::zeta_dist(3.0).unwrap();
        assert!((z.mean() - (ZETA2 / ZETA3 - 1.0)).abs() < 1e-12);
        assert!(Pmf::zeta_dist(1.5).unwrap().mean().is_infinite());
        let nb = Pmf::negative_binomial(2.0, 0.25).unwrap();
        assert!((nb.mean() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn support_bounds() {
        assert_eq!(Pmf::uniform(2, 5).unwrap().support_bounds(), (2, Some(5)));
        assert_eq!(Pmf::poisson(2.0).unwrap().support_bounds(), (0, None));
        assert_eq!(
            Pmf::shifted_geometric(0.3).unwrap().support_bounds(),
            (1, None)
        );
    }

    #[test]
    fn truncation() {
        let d = Pmf::Deterministic { n: 3 };
        let v = d.truncate(1e-12).unwrap();
        assert_eq!(
            (v.offset, v.probs.as_slice(), v.tail_mass),
            (3, &[1.0][..], 0.0)
        );

        let g = Pmf::geometric(0.5).unwrap();
        let v = g.truncate(1e-3).unwrap();
        assert_eq!(v.n_max, 9);
        assert!(v.tail_mass <= 1e-3);

        assert_eq!(
            Pmf::zeta_dist(1.5).unwrap().truncate(1e-3).map(|v| v.n_max),
            Err(DistError::InfiniteMean)
        );
    }

    #[test]
    fn quantiles() {
        let g = Pmf::geometric(0.5).unwrap();
        assert_eq!(g.quantile(0.6), 1);
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        assert_eq!(tp.quantile(0.7), 6);
        assert_eq!(Pmf::Deterministic { n: 3 }.quantile(0.9), 3);
    }

    #[test]
    fn construction_errors() {
        assert!(Pmf::geometric(1.0).is_err());
        assert!(Pmf::two_point(0.5, 4, 4).is_err());
        assert!(Pmf::explicit(0, vec![0.5, 0.4]).is_err());
        assert!(Pmf::explicit(0, vec![0.0, 1.0]).is_err());
        assert!(Pmf::negative_binomial(0.0, 0.5).is_err());
        // benign rounding is normalized away
        let d = Pmf::explicit(0, vec![0.5 + 2e-10, 0.5]).unwrap();
        if let Pmf::Explicit { probs, .. } = &d {
            assert!((kahan_sum(probs) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pmf_sums_to_cmf() {
        let fixtures = [
            Pmf::geometric(0.3).unwrap(),
            Pmf::shifted_geometric(0.5).unwrap(),
            Pmf::two_point(0.5, 1, 6).unwrap(),
            Pmf::uniform(0, 4).unwrap(),
            Pmf::binomial(10, 0.3).unwrap(),
            Pmf::poisson(2.0).unwrap(),
            Pmf::zeta_dist(3.0).unwrap(),
            Pmf::negative_binomial(0.5, 0.5).unwrap(),
            Pmf::Deterministic { n: 3 },
        ];
        for d in &fixtures {
            let v = d.truncate(1e-12).unwrap();
            let mut cum = KahanSum::new();
            for n in 0..=v.n_max {
                cum.add(d.pmf_at(n));
                assert!(
                    (d.cmf_at(n as i64) - cum.value()).abs() <= 1e-10,
                    "{d:?} at n={n}"
                );
            }
        }
    }

    #[test]
    fn survival_sum_approximates_mean() {
        let fixtures = [
            Pmf::geometric(0.3).unwrap(),
            Pmf::two_point(0.5, 1, 6).unwrap(),
            Pmf::poisson(2.0).unwrap(),
            Pmf::binomial(10, 0.3).unwrap(),
            Pmf::negative_binomial(2.0, 0.5).unwrap(),
        ];
        for d in &fixtures {
            let v = d.truncate(1e-12).unwrap();
            let mut s = KahanSum::new();
            for n in 0..=v.n_max {
                s.add(d.survival(n as i64));
            }
            assert!((s.value() - d.mean()).abs() <= 1e-8, "{d:?}");
        }
    }

    #[test]
    fn explicit_window_reproduces_pmf() {
        let d = Pmf::geometric(0.4).unwrap();
        let e = d.truncate(1e-12).unwrap().to_explicit().unwrap();
        let (_, b) = e.support_bounds();
        for n in 0..=b.unwrap() {
            assert_eq!(e.pmf_at(n), d.pmf_at(n));
        }
    }

    #[test]
    fn sample_histogram_matches_pmf() {
        let d = Pmf::two_point(0.5, 1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut counts = [0u64; 8];
        for _ in 0..n {
            counts[d.sample(&mut rng) as usize] += 1;
        }
        for (k, &count) in counts.iter().enumerate() {
            let p = d.pmf_at(k as u64);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let got = count as f64 / n as f64;
            assert!((got - p).abs() <= 5.0 * se.max(1e-9), "bin {k}");
        }
    }
}
