//! Mean hitting times under restart policies, the sharp-restart closed form
//! and its sign identity with `S_{N-1}`, the optimal sharp-restart search,
//! and a seeded Monte Carlo simulator of the recursive hitting-time
//! definition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, Pmf};
use crate::kahan::KahanSum;
use crate::restart_seq::{epsilon_sign, restart_sequence, SeqError};

/// Iteration cap per replicate; converts near-preemptive policies into a
/// diagnosable error instead of a hang.
pub const RESTART_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum HitError {
    #[error("preemptive restart: the process never completes")]
    Preemptive,
    #[error("mean is infinite")]
    InfiniteMean,
    #[error("degenerate policy: restart time identically zero")]
    DegenerateZeroRestart,
    #[error("replicate {replicate} exceeded the restart cap of {cap} iterations")]
    RestartCapExceeded { replicate: u64, cap: u64 },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum RestartPolicy {
    /// Deterministic restart at a fixed time `N >= 1`.
    Sharp {
        n: u64,
    },
    /// Restart time drawn fresh from `r` on every foray.
    Distributional {
        r: Pmf,
    },
    NoRestart,
}

impl RestartPolicy {
    pub fn sharp(n: u64) -> Result<Self, HitError> {
        if n < 1 {
            return Err(HitError::Dist(DistError::InvalidParameter(
                "sharp restart time must be >= 1".into(),
            )));
        }
        Ok(RestartPolicy::Sharp { n })
    }

    pub fn distributional(r: Pmf) -> Result<Self, HitError> {
        let r = r.validated()?;
        if r.pmf_at(0) >= 1.0 {
            return Err(HitError::DegenerateZeroRestart);
        }
        Ok(RestartPolicy::Distributional { r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingTimeResult {
    /// `E[T] = E[U ∧ R] / (1 - p_r)`
    pub e_t: f64,
    /// `p_r = P(R <= U)`
    pub p_r: f64,
    /// `E[U ∧ R]`
    pub e_min: f64,
    /// `E[T] - E[U]`; negative means the restart is beneficial
    pub benefit_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub replicates: u64,
    pub seed: u64,
    pub mean_estimate: f64,
    pub std_error: f64,
    pub restarts_per_run_mean: f64,
}

const SUM_TOL: f64 = 1e-16;

/// `p_r = P(R <= U)`: the probability a foray restarts at or before
/// completion (ties restart).
pub fn p_restart(d: &Pmf, pol: &RestartPolicy) -> f64 {
    match pol {
        RestartPolicy::NoRestart => 0.0,
        // sharp N fires iff U >= N, i.e. with probability 1 - U(N-1)
        RestartPolicy::Sharp { n } => d.survival(*n as i64 - 1),
        RestartPolicy::Distributional { r } => {
            let mut sum = KahanSum::new();
            let (_, r_bound) = r.support_bounds();
            for (n, rp) in r.pmf_iter().enumerate() {
                let term = rp * d.survival(n as i64 - 1);
                sum.add(term);
                if r_bound.is_none() && n > 0 && r.survival(n as i64) < SUM_TOL {
                    break;
                }
            }
            sum.value().min(1.0)
        }
    }
}

/// `E[U ∧ R] = Σ (1 - U(n)) (1 - R(n))`.
pub fn mean_min(d: &Pmf, pol: &RestartPolicy) -> f64 {
    match pol {
        RestartPolicy::NoRestart => d.mean(),
        RestartPolicy::Sharp { n } => {
            let mut sum = KahanSum::new();
            for k in 0..*n {
                sum.add(d.survival(k as i64));
            }
            sum.value()
        }
        RestartPolicy::Distributional { r } => {
            let mut sum = KahanSum::new();
            let mut n = 0i64;
            loop {
                let term = d.survival(n) * r.survival(n);
                sum.add(term);
                if term < SUM_TOL * (1.0 + sum.value()) && n as u64 > 0 {
                    break;
                }
                if n as u64 >= crate::dist::HORIZON_CAP {
                    break;
                }
                n += 1;
            }
            sum.value()
        }
    }
}

/// Exact mean hitting time under a restart policy.
pub fn mean_hitting_time(d: &Pmf, pol: &RestartPolicy) -> Result<HittingTimeResult, HitError> {
    if let RestartPolicy::Distributional { r } = pol {
        if r.pmf_at(0) >= 1.0 {
            return Err(HitError::DegenerateZeroRestart);
        }
    }
    let mean_u = d.mean();
    if mean_u.is_infinite() {
        let policy_mean = match pol {
            RestartPolicy::Sharp { n } => *n as f64,
            RestartPolicy::Distributional { r } => r.mean(),
            RestartPolicy::NoRestart => f64::INFINITY,
        };
        if policy_mean.is_infinite() {
            return Err(HitError::InfiniteMean);
        }
    }
    let p_r = p_restart(d, pol);
    let eps = if mean_u.is_finite() {
        epsilon_sign(mean_u)
    } else {
        1e-10
    };
    if p_r >= 1.0 - eps {
        return Err(HitError::Preemptive);
    }
    let e_min = mean_min(d, pol);
    let e_t = e_min / (1.0 - p_r);
    let benefit_gap = if mean_u.is_finite() {
        e_t - mean_u
    } else {
        f64::NEG_INFINITY
    };
    Ok(HittingTimeResult {
        e_t,
        p_r,
        e_min,
        benefit_gap,
    })
}

/// `E[T_N] - E[U] = S_{N-1} / U(N-1)` for sharp restart at `N`.
pub fn benefit_gap_identity(d: &Pmf, n: u64) -> Result<f64, HitError> {
    if n < 1 {
        return Err(HitError::Seq(SeqError::InvalidIndex(
            "sharp restart time must be >= 1".into(),
        )));
    }
    let u_nm1 = d.cmf_at(n as i64 - 1);
    if u_nm1 <= 0.0 {
        return Err(HitError::Preemptive);
    }
    let seq = restart_sequence(d, 1e-12)?;
    Ok(seq.at(n - 1) / u_nm1)
}

/// Exhaustive scan for the sharp restart time minimizing `E[T_N]`.
/// Returns `None` when no non-preemptive `N` beats `E[U]`.
pub fn optimize_sharp(d: &Pmf, n_max: Option<u64>) -> Result<Option<(u64, f64)>, HitError> {
    let mean = d.mean();
    if mean.is_infinite() {
        return Err(HitError::InfiniteMean);
    }
    let n_max = match n_max {
        Some(n) => n,
        None => {
            let view = d.truncate_capped(1e-12, crate::restart_seq::SEQ_CAP);
            match view {
                Ok(v) => v.n_max + 1,
                Err(DistError::HorizonExceeded { cap }) => cap,
                Err(e) => return Err(HitError::Dist(e)),
            }
        }
    };
    let eps = epsilon_sign(mean);
    // O(1) incremental updates: running CMF and survival sum
    let mut cum = KahanSum::new();
    let mut acc = KahanSum::new(); // E[U ∧ N] = Σ_{k<N} (1 - U(k))
    let mut it = d.pmf_iter();
    let mut best: Option<(u64, f64)> = None;
    for n in 1..=n_max {
        cum.add(it.next().unwrap_or(0.0)); // now U(n-1)
        let u_nm1 = cum.value().min(1.0);
        acc.add((1.0 - u_nm1).max(0.0));
        if u_nm1 <= eps {
            continue; // preemptive
        }
        let e_t = acc.value() / u_nm1;
        if best.is_none_or(|(_, b)| e_t < b) {
            best = Some((n, e_t));
        }
    }
    Ok(best.filter(|&(_, e_t)| e_t < mean - eps))
}

/// Monte Carlo simulation of the recursive hitting-time definition.
/// Replicate `i` draws from an independent stream derived from `(seed, i)`,
/// so the result is bitwise reproducible regardless of scheduling.
pub fn simulate(
    d: &Pmf,
    pol: &RestartPolicy,
    replicates: u64,
    seed: u64,
) -> Result<SimulationResult, HitError> {
    if let RestartPolicy::Distributional { r } = pol {
        if r.pmf_at(0) >= 1.0 {
            return Err(HitError::DegenerateZeroRestart);
        }
    }
    let runs: Result<Vec<(f64, u64)>, HitError> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            run_replicate(d, pol, &mut rng).ok_or(HitError::RestartCapExceeded {
                replicate: i,
                cap: RESTART_CAP,
            })
        })
        .collect();
    let runs = runs?;

    let n = replicates as f64;
    let mut total = KahanSum::new();
    let mut restarts = KahanSum::new();
    for &(t, r) in &runs {
        total.add(t);
        restarts.add(r as f64);
    }
    let mean = total.value() / n;
    let mut sq = KahanSum::new();
    for &(t, _) in &runs {
        sq.add((t - mean) * (t - mean));
    }
    let std_error = if replicates > 1 {
        (sq.value() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(SimulationResult {
        replicates,
        seed,
        mean_estimate: mean,
        std_error,
        restarts_per_run_mean: restarts.value() / n,
    })
}

fn run_replicate<R: Rng>(d: &Pmf, pol: &RestartPolicy, rng: &mut R) -> Option<(f64, u64)> {
    let mut total = 0.0f64;
    for restarts in 0..RESTART_CAP {
        let u = d.sample(rng);
        let r = match pol {
            RestartPolicy::NoRestart => return Some((total + u as f64, restarts)),
            RestartPolicy::Sharp { n } => *n,
            RestartPolicy::Distributional { r } => r.sample(rng),
        };
        if r > u {
            return Some((total + u as f64, restarts));
        }
        // R <= U: restart fires, same tie convention as p_restart
        total += r as f64;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sharp(n: u64) -> RestartPolicy {
        RestartPolicy::sharp(n).unwrap()
    }

    #[test]
    fn p_restart_values() {
        let g = Pmf::geometric(0.5).unwrap();
        assert!((p_restart(&g, &sharp(2)) - 0.25).abs() < 1e-15);
        let d = Pmf::Deterministic { n: 3 };
        assert_eq!(p_restart(&d, &sharp(2)), 1.0);
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        assert!((p_restart(&tp, &sharp(2)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mean_min_values() {
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        assert!((mean_min(&tp, &sharp(2)) - 1.5).abs() < 1e-12);
        let g = Pmf::geometric(0.5).unwrap();
        assert!((mean_min(&g, &sharp(1)) - 0.5).abs() < 1e-15);
        let d = Pmf::Deterministic { n: 3 };
        assert_eq!(mean_min(&d, &RestartPolicy::NoRestart), 3.0);
    }

    #[test]
    fn hitting_time_values() {
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        let r = mean_hitting_time(&tp, &sharp(2)).unwrap();
        assert!((r.e_t - 3.0).abs() <= 1e-12);
        assert!((r.benefit_gap + 0.5).abs() <= 1e-12);

        for n in 1..=10 {
            let g = Pmf::geometric(0.3).unwrap();
            let r = mean_hitting_time(&g, &sharp(n)).unwrap();
            assert!((r.e_t - g.mean()).abs() <= 1e-9, "N={n}");
        }

        assert_eq!(
            mean_hitting_time(&Pmf::Deterministic { n: 3 }, &sharp(2)),
            Err(HitError::Preemptive)
        );
    }

    #[test]
    fn no_restart_reproduces_mean() {
        for d in [
            Pmf::two_point(0.5, 1, 6).unwrap(),
            Pmf::poisson(2.0).unwrap(),
            Pmf::Deterministic { n: 3 },
        ] {
            let r = mean_hitting_time(&d, &RestartPolicy::NoRestart).unwrap();
            assert!((r.e_t - d.mean()).abs() <= 1e-12);
            assert!(r.benefit_gap.abs() <= 1e-12);
        }
    }

    #[test]
    fn gap_identity() {
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        assert!((benefit_gap_identity(&tp, 2).unwrap() + 0.5).abs() <= 1e-12);
        assert!(
            benefit_gap_identity(&Pmf::geometric(0.5).unwrap(), 3)
                .unwrap()
                .abs()
                <= 1e-10
        );
        assert_eq!(
            benefit_gap_identity(&Pmf::Deterministic { n: 3 }, 4).unwrap(),
            0.0
        );
        assert_eq!(
            benefit_gap_identity(&Pmf::Deterministic { n: 3 }, 2),
            Err(HitError::Preemptive)
        );
    }

    #[test]
    fn gap_matches_direct_route() {
        let fixtures = [
            Pmf::two_point(0.5, 1, 6).unwrap(),
            Pmf::poisson(2.0).unwrap(),
            Pmf::zeta_dist(3.0).unwrap(),
            Pmf::uniform(0, 4).unwrap(),
        ];
        for d in &fixtures {
            let (a, _) = d.support_bounds();
            for n in (a + 1)..=(a + 15) {
                let ident = benefit_gap_identity(d, n).unwrap();
                let direct = mean_hitting_time(d, &sharp(n)).unwrap().benefit_gap;
                let scale = ident.abs().max(direct.abs()).max(1.0);
                assert!((ident - direct).abs() <= 1e-9 * scale, "{d:?} N={n}");
            }
        }
    }

    #[test]
    fn optimal_sharp_restart() {
        let tp = Pmf::two_point(0.5, 1, 6).unwrap();
        let (n, e_t) = optimize_sharp(&tp, None).unwrap().unwrap();
        assert_eq!(n, 2);
        assert!((e_t - 3.0).abs() <= 1e-12);

        assert_eq!(
            optimize_sharp(&Pmf::poisson(2.0).unwrap(), None).unwrap(),
            None
        );

        let z = Pmf::zeta_dist(3.0).unwrap();
        let (_, e_t) = optimize_sharp(&z, Some(1000)).unwrap().unwrap();
        assert!(e_t < z.mean());

        assert_eq!(
            optimize_sharp(&Pmf::zeta_dist(1.5).unwrap(), None),
            Err(HitError::InfiniteMean)
        );
    }

    #[test]
    fn degenerate_zero_restart_rejected() {
        let d = Pmf::geometric(0.5).unwrap();
        let r0 = Pmf::Deterministic { n: 0 };
        assert_eq!(
            mean_hitting_time(&d, &RestartPolicy::Distributional { r: r0.clone() }),
            Err(HitError::DegenerateZeroRestart)
        );
        assert!(RestartPolicy::distributional(r0).is_err());
        // mass at zero below 1 is fine: zero-duration restarts cost nothing
        let r = Pmf::two_point(0.4, 0, 2).unwrap();
        assert!(mean_hitting_time(&d, &RestartPolicy::Distributional { r }).is_ok());
    }

    #[test]
    fn simulation_deterministic() {
        let d = Pmf::two_point(0.5, 1, 6).unwrap();
        let pol = sharp(2);
        let a = simulate(&d, &pol, 20_000, 42).unwrap();
        let b = simulate(&d, &pol, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&d, &pol, 20_000, 43).unwrap();
        assert_ne!(a.mean_estimate, c.mean_estimate);
    }

    #[test]
    fn simulation_exact_deterministic_case() {
        let d = Pmf::Deterministic { n: 3 };
        let r = simulate(&d, &RestartPolicy::NoRestart, 1000, 1).unwrap();
        assert_eq!(r.mean_estimate, 3.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn simulation_matches_analytic() {
        let cases = [
            (Pmf::geometric(0.5).unwrap(), sharp(4)),
            (Pmf::two_point(0.5, 1, 6).unwrap(), sharp(2)),
        ];
        for (d, pol) in &cases {
            let analytic = mean_hitting_time(d, pol).unwrap().e_t;
            let sim = simulate(d, pol, 200_000, 7).unwrap();
            assert!(
                (sim.mean_estimate - analytic).abs() <= 4.0 * sim.std_error,
                "{d:?}: {} vs {analytic}",
                sim.mean_estimate
            );
        }
    }
}
