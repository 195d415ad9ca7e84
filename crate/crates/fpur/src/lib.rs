//! Analysis of first-passage times under restart.
//!
//! Given the distribution of a discrete completion time `U`, this crate
//! decides whether restarting the process can reduce the mean hitting time,
//! and by how much:
//!
//! - [`dist`] — distribution specs (explicit tables and standard families)
//!   with exact PMF/CMF/mean/quantile/sampling.
//! - [`restart_seq`] — the diagnostic partial-sum sequence whose negativity
//!   at any index is equivalent to the existence of a beneficial restart,
//!   plus analytic certificates (log-shape, convexity, first-step test).
//! - [`hitting`] — exact mean hitting times under sharp, distributional, or
//!   no restart; an optimizer for the best sharp restart time; a seeded,
//!   reproducible Monte Carlo simulator.
//! - [`perturb`] — support gaps and delays: transformed distributions,
//!   closed-form transformed sequences, and benefit-preservation thresholds.
//! - [`reconstruct`] — inverting the sequence map back to a distribution
//!   for a chosen mean.
//! - [`report`] — deterministic structured-text rendering for the CLI.

mod kahan;
mod special;

pub mod dist;
pub mod hitting;
pub mod perturb;
pub mod reconstruct;
pub mod report;
pub mod restart_seq;
