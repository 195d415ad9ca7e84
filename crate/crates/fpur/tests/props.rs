//! Property suite over randomly generated explicit distributions.

use proptest::prelude::*;

use fpur::dist::Pmf;
use fpur::hitting::{mean_hitting_time, RestartPolicy};
use fpur::perturb::{insert_gap, predicted_gap_sequence, GapSpec};
use fpur::reconstruct::round_trip_error;
use fpur::restart_seq::{beneficial, epsilon_sign, restart_sequence, Verdict};

fn arb_explicit() -> impl Strategy<Value = Pmf> {
    (0u64..4, prop::collection::vec(0.01f64..1.0, 1..8)).prop_map(|(offset, weights)| {
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Pmf::explicit(offset, probs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequence_settles_at_zero_past_the_support(d in arb_explicit()) {
        let seq = restart_sequence(&d, 1e-12).unwrap();
        let last = *seq.values.last().unwrap();
        prop_assert!(last.abs() <= 1e-9, "terminal value {last}");
    }

    #[test]
    fn verdict_agrees_with_exhaustive_hitting_times(d in arb_explicit()) {
        let mean = d.mean();
        let eps = epsilon_sign(mean.max(1e-9));
        let (_, b) = d.support_bounds();
        let b = b.unwrap();
        let best = (1..=b + 1)
            .filter_map(|n| mean_hitting_time(&d, &RestartPolicy::Sharp { n }).ok())
            .map(|r| r.e_t)
            .fold(f64::INFINITY, f64::min);
        match beneficial(&d, 1e-12) {
            Verdict::Beneficial { witness, .. } => {
                let r = mean_hitting_time(&d, &RestartPolicy::Sharp { n: witness }).unwrap();
                prop_assert!(r.e_t < mean - eps, "witness {witness}: {} vs {mean}", r.e_t);
            }
            Verdict::Neutral => prop_assert!((best - mean).abs() <= 1e-9),
            Verdict::TriviallyBeneficial => prop_assert!(false, "finite support"),
            _ => prop_assert!(best >= mean - 1e-9, "best {best} vs mean {mean}"),
        }
    }

    #[test]
    fn reconstruction_round_trips(d in arb_explicit()) {
        // degenerate point mass at 0 has mean 0 and no valid reconstruction
        prop_assume!(d.mean() > 1e-6);
        let err = round_trip_error(&d, 1e-12).unwrap();
        prop_assert!(err <= 1e-8, "round trip error {err}");
    }

    #[test]
    fn gap_closed_form_matches_composition(
        d in arb_explicit(),
        m in 0u64..5,
        g in 1u64..4,
    ) {
        prop_assume!(d.mean() > 1e-6);
        let spec = GapSpec::new(m, g).unwrap();
        let len = 16usize;
        let predicted = predicted_gap_sequence(&d, &spec, len, 1e-12).unwrap();
        let gapped = insert_gap(&d, &spec, 1e-12).unwrap();
        let composed = restart_sequence(&gapped, 1e-12).unwrap();
        for (n, &p) in predicted.iter().enumerate().take(len.min(composed.values.len())) {
            prop_assert!(
                (p - composed.at(n as u64)).abs() <= 1e-9,
                "m={m} g={g} n={n}: {p} vs {}", composed.at(n as u64)
            );
        }
    }
}
