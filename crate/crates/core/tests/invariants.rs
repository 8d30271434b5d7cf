use proptest::prelude::*;

use divbandit::analysis::{burn_in_pairs, estimate_b, lemma1_bruteforce, linspace};
use divbandit::concentration::{
    exact_sup_se_reachable, harmonic_bound, monotone_sup, schur_constants, unconstrained_sup,
};
use divbandit::harness::{simulate, Recording};
use divbandit::{ArmStatistics, BanditInstance, NoiseFamily, NoiseStream, PolicyKind, PolicySpec};

fn policy(which: u8, b: f64) -> PolicySpec {
    match which {
        0 => PolicySpec::new(PolicyKind::SuccessiveElimination),
        1 if b > 0.55 => PolicySpec::new(PolicyKind::EpsGreedy).with_eps((2.0 * b - 1.0) / 2.0),
        2 => PolicySpec::new(PolicyKind::UcbBinary),
        _ => PolicySpec::new(PolicyKind::Uniform),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_are_monotone_and_capped(
        means in prop::collection::vec(0.0f64..3.0, 2..6),
        b in 0.5f64..=1.0,
        which in 0u8..4,
        seed in any::<u64>(),
        horizon in 1u64..400,
        every in 1u64..7,
    ) {
        let inst = BanditInstance::new(means, b, 1.0, NoiseFamily::Gaussian).unwrap();
        let rep = simulate(&inst, &policy(which, b), horizon, seed, Recording::every(every)).unwrap();
        let rows = &rep.trace.rows;
        prop_assert_eq!(rows.last().unwrap().t, horizon);
        for w in rows.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].cumulative_regret >= w[0].cumulative_regret);
        }
        prop_assert!(rep.final_regret >= 0.0);
        prop_assert!(rep.final_regret <= horizon as f64 * inst.max_gap() * (1.0 + 1e-12));
        let total: f64 = rows.last().unwrap().sum_a.iter().sum();
        prop_assert!((total - horizon as f64).abs() <= 1e-9 * horizon as f64);
    }

    #[test]
    fn same_seed_same_noise_across_policies(
        means in prop::collection::vec(0.0f64..3.0, 2..5),
        seed in any::<u64>(),
    ) {
        // Uniform play is a function of the noise alone, so its trace pins the stream.
        let inst = BanditInstance::new(means, 0.75, 1.0, NoiseFamily::Gaussian).unwrap();
        let a = simulate(&inst, &policy(3, 0.75), 50, seed, Recording::every(1)).unwrap();
        let b = simulate(&inst, &policy(3, 0.75), 50, seed, Recording::every(1)).unwrap();
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn binary_histories_reduce_to_sample_means(
        ys in prop::collection::vec((any::<bool>(), -10.0f64..10.0), 1..200),
        b in 0.0f64..=1.0,
    ) {
        let mut history: Vec<(f64, f64)> = ys.iter().map(|&(on, y)| if on { (1.0, y) } else { (0.0, 0.0) }).collect();
        history[0].0 = 1.0;
        let pulled: Vec<f64> = history.iter().filter(|h| h.0 > 0.0).map(|h| h.1).collect();
        let n = pulled.len() as f64;
        let s = ArmStatistics::from_history(&history, b);
        let mean = pulled.iter().sum::<f64>() / n;
        prop_assert!((s.mu_hat_1().unwrap() - mean).abs() <= 1e-12);
        prop_assert!((s.mu_hat_2().unwrap() - mean).abs() <= 1e-12);
        prop_assert_eq!(s.r1().unwrap(), n);
        prop_assert_eq!(s.r2().unwrap(), n);
    }

    // Near b = 1/2 keeping every arm wins, and for tiny T dropping all but one
    // at once can win; the interior maximizer shows up away from both.
    #[test]
    fn lemma1_maximizer_is_interior(k in 2usize..=4, t in 5u64..=12, b in 0.55f64..=0.95) {
        let r = lemma1_bruteforce(k, t, b).unwrap();
        prop_assert!(r.holds);
        prop_assert!(r.argmax.iter().any(|&tau| tau < t), "all arms kept: {:?}", r.argmax);
        prop_assert!(r.argmax[..k - 1].iter().any(|&tau| tau > 1), "all dropped at once: {:?}", r.argmax);
    }

    #[test]
    fn sup_ordering(xi in prop::collection::vec(-3.0f64..3.0, 2..=10), k in 2usize..=4) {
        let reachable = exact_sup_se_reachable(xi.len(), k, &xi, 1.0).unwrap();
        let mono = monotone_sup(&xi);
        prop_assert!(reachable <= mono + 1e-12);
        prop_assert!(mono <= unconstrained_sup(&xi) + 1e-12);
    }

    #[test]
    fn b_slope_does_not_depend_on_sigma(b in 0.5f64..=1.0, scale in 0.01f64..100.0, seed in any::<u64>()) {
        let levels = linspace(0.1, 1.0, 12);
        let stream = NoiseStream::new(seed);
        let fit = |sigma: f64| {
            let inst = BanditInstance::new(vec![1.0, 0.5], b, sigma, NoiseFamily::Gaussian).unwrap();
            estimate_b(&burn_in_pairs(&inst, &levels, 3, &stream).unwrap()).unwrap()
        };
        let (base, scaled) = (fit(1.0), fit(scale));
        prop_assert!((base.b_hat - scaled.b_hat).abs() <= 1e-9);
        prop_assert!((scaled.intercept - base.intercept - scale.ln()).abs() <= 1e-9);
    }
}

#[test]
fn schur_constant_stays_between_one_and_harmonic_bound() {
    let values = schur_constants::<f64>(100_000);
    assert_eq!(values[0], 1.0);
    for (i, w) in values.windows(2).enumerate() {
        assert!(w[1] > w[0]);
        assert!(w[1] <= harmonic_bound::<f64>(i + 2));
    }
    let single = schur_constants::<f32>(1000);
    assert!((single[999] as f64 - values[999]).abs() < 1e-5);
}
