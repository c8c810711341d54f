use proptest::prelude::*;
use secrecy_lab::channel::{eaves_info, main_info, GainSample, PowerConfig};
use secrecy_lab::coupling::{
    comonotone_coupling, independent_gap, lp_oracle, min_positive_gap, DiscreteDist, EmpiricalDist,
};
use secrecy_lab::rng::RngStream;

fn gains() -> impl Strategy<Value = GainSample> {
    (0.0..20.0f64, 0.0..20.0f64, 0.0..20.0f64).prop_map(|(hm, he, hz)| GainSample { hm, he, hz })
}

fn discrete(max_atoms: usize) -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec((0.0..10.0f64, 0.01..1.0f64), 1..=max_atoms).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let atoms = pairs.iter().map(|p| p.0).collect();
        let mut probs: Vec<f64> = pairs.iter().map(|p| p.1 / total).collect();
        let head: f64 = probs[..probs.len() - 1].iter().sum();
        *probs.last_mut().unwrap() = 1.0 - head;
        DiscreteDist::new(atoms, probs).unwrap()
    })
}

proptest! {
    #[test]
    fn info_grows_with_transmit_power(g in gains(), pt in 0.0..50.0f64, dp in 0.0..50.0f64, pj in 0.0..10.0f64) {
        let lo = PowerConfig::new(pt, pj).unwrap();
        let hi = PowerConfig::new(pt + dp, pj).unwrap();
        prop_assert!(main_info(&g, &hi) >= main_info(&g, &lo));
        prop_assert!(eaves_info(&g, &hi) >= eaves_info(&g, &lo));
    }

    #[test]
    fn jamming_only_hurts_the_receiver(g in gains(), pt in 0.0..50.0f64, pj in 0.0..10.0f64, dj in 0.0..10.0f64) {
        let lo = PowerConfig::new(pt, pj).unwrap();
        let hi = PowerConfig::new(pt, pj + dj).unwrap();
        prop_assert!(main_info(&g, &hi) <= main_info(&g, &lo));
        prop_assert_eq!(eaves_info(&g, &hi), eaves_info(&g, &lo));
    }

    #[test]
    fn quantile_coupling_matches_lp(a in discrete(8), b in discrete(8)) {
        let (v, c) = comonotone_coupling(&a, &b).unwrap();
        prop_assert!(c.is_coupling_of(&a, &b));
        let (lp, _) = lp_oracle(&a, &b).unwrap();
        prop_assert!((v - lp).abs() <= 1e-9, "quantile {} vs lp {}", v, lp);
    }

    #[test]
    fn gap_scales_linearly(xs in prop::collection::vec(0.0..10.0f64, 1..200),
                           ys in prop::collection::vec(0.0..10.0f64, 1..200),
                           c in 0.1..10.0f64) {
        let base = min_positive_gap(&EmpiricalDist::new(xs.clone()).unwrap(), &EmpiricalDist::new(ys.clone()).unwrap()).unwrap();
        let scaled = min_positive_gap(
            &EmpiricalDist::new(xs.iter().map(|x| c * x).collect()).unwrap(),
            &EmpiricalDist::new(ys.iter().map(|y| c * y).collect()).unwrap(),
        ).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
    }

    #[test]
    fn gap_is_shift_invariant_and_nonnegative(xs in prop::collection::vec(-5.0..5.0f64, 1..100), s in -3.0..3.0f64) {
        let a = EmpiricalDist::new(xs.clone()).unwrap();
        let b = EmpiricalDist::new(xs.iter().map(|x| x + s).collect()).unwrap();
        let g = min_positive_gap(&a, &b).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!((g - (-s).max(0.0)).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sorted_pairing_beats_independent(xs in prop::collection::vec(0.0..10.0f64, 2..50),
                                        ys in prop::collection::vec(0.0..10.0f64, 2..50),
                                        seed in any::<u64>()) {
        let a = EmpiricalDist::new(xs).unwrap();
        let b = EmpiricalDist::new(ys).unwrap();
        let best = min_positive_gap(&a, &b).unwrap();
        let indep = independent_gap(&a, &b, &RngStream::new(seed, 0)).unwrap();
        prop_assert!(best <= indep + 1e-9, "{} > {}", best, indep);
    }
}
