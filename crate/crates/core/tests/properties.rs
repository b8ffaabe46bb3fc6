use std::sync::Arc;

use proptest::prelude::*;
use wnncheck_core::analysis::{self, SampleCloud};
use wnncheck_core::catalog::{self, Scenario};
use wnncheck_core::oneill::OneillTensors;
use wnncheck_core::{AdaptedMetric, Tolerances};

fn scenario() -> impl Strategy<Value = Scenario> {
    prop::sample::select(catalog::ALL.to_vec())
}

fn metric(s: Scenario, seed: u64) -> AdaptedMetric {
    let t = Arc::new(catalog::triple(s, Tolerances::default()).unwrap());
    let p = analysis::random_admissible_p(&t, &mut wnncheck_core::sampling::rng(seed));
    AdaptedMetric::new(t, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn refinement_never_raises_min_sigma(s in scenario(), seed in 0u64..1000) {
        let g = metric(s, seed);
        let tensors = OneillTensors::new(&g);
        let cloud = SampleCloud::new(&g, seed, 6, 3);
        let r = analysis::fatness_scan(&tensors, &cloud, true);
        let (refined, raw) = (r.get("min_sigma").unwrap(), r.get("min_sigma_unrefined").unwrap());
        prop_assert!(refined <= raw, "{refined} > {raw}");
    }

    #[test]
    fn invariance_holds_for_random_deformations(s in scenario(), seed in 0u64..1000) {
        let g = metric(s, seed);
        // the check takes P' relative to the base metric: P' = P^{-1} P_abs
        let p_abs = analysis::random_admissible_p(g.triple(), &mut wnncheck_core::sampling::rng(seed + 1));
        let p_rel = g.p_inv() * p_abs;
        let cloud = SampleCloud::new(&g, seed, 3, 2);
        let grid = wnncheck_core::holonomy::time_grid(0.0, 2.0, 9);
        let r = analysis::wnn_metric_invariance_check(&g, &p_rel, &cloud, &grid).unwrap();
        prop_assert!(r.passed(), "{:?}", r.residuals);
    }

    #[test]
    fn scans_are_deterministic_in_the_seed(s in scenario(), seed in 0u64..1000) {
        let g = metric(s, 0);
        let tensors = OneillTensors::new(&g);
        let run = || {
            let cloud = SampleCloud::new(&g, seed, 5, 2);
            (analysis::fatness_scan(&tensors, &cloud, true), analysis::estimate_wnn_tau(&tensors, &cloud).tau_hat)
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.0.residuals, b.0.residuals);
        prop_assert_eq!(a.0.certificates, b.0.certificates);
        prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
}
