//! Algebraic tensors against the finite-difference oracle: 50 samples per scenario.

use std::sync::Arc;

use wnncheck_core::analysis::SampleCloud;
use wnncheck_core::catalog::{self, Scenario};
use wnncheck_core::oneill::OneillTensors;
use wnncheck_core::oracle::oracle_report;
use wnncheck_core::{AdaptedMetric, Tolerances};

fn check(g: &AdaptedMetric) {
    let tensors = OneillTensors::new(g);
    let cloud = SampleCloud::new(g, 17, 10, 5);
    let r = oracle_report(&tensors, &cloud, 50).unwrap();
    assert_eq!(r.get("samples"), Some(50.0));
    assert!(r.passed(), "{}: {:?}", g.triple().name(), r.residuals);
}

#[test]
fn all_scenarios_normal_metric() {
    for s in catalog::ALL {
        check(&AdaptedMetric::normal(Arc::new(catalog::triple(s, Tolerances::default()).unwrap())));
    }
}

#[test]
fn deformed_metrics() {
    let mut rng = wnncheck_core::sampling::rng(4);
    for s in [Scenario::Hopf, Scenario::So4S3, Scenario::Berger] {
        let t = Arc::new(catalog::triple(s, Tolerances::default()).unwrap());
        let p = wnncheck_core::analysis::random_admissible_p(&t, &mut rng);
        check(&AdaptedMetric::new(t, p).unwrap());
    }
}
