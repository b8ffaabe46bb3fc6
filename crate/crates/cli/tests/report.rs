use wnncheck::{output, run_scenario, Overrides, ScenarioConfig};

#[test]
fn json_floats_round_trip_bit_exactly() {
    let cfg = ScenarioConfig::catalog("berger", &Overrides { seed: Some(3), ..Overrides::default() }).unwrap();
    let bundle = run_scenario(&cfg, false);
    let doc: serde_json::Value = serde_json::from_str(&output::to_json(&bundle, &cfg)).unwrap();
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), bundle.reports.len());
    for (r, j) in bundle.reports.iter().zip(checks) {
        assert_eq!(j["name"], r.name.as_str());
        for (q, jq) in r.residuals.iter().zip(j["residuals"].as_array().unwrap()) {
            if q.value.is_finite() {
                assert_eq!(jq["value"].as_f64().unwrap().to_bits(), q.value.to_bits(), "{}/{}", r.name, q.name);
            } else {
                assert!(jq["value"].is_null());
            }
        }
        for (c, jc) in r.certificates.iter().zip(j["certificates"].as_array().unwrap()) {
            let coords: Vec<f64> = jc["coords"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
            assert_eq!(coords, c.coords);
        }
    }
}

#[test]
fn seed_changes_samples_not_verdicts() {
    let run = |seed| {
        let cfg = ScenarioConfig::catalog("so4_s3", &Overrides { seed: Some(seed), ..Overrides::default() }).unwrap();
        run_scenario(&cfg, false)
    };
    let (a, b) = (run(1), run(2));
    assert_eq!(a.overall(), b.overall());
    for name in ["fat", "obstruction"] {
        assert_eq!(a.report(name).unwrap().verdict, b.report(name).unwrap().verdict);
    }
    assert_ne!(a.report("wnn").unwrap().certificates, b.report("wnn").unwrap().certificates);
}
