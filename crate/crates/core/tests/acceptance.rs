//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use wnncheck_core::analysis::{self, SampleCloud};
use wnncheck_core::catalog::{self, Scenario};
use wnncheck_core::connection::{curvature_tensor, sectional_curvature};
use wnncheck_core::holonomy;
use wnncheck_core::liealg::validate_structure;
use wnncheck_core::oneill::{self, OneillTensors};
use wnncheck_core::oracle::{FdOracle, DEFAULT_CURVATURE_STEP};
use wnncheck_core::sampling;
use wnncheck_core::{AdaptedMetric, Status, SubmersionTriple, Tolerances};

const SEED: u64 = 20240611;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn triple(s: Scenario) -> Arc<SubmersionTriple> {
    Arc::new(catalog::triple(s, Tolerances::default()).expect("catalog triple"))
}

fn normal(s: Scenario) -> AdaptedMetric {
    AdaptedMetric::normal(triple(s))
}

fn label(g: &AdaptedMetric, l: &str) -> DVector<f64> {
    let alg = g.triple().algebra();
    alg.unit(alg.label_index(l).expect("label"))
}

/// Unit vector in `p`, algebra coordinates.
fn random_p(t: &SubmersionTriple, rng: &mut rand_chacha::ChaCha8Rng) -> DVector<f64> {
    let v = sampling::gaussian(rng, t.dim_p());
    t.from_p(&(&v / v.norm()))
}

fn random_metric(s: Scenario, rng: &mut rand_chacha::ChaCha8Rng) -> AdaptedMetric {
    let t = triple(s);
    let p = analysis::random_admissible_p(&t, rng);
    AdaptedMetric::new(t, p).expect("admissible P")
}

fn c1_structure() -> Outcome {
    let mut worst = 0.0f64;
    for s in catalog::ALL {
        let alg = catalog::algebra(s, &Tolerances::default()).expect("algebra");
        let r = validate_structure(&alg);
        for name in ["jacobi", "ad_skewness", "commutator_consistency"] {
            worst = worst.max(r.get(name).unwrap_or(f64::NAN));
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:.3e} < 1e-12"))
}

fn c2_curvature_oracle() -> Outcome {
    let mut rel = 0.0f64;
    let mut sym = 0.0f64;
    let mut rng = sampling::rng(SEED);
    for s in catalog::ALL {
        let g = normal(s);
        let t = g.triple().clone();
        let fd = FdOracle::new(&g, DEFAULT_CURVATURE_STEP).and_then(|o| o.curvature(DEFAULT_CURVATURE_STEP));
        let fd = fd.expect("oracle");
        for _ in 0..50 {
            let (x, y, z) = (random_p(&t, &mut rng), random_p(&t, &mut rng), random_p(&t, &mut rng));
            let a = curvature_tensor(&g, &x, &y, &z).expect("nomizu curvature");
            let b = fd.curvature(&x, &y, &z).expect("fd curvature");
            rel = rel.max((&a - &b).norm() / b.norm().max(1.0));
        }
        let inv = analysis::connection_invariants_report(&g);
        for q in &inv.residuals {
            sym = sym.max(q.value);
        }
    }
    outcome(
        rel < 1e-4 && sym < 1e-10,
        format!("max relative error {rel:.3e} < 1e-4; symmetry residual {sym:.3e} < 1e-10"),
    )
}

fn c3_benchmarks() -> Outcome {
    let mut rng = sampling::rng(SEED + 3);
    let mut bi = 0.0f64;
    for s in catalog::ALL {
        let g = normal(s);
        let t = g.triple().clone();
        for _ in 0..50 {
            let (x, y) = (random_p(&t, &mut rng), random_p(&t, &mut rng));
            let k = sectional_curvature(&g, &x, &y).expect("sectional");
            let br = t.algebra().bracket(&x, &y).expect("bracket");
            bi = bi.max((k - 0.25 * br.norm_squared()).abs());
        }
    }
    let hopf = normal(Scenario::Hopf);
    let vert = sectional_curvature(&hopf, &label(&hopf, "E2"), &label(&hopf, "E1")).expect("sectional");
    let ten = OneillTensors::new(&hopf);
    let (kb, km, a2) =
        oneill::gray_oneill_horizontal(&ten, &label(&hopf, "E2"), &label(&hopf, "E3")).expect("gray-oneill");
    // independent base model: su2 / span(E1) with the quotient inner product
    let base = AdaptedMetric::normal(Arc::new(hopf.triple().base().expect("base")));
    let kb_direct = sectional_curvature(&base, &label(&base, "E2"), &label(&base, "E3")).expect("base");
    let errs = [bi, (vert - 0.25).abs(), (kb - 1.0).abs(), (kb_direct - 1.0).abs(), (km + a2 * 3.0 - kb).abs()];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst < 1e-9,
        format!(
            "bi-invariant err {bi:.3e}; Hopf K(E2,E1) = {vert:.12}; base K = {kb:.12} (direct {kb_direct:.12}) -- tol 1e-9"
        ),
    )
}

fn c4_duality() -> Outcome {
    let grid = [0.1, 1.0, 5.0, 10.0];
    let mut rng = sampling::rng(SEED + 4);
    let mut worst = 0.0f64;
    for s in catalog::ALL {
        for g in [normal(s), random_metric(s, &mut rng)] {
            let cloud = SampleCloud::new(&g, SEED + 40, 20, 1);
            let r = analysis::dual_relation_scan(&g, &cloud, &grid).expect("dual scan");
            worst = worst.max(r.get("dual_inverse_adjoint").unwrap_or(f64::NAN));
        }
    }
    outcome(worst < 1e-10, format!("max |exp(tM_dual) - exp(tM_hol)^-*| {worst:.3e} < 1e-10 (P = I and random P)"))
}

fn invariance_runs() -> Vec<wnncheck_core::CheckReport> {
    let mut out = Vec::new();
    let grid = holonomy::default_grid(10.0);
    let mut rng = sampling::rng(SEED + 5);
    for s in catalog::ALL {
        let g = normal(s);
        let cloud = SampleCloud::new(&g, SEED + 50, 4, 3);
        for _ in 0..10 {
            let p = analysis::random_admissible_p(g.triple(), &mut rng);
            out.push(analysis::wnn_metric_invariance_check(&g, &p, &cloud, &grid).expect("invariance"));
        }
    }
    out
}

fn max_of(reports: &[wnncheck_core::CheckReport], name: &str) -> f64 {
    reports.iter().map(|r| r.get(name).unwrap_or(f64::NAN)).fold(0.0, |a, b| if b.is_nan() { b } else { a.max(b) })
}

fn c5_dualinv(runs: &[wnncheck_core::CheckReport]) -> Outcome {
    let conj = max_of(runs, "dual_field_conjugation");
    let dag = max_of(runs, "a_dagger_identity");
    let gen = max_of(runs, "dual_generator_conjugation");
    outcome(
        conj < 1e-9 && dag < 1e-9 && gen < 1e-9,
        format!("|nu' - P^-1 nu| {conj:.3e}; |A^dag nu' - A* nu| {dag:.3e}; generator conjugation {gen:.3e} -- tol 1e-9, {} metrics", runs.len()),
    )
}

fn c6_flatgeo() -> Outcome {
    let g = normal(Scenario::So4S3);
    let ten = OneillTensors::new(&g);
    let fat = analysis::fatness_scan(&ten, &SampleCloud::new(&g, SEED, 20, 1), true);
    let Some((x, xi)) = analysis::flat_pair_certificate(&fat) else {
        return outcome(false, String::from("no kernel certificate"));
    };
    let is_l14_l23 = (&x - label(&g, "L14")).norm() < 1e-12 && (&xi - label(&g, "L23")).norm() < 1e-12;
    let r = analysis::flat_pair_persistence(&g, &x, &xi, 10.0).expect("flatgeo");
    let res = r.get("flat_pair_residual").unwrap_or(f64::NAN);
    outcome(is_l14_l23 && res < 1e-9, format!("pair (L14, L23) = {is_l14_l23}; max residual on [-10,10] {res:.3e} < 1e-9"))
}

fn c7_gronwall() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in catalog::ALL {
        let g = normal(s);
        let ten = OneillTensors::new(&g);
        let cloud = SampleCloud::new(&g, SEED + 7, 10, 10);
        let est = analysis::estimate_wnn_tau(&ten, &cloud);
        let r = analysis::gronwall_scan(&g, &cloud, est.tau_hat, 10.0, analysis::IDENTITY_PAIRS).expect("gronwall");
        ok &= r.status == Status::Pass && est.tau_hat.is_finite();
        parts.push(format!("{s}: tau_hat {:.2e} margin {:.2e}", est.tau_hat, r.get("gronwall_margin").unwrap_or(f64::NAN)));
    }
    outcome(ok, format!("u(t) <= u(0)e^(2 tau t)(1+1e-9): {}", parts.join("; ")))
}

fn c8_eq_k() -> Outcome {
    let grid = holonomy::default_grid(10.0);
    let mut rng = sampling::rng(SEED + 8);
    let mut worst = 0.0f64;
    for s in catalog::ALL {
        for g in [normal(s), random_metric(s, &mut rng)] {
            // 5 x 4 = 20 pairs
            let cloud = SampleCloud::new(&g, SEED + 80, 5, 4);
            let r = analysis::curvature_identity_scan(&g, &cloud, &grid, 20).expect("eqK");
            worst = worst.max(r.get("curvature_identity").unwrap_or(f64::NAN));
        }
    }
    outcome(worst < 1e-8, format!("max |K - (n''/2 - 3|S nu|^2 + |A* nu|^2)| {worst:.3e} < 1e-8 (P = I and random P)"))
}

fn c9_u_identity(runs: &[wnncheck_core::CheckReport]) -> Outcome {
    let abs = max_of(runs, "u_identity_abs");
    let tuples: f64 = runs.iter().map(|r| r.get("tuples").unwrap_or(0.0)).sum();
    outcome(abs < 1e-9, format!("max |u(g',nu0) - u(g,P'nu0)| {abs:.3e} < 1e-9 over {tuples} tuples"))
}

fn fat(s: Scenario) -> wnncheck_core::CheckReport {
    let g = normal(s);
    let ten = OneillTensors::new(&g);
    analysis::fatness_scan(&ten, &SampleCloud::new(&g, SEED, 40, 1), true)
}

fn c10_fatness() -> Outcome {
    let hopf = fat(Scenario::Hopf);
    let hopf_sigma = hopf.get("min_sigma").unwrap_or(f64::NAN);
    let hopf_ok = hopf.verdict.as_deref() == Some("Fat") && (hopf_sigma - 0.5).abs() <= 1e-6;
    let so4 = fat(Scenario::So4S3);
    let so4_ok = so4.status == Status::Witnessed && analysis::flat_pair_certificate(&so4).is_some();
    let torus = fat(Scenario::Torus);
    let torus_ok = torus.verdict.as_deref() == Some("NotFat");
    let (b1, b2) = (fat(Scenario::Berger), fat(Scenario::Berger));
    let berger_ok = b1 == b2;
    outcome(
        hopf_ok && so4_ok && torus_ok && berger_ok,
        format!(
            "hopf {} sigma {hopf_sigma:.12}; so4_s3 {}; torus {}; berger {} (min sigma {:.3e}, reproducible = {berger_ok})",
            hopf.verdict.as_deref().unwrap_or("-"),
            so4.verdict.as_deref().unwrap_or("-"),
            torus.verdict.as_deref().unwrap_or("-"),
            b1.verdict.as_deref().unwrap_or("-"),
            b1.get("min_sigma").unwrap_or(f64::NAN),
        ),
    )
}

fn c11_obstruction() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, want) in
        [(Scenario::So4S3, "ObstructionWitnessed"), (Scenario::Torus, "ObstructionWitnessed"), (Scenario::Hopf, "NoKernel")]
    {
        let g = normal(s);
        let ten = OneillTensors::new(&g);
        let cloud = SampleCloud::new(&g, SEED + 11, 20, 1).with_refinement(true);
        let r = analysis::obstruction_report(&ten, &cloud, 10.0).expect("obstruction");
        let verdict = r.verdict.clone().unwrap_or_default();
        let mut this = verdict == want && r.status.is_ok();
        if want == "ObstructionWitnessed" {
            let data = ["flat_pair_residual", "sup_norm_ratio", "min_curvature"].map(|n| r.get(n));
            this &= data.iter().all(|d| d.is_some_and(f64::is_finite)) && r.get_certificate("x").is_some();
            parts.push(format!(
                "{s}: {verdict} (flat {:.1e}, sup |nu|^2 ratio {:.6}, min K {:.1e})",
                data[0].unwrap_or(f64::NAN),
                data[1].unwrap_or(f64::NAN),
                data[2].unwrap_or(f64::NAN)
            ));
        } else {
            parts.push(format!("{s}: {verdict}"));
        }
        ok &= this;
    }
    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = invariance_runs();
    let setup = start.elapsed().as_secs_f64();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("structure suite", Box::new(c1_structure)),
        ("curvature oracle equivalence", Box::new(c2_curvature_oracle)),
        ("bi-invariant and Hopf benchmarks", Box::new(c3_benchmarks)),
        ("holonomy duality", Box::new(c4_duality)),
        ("dual-field invariance under P", Box::new(|| c5_dualinv(&runs))),
        ("flat-pair persistence", Box::new(c6_flatgeo)),
        ("Gronwall bound", Box::new(c7_gronwall)),
        ("curvature identity", Box::new(c8_eq_k)),
        ("u-function identity", Box::new(|| c9_u_identity(&runs))),
        ("fatness verdicts", Box::new(c10_fatness)),
        ("obstruction pipeline", Box::new(c11_obstruction)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let dt = t0.elapsed().as_secs_f64();
        if !o.ok {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {} ({dt:.1} s)", if o.ok { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    let secs = start.elapsed().as_secs_f64();
    let fast = secs < 60.0;
    if !fast {
        failed += 1;
    }
    println!("[{}]     runtime {secs:.1} s < 60 s (shared invariance runs {setup:.1} s)", if fast { "PASS" } else { "FAIL" });
    println!("acceptance: {} of {} criteria passed", criteria.len() + 1 - failed, criteria.len() + 1);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
