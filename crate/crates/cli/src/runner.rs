//! Executes the requested checks in dependency order.

use std::time::Instant;

use wnncheck_core::analysis::{self, SampleCloud, WnnEstimate, WnnStatus};
use wnncheck_core::holonomy;
use wnncheck_core::liealg::validate_structure;
use wnncheck_core::oneill::{self, OneillTensors};
use wnncheck_core::oracle;
use wnncheck_core::sampling;
use wnncheck_core::{CheckReport, Status};

use crate::config::{Check, ScenarioConfig};

/// Pairs used by the curvature-identity scan.
pub const EQK_PAIRS: usize = 20;
/// Samples compared against the finite-difference oracle.
pub const ORACLE_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overall {
    Pass,
    Inconclusive,
    Fail,
}

impl Overall {
    pub fn as_str(self) -> &'static str {
        match self {
            Overall::Pass => "pass",
            Overall::Inconclusive => "inconclusive",
            Overall::Fail => "fail",
        }
    }
    pub fn exit_code(self) -> u8 {
        match self {
            Overall::Pass => 0,
            Overall::Inconclusive | Overall::Fail => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub scenario: String,
    pub description: Option<String>,
    pub seed: u64,
    pub dims: Dims,
    pub reports: Vec<CheckReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub g: usize,
    pub k: usize,
    pub q: usize,
    pub m: usize,
}

impl Bundle {
    pub fn overall(&self) -> Overall {
        if self.reports.iter().any(|r| r.status == Status::Fail) {
            Overall::Fail
        } else if self.reports.iter().any(|r| r.status == Status::Inconclusive) {
            Overall::Inconclusive
        } else {
            Overall::Pass
        }
    }

    pub fn report(&self, name: &str) -> Option<&CheckReport> {
        self.reports.iter().find(|r| r.name == name)
    }
}

/// A core error inside a check becomes a failed report, not an abort.
fn failed(name: &str, err: wnncheck_core::Error) -> CheckReport {
    let mut r = CheckReport::new(name);
    r.residual("error", f64::NAN, 0.0).verdict(&err.to_string());
    r
}

fn or_failed(name: &str, r: wnncheck_core::Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| failed(name, e))
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    tensors: OneillTensors,
    cloud: SampleCloud,
    grid: Vec<f64>,
    wnn: Option<WnnEstimate>,
    fat: Option<CheckReport>,
}

impl Context<'_> {
    fn wnn(&mut self) -> &WnnEstimate {
        if self.wnn.is_none() {
            self.wnn = Some(analysis::estimate_wnn_tau(&self.tensors, &self.cloud));
        }
        self.wnn.as_ref().expect("set above")
    }

    fn fat(&mut self) -> &CheckReport {
        if self.fat.is_none() {
            self.fat = Some(analysis::fatness_scan(&self.tensors, &self.cloud, self.cloud.refine));
        }
        self.fat.as_ref().expect("set above")
    }

    /// Totally geodesic fibres, or a usable WNN estimate.
    fn wnn_established(&mut self) -> bool {
        self.tensors.s_norm() <= self.cfg.tolerances.tol_check
            || matches!(self.wnn().status, WnnStatus::Estimated | WnnStatus::Vacuous)
    }

    fn run(&mut self, check: Check) -> Vec<CheckReport> {
        let cfg = self.cfg;
        let metric = &cfg.metric;
        let horizon = cfg.horizon;
        match check {
            Check::Validate => vec![validate_structure(metric.triple().algebra()), metric.triple().validate()],
            Check::Tensors => {
                let mut out = vec![
                    oneill::invariants_report(&self.tensors),
                    analysis::connection_invariants_report(metric),
                    oneill::tg_identity_check(&self.tensors, &self.cloud),
                ];
                if cfg.with_oracles {
                    out.push(or_failed(
                        "tensors.oracle",
                        oracle::oracle_report(&self.tensors, &self.cloud, ORACLE_SAMPLES),
                    ));
                }
                out
            }
            Check::Wnn => vec![analysis::wnn_report(self.wnn())],
            Check::Invariance => {
                let p = match &cfg.invariance_p {
                    Some(p) => p.clone(),
                    None => {
                        let mut rng = sampling::rng(cfg.sampling.seed ^ 0x1a7a_11a5);
                        let abs = analysis::random_admissible_p(metric.triple(), &mut rng);
                        metric.p_inv() * abs
                    }
                };
                let mut r = or_failed(
                    "invariance",
                    analysis::wnn_metric_invariance_check(metric, &p, &self.cloud, &self.grid),
                );
                r.certificate("p_rel", p.transpose().as_slice());
                vec![r]
            }
            Check::Fat => vec![self.fat().clone()],
            Check::Flatgeo => {
                let fat = self.fat().clone();
                let r = match fat.verdict.as_deref() {
                    Some("Fat") => CheckReport::not_applicable("flatgeo", "fat: no flat pair exists"),
                    Some("NotFat") if !self.wnn_established() => {
                        CheckReport::not_applicable("flatgeo", "WNN not established for this metric")
                    }
                    Some("NotFat") => {
                        let (x, xi) = analysis::flat_pair_certificate(&fat).expect("NotFat carries a certificate");
                        or_failed("flatgeo", analysis::flat_pair_persistence(metric, &x, &xi, horizon))
                    }
                    _ if fat.status == Status::NotApplicable => {
                        CheckReport::not_applicable("flatgeo", "fatness scan not applicable")
                    }
                    _ => {
                        let mut r = CheckReport::new("flatgeo");
                        r.verdict("no kernel certificate").set_status(Status::Inconclusive);
                        r
                    }
                };
                vec![r]
            }
            Check::Gronwall => {
                let tau = self.wnn().tau_hat;
                if !tau.is_finite() {
                    let mut r = CheckReport::new("gronwall");
                    r.verdict("tau_hat indeterminate").set_status(Status::Inconclusive);
                    return vec![r];
                }
                let pairs = analysis::IDENTITY_PAIRS;
                vec![or_failed("gronwall", analysis::gronwall_scan(metric, &self.cloud, tau, horizon, pairs))]
            }
            Check::EqK => vec![or_failed(
                "eqK",
                analysis::curvature_identity_scan(metric, &self.cloud, &self.grid, EQK_PAIRS),
            )],
            Check::Dualrel => vec![or_failed("dualrel", analysis::dual_relation_scan(metric, &self.cloud, &self.grid))],
            Check::Bounded => vec![or_failed(
                "bounded",
                analysis::boundedness_scan(metric, &self.cloud, horizon, analysis::IDENTITY_PAIRS),
            )],
            Check::Obstruction => {
                vec![or_failed("obstruction", analysis::obstruction_report(&self.tensors, &self.cloud, horizon))]
            }
        }
    }
}

/// Runs every requested check. `timing` records wall time per report; without
/// it the bundle is fully deterministic.
pub fn run_scenario(cfg: &ScenarioConfig, timing: bool) -> Bundle {
    let metric = &cfg.metric;
    let t = metric.triple();
    let s = cfg.sampling;
    let mut ctx = Context {
        cfg,
        tensors: OneillTensors::new(metric),
        cloud: SampleCloud::new(metric, s.seed, s.n_x, s.n_xi).with_refinement(s.refine),
        grid: holonomy::time_grid(0.0, cfg.horizon, cfg.grid),
        wnn: None,
        fat: None,
    };
    let mut reports = Vec::new();
    for &check in &cfg.checks {
        let start = Instant::now();
        let mut out = ctx.run(check);
        if timing {
            let dt = start.elapsed().as_secs_f64();
            for r in &mut out {
                r.wall_time = Some(dt);
            }
        }
        reports.extend(out);
    }
    Bundle {
        scenario: cfg.name.clone(),
        description: cfg.description.clone(),
        seed: s.seed,
        dims: Dims { g: t.algebra().dim(), k: t.k_space().rank(), q: t.dim_q(), m: t.dim_m() },
        reports,
    }
}
