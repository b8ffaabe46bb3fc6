//! Scenario configuration: a TOML tree mirroring the scenario fields.
//!
//! ```toml
//! scenario = "hopf"            # catalog entry, or give [algebra] and [chain]
//!
//! [metric]
//! p = [[2.0]]                  # "identity" or a row-major matrix on q
//!
//! [sampling]
//! n_x = 20
//! n_xi = 5
//! seed = 7
//!
//! [run]
//! checks = ["validate", "tensors", "fat"]
//! horizon = 10.0
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;
use wnncheck_core::catalog::{self, Scenario};
use wnncheck_core::{build_algebra, AdaptedMetric, AlgebraSpec, Subspace, SubmersionTriple, Tolerances};

use crate::CliError;

/// The fixed check vocabulary, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Validate,
    Tensors,
    Wnn,
    Invariance,
    Fat,
    Flatgeo,
    Gronwall,
    EqK,
    Dualrel,
    Bounded,
    Obstruction,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Validate,
        Check::Tensors,
        Check::Wnn,
        Check::Invariance,
        Check::Fat,
        Check::Flatgeo,
        Check::Gronwall,
        Check::EqK,
        Check::Dualrel,
        Check::Bounded,
        Check::Obstruction,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Check::Validate => "validate",
            Check::Tensors => "tensors",
            Check::Wnn => "wnn",
            Check::Invariance => "invariance",
            Check::Fat => "fat",
            Check::Flatgeo => "flatgeo",
            Check::Gronwall => "gronwall",
            Check::EqK => "eqK",
            Check::Dualrel => "dualrel",
            Check::Bounded => "bounded",
            Check::Obstruction => "obstruction",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Check {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Check::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Check::ALL.iter().map(|c| c.id()).collect();
                CliError::Config(format!("unknown check '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Sorts into execution order and drops duplicates.
pub fn normalize_checks(mut checks: Vec<Check>) -> Vec<Check> {
    checks.sort();
    checks.dedup();
    checks
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub name: Option<String>,
    pub description: Option<String>,
    pub algebra: Option<AlgebraSection>,
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub catalog: Option<String>,
    /// Basis matrices, each as a list of rows.
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    pub trace_scale: Option<f64>,
}

/// Basis indices (of the stored orthonormal basis) spanning `k` and `h`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default)]
    pub k: Vec<usize>,
    pub h: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Rows(Vec<Vec<f64>>),
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec::Named("identity".into())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default)]
    pub p: MatrixSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub n_x: usize,
    pub n_xi: usize,
    pub seed: u64,
    pub refine: bool,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { n_x: 20, n_xi: 5, seed: 0, refine: true }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    pub tol_struct: Option<f64>,
    pub tol_check: Option<f64>,
    pub kernel_eps: Option<f64>,
    pub fat_eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub checks: Option<Vec<String>>,
    pub horizon: f64,
    pub grid: usize,
    /// Relative deformation `P'` for the invariance check; random when absent.
    pub invariance_p: Option<Vec<Vec<f64>>>,
    pub with_oracles: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { checks: None, horizon: 10.0, grid: 64, invariance_p: None, with_oracles: false }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_check: Option<f64>,
    pub with_oracles: bool,
    pub checks: Option<Vec<Check>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_x: usize,
    pub n_xi: usize,
    pub seed: u64,
    pub refine: bool,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: Option<String>,
    pub metric: AdaptedMetric,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub horizon: f64,
    pub grid: usize,
    pub invariance_p: Option<DMatrix<f64>>,
    pub with_oracles: bool,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))?;
        Self::from_toml(&text, ov)
    }

    pub fn from_toml(text: &str, ov: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        Self::from_raw(raw, ov)
    }

    /// Default configuration for a catalog entry.
    pub fn catalog(id: &str, ov: &Overrides) -> Result<Self, CliError> {
        Self::from_raw(RawConfig { scenario: Some(id.to_string()), ..RawConfig::default() }, ov)
    }

    pub fn from_raw(raw: RawConfig, ov: &Overrides) -> Result<Self, CliError> {
        let defaults = Tolerances::default();
        let tol = Tolerances {
            tol_struct: raw.tolerances.tol_struct.unwrap_or(defaults.tol_struct),
            tol_check: ov.tol_check.or(raw.tolerances.tol_check).unwrap_or(defaults.tol_check),
            kernel_eps: raw.tolerances.kernel_eps.unwrap_or(defaults.kernel_eps),
            fat_eps: raw.tolerances.fat_eps.unwrap_or(defaults.fat_eps),
        };
        for (name, v) in [
            ("tol_struct", tol.tol_struct),
            ("tol_check", tol.tol_check),
            ("kernel_eps", tol.kernel_eps),
            ("fat_eps", tol.fat_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("tolerance {name} must be positive and finite, got {v}")));
            }
        }

        let (triple, description) = match (&raw.scenario, &raw.algebra, &raw.chain) {
            (Some(id), None, None) => {
                let s: Scenario = id.parse().map_err(config_err)?;
                (catalog::triple(s, tol).map_err(config_err)?, Some(s.description().to_string()))
            }
            (None, Some(alg), Some(chain)) => (custom_triple(raw.name.as_deref(), alg, chain, tol)?, None),
            (Some(_), _, _) => {
                return Err(CliError::Config("give either `scenario` or [algebra] + [chain], not both".into()))
            }
            _ => return Err(CliError::Config("missing `scenario` or [algebra] + [chain]".into())),
        };
        let description = raw.description.clone().or(description);
        let name = raw.name.clone().unwrap_or_else(|| triple.name().to_string());
        let triple = Arc::new(triple);
        let dq = triple.dim_q();
        let metric = match &raw.metric.p {
            MatrixSpec::Named(s) if s == "identity" => AdaptedMetric::normal(triple),
            MatrixSpec::Named(s) => return Err(CliError::Config(format!("metric.p: unknown value '{s}'"))),
            MatrixSpec::Rows(rows) => {
                let p = matrix("metric.p", rows, dq)?;
                AdaptedMetric::new(triple, p).map_err(|e| CliError::Config(format!("metric.p: {e}")))?
            }
        };

        let checks = match (&ov.checks, &raw.run.checks) {
            (Some(c), _) => c.clone(),
            (None, Some(names)) => names.iter().map(|n| n.parse()).collect::<Result<Vec<Check>, _>>()?,
            (None, None) => Check::ALL.to_vec(),
        };
        if !(raw.run.horizon > 0.0 && raw.run.horizon.is_finite()) {
            return Err(CliError::Config(format!("run.horizon must be positive, got {}", raw.run.horizon)));
        }
        if raw.run.grid < 2 {
            return Err(CliError::Config(format!("run.grid must be at least 2, got {}", raw.run.grid)));
        }
        let invariance_p = match &raw.run.invariance_p {
            Some(rows) => Some(matrix("run.invariance_p", rows, dq)?),
            None => None,
        };
        let s = &raw.sampling;
        Ok(ScenarioConfig {
            name,
            description,
            metric,
            sampling: Sampling { n_x: s.n_x, n_xi: s.n_xi, seed: ov.seed.unwrap_or(s.seed), refine: s.refine },
            tolerances: tol,
            checks: normalize_checks(checks),
            horizon: raw.run.horizon,
            grid: raw.run.grid,
            invariance_p,
            with_oracles: ov.with_oracles || raw.run.with_oracles,
        })
    }

    pub fn triple(&self) -> &SubmersionTriple {
        self.metric.triple()
    }
}

fn config_err(e: wnncheck_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{field}: expected a {n}x{n} matrix (dim q = {n})")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn custom_triple(
    name: Option<&str>,
    alg: &AlgebraSection,
    chain: &ChainSection,
    tol: Tolerances,
) -> Result<SubmersionTriple, CliError> {
    let spec = match (&alg.catalog, &alg.matrices) {
        (Some(id), None) => AlgebraSpec::Catalog(id.clone()),
        (None, Some(ms)) => {
            let mut matrices = Vec::with_capacity(ms.len());
            for (i, rows) in ms.iter().enumerate() {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(format!("algebra.matrices[{i}] is not square")));
                }
                matrices.push(DMatrix::from_fn(n, n, |a, b| rows[a][b]));
            }
            AlgebraSpec::Matrices { matrices, trace_scale: alg.trace_scale.unwrap_or(1.0) }
        }
        _ => return Err(CliError::Config("[algebra] needs exactly one of `catalog` or `matrices`".into())),
    };
    let alg = Arc::new(build_algebra(&spec, tol.tol_struct).map_err(config_err)?);
    let n = alg.dim();
    for (field, idx) in [("chain.k", &chain.k), ("chain.h", &chain.h)] {
        if let Some(i) = idx.iter().find(|&&i| i >= n) {
            return Err(CliError::Config(format!("{field}: index {i} out of range (dim g = {n})")));
        }
    }
    let k = Subspace::from_indices(&alg, &chain.k).map_err(config_err)?;
    let h = Subspace::from_indices(&alg, &chain.h).map_err(config_err)?;
    SubmersionTriple::new(name.unwrap_or("custom"), alg, k, &h, tol).map_err(config_err)
}
