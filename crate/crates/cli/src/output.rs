//! JSON and CSV reports, text summaries and the catalog listing.
//!
//! Every float is written with 17 significant digits, so a report round-trips
//! bit-exactly and is byte-identical across runs with the same config and seed.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use wnncheck_core::catalog::{self, Scenario};
use wnncheck_core::oneill::OneillTensors;
use wnncheck_core::{AdaptedMetric, CheckReport, Tolerances};

use crate::config::ScenarioConfig;
use crate::runner::Bundle;
use crate::CliError;

pub const SCHEMA: &str = "v1";
/// Threshold for the structural flags of the catalog listing.
const STRUCTURAL_ZERO: f64 = 1e-12;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Serialize)]
struct JsonBundle<'a> {
    schema: &'static str,
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<&'a str>,
    seed: u64,
    overall: &'static str,
    config: JsonConfig<'a>,
    checks: Vec<JsonReport<'a>>,
}

#[derive(Serialize)]
struct JsonConfig<'a> {
    algebra: &'a str,
    basis_labels: &'a [String],
    dims: JsonDims,
    /// Row-major `P` on `q`.
    p: Vec<Vec<f64>>,
    tolerances: JsonTolerances,
    sampling: JsonSampling,
    horizon: f64,
    grid: usize,
    checks: Vec<&'static str>,
    with_oracles: bool,
}

#[derive(Serialize)]
struct JsonDims {
    g: usize,
    k: usize,
    q: usize,
    m: usize,
}

#[derive(Serialize)]
struct JsonTolerances {
    tol_struct: f64,
    tol_check: f64,
    kernel_eps: f64,
    fat_eps: f64,
}

#[derive(Serialize)]
struct JsonSampling {
    n_x: usize,
    n_xi: usize,
    refine: bool,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    name: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<&'a str>,
    residuals: Vec<JsonQuantity<'a>>,
    certificates: Vec<JsonCertificate<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
}

#[derive(Serialize)]
struct JsonQuantity<'a> {
    name: &'a str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Serialize)]
struct JsonCertificate<'a> {
    name: &'a str,
    coords: &'a [f64],
}

fn json_report(r: &CheckReport) -> JsonReport<'_> {
    JsonReport {
        name: &r.name,
        status: r.status.as_str(),
        verdict: r.verdict.as_deref(),
        residuals: r.residuals.iter().map(|q| JsonQuantity { name: &q.name, value: q.value, tol: q.tol }).collect(),
        certificates: r.certificates.iter().map(|c| JsonCertificate { name: &c.name, coords: &c.coords }).collect(),
        wall_time: r.wall_time,
    }
}

pub fn to_json(bundle: &Bundle, cfg: &ScenarioConfig) -> String {
    let t = cfg.triple();
    let alg = t.algebra();
    let p = cfg.metric.p();
    let tol = &cfg.tolerances;
    let doc = JsonBundle {
        schema: SCHEMA,
        tool: "wnncheck",
        version: env!("CARGO_PKG_VERSION"),
        scenario: &bundle.scenario,
        description: bundle.description.as_deref(),
        seed: bundle.seed,
        overall: bundle.overall().as_str(),
        config: JsonConfig {
            algebra: alg.name(),
            basis_labels: alg.labels(),
            dims: JsonDims { g: bundle.dims.g, k: bundle.dims.k, q: bundle.dims.q, m: bundle.dims.m },
            p: (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect(),
            tolerances: JsonTolerances {
                tol_struct: tol.tol_struct,
                tol_check: tol.tol_check,
                kernel_eps: tol.kernel_eps,
                fat_eps: tol.fat_eps,
            },
            sampling: JsonSampling { n_x: cfg.sampling.n_x, n_xi: cfg.sampling.n_xi, refine: cfg.sampling.refine },
            horizon: cfg.horizon,
            grid: cfg.grid,
            checks: cfg.checks.iter().map(|c| c.id()).collect(),
            with_oracles: cfg.with_oracles,
        },
        checks: bundle.reports.iter().map(json_report).collect(),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PrettySigFigs::default());
    doc.serialize(&mut ser).expect("report serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Pretty printing plus 17-digit floats. serde_json turns non-finite values
/// into `null` before they reach the formatter.
#[derive(Default)]
struct PrettySigFigs {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident : $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.pretty.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettySigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// One CSV per report that carries samples:
/// `sample_id, x_0.., xi_0.., <value columns>`.
pub fn write_csvs(bundle: &Bundle, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for r in &bundle.reports {
        let Some(table) = &r.samples else { continue };
        let path = dir.join(format!("{}.{}.csv", bundle.scenario, r.name));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let nx = table.rows.first().map_or(0, |row| row.x.len());
        let nxi = table.rows.first().map_or(0, |row| row.xi.len());
        let mut header = vec![String::from("sample_id")];
        header.extend((0..nx).map(|i| format!("x_{i}")));
        header.extend((0..nxi).map(|i| format!("xi_{i}")));
        header.extend(table.value_columns.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (id, row) in table.rows.iter().enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(row.x.iter().chain(&row.xi).chain(&row.values).map(|v| fmt_f64(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

/// Human-readable summary; names match the JSON report.
pub fn summary(bundle: &Bundle) -> String {
    let mut s = String::new();
    let d = bundle.dims;
    let _ = write!(s, "scenario {}", bundle.scenario);
    if let Some(desc) = &bundle.description {
        let _ = write!(s, " ({desc})");
    }
    let _ = writeln!(s, ", seed {}, dim g = {}, k = {}, q = {}, m = {}", bundle.seed, d.g, d.k, d.q, d.m);
    for r in &bundle.reports {
        let _ = write!(s, "  {:<20} {:<15}", r.name, r.status.as_str());
        if let Some(v) = &r.verdict {
            let _ = write!(s, " {v}");
        }
        if let Some(t) = r.wall_time {
            let _ = write!(s, " [{t:.3} s]");
        }
        s.push('\n');
        for q in &r.residuals {
            match q.tol {
                Some(tol) if tol == f64::MAX => {
                    let _ = writeln!(s, "      {:<32} {:>12.4e}  (must be finite)", q.name, q.value);
                }
                Some(tol) => {
                    let flag = if q.exceeds() { "  <-- exceeds" } else { "" };
                    let _ = writeln!(s, "      {:<32} {:>12.4e}  (tol {tol:.1e}){flag}", q.name, q.value);
                }
                None => {
                    let _ = writeln!(s, "      {:<32} {:>12.4e}", q.name, q.value);
                }
            }
        }
        for c in &r.certificates {
            let coords: Vec<String> = c.coords.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(s, "      {:<32} [{}]", c.name, coords.join(", "));
        }
    }
    let _ = writeln!(s, "overall: {}", bundle.overall().as_str());
    s
}

/// Catalog listing with dimensions and structural flags.
pub fn catalog_listing() -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:<22} {:>5} {:>5} {:>5}  flags", "id", "fibration", "dim g", "dim q", "dim m");
    for sc in catalog::ALL {
        let _ = writeln!(s, "{}", catalog_line(sc)?);
    }
    Ok(s)
}

fn catalog_line(sc: Scenario) -> Result<String, CliError> {
    let triple = catalog::triple(sc, Tolerances::default()).map_err(|e| CliError::Config(e.to_string()))?;
    let metric = AdaptedMetric::normal(std::sync::Arc::new(triple));
    let t = metric.triple();
    let tensors = OneillTensors::new(&metric);
    let alg = t.algebra();
    let n = alg.dim();
    let abelian = (0..n).all(|i| (0..n).all(|j| alg.bracket(&alg.unit(i), &alg.unit(j)).is_ok_and(|b| b.norm() <= STRUCTURAL_ZERO)));
    let a_zero = (0..t.dim_m()).all(|i| {
        let mut e = nalgebra::DVector::zeros(t.dim_m());
        e[i] = 1.0;
        tensors.a_star_matrix(&e).norm() <= STRUCTURAL_ZERO
    });
    let mut flags = Vec::new();
    if abelian {
        flags.push("flat");
    }
    if a_zero {
        flags.push("A=0");
    }
    if tensors.s_norm() <= STRUCTURAL_ZERO {
        flags.push("totally-geodesic");
    }
    Ok(format!(
        "{:<8} {:<22} {:>5} {:>5} {:>5}  {}",
        sc.id(),
        sc.description(),
        n,
        t.dim_q(),
        t.dim_m(),
        flags.join(", ")
    ))
}

/// Writes `<dir>/<scenario>.json`.
pub fn write_json(bundle: &Bundle, cfg: &ScenarioConfig, dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", bundle.scenario));
    std::fs::write(&path, to_json(bundle, cfg))?;
    Ok(path)
}
