//! Machine-readable check verdicts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    Inconclusive,
    Witnessed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not_applicable",
            Status::Inconclusive => "inconclusive",
            Status::Witnessed => "witnessed",
        }
    }

    /// Whether a batch containing this status may still exit successfully.
    pub fn is_ok(self) -> bool {
        !matches!(self, Status::Fail)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named scalar. When `tol` is set the quantity is a residual and must not exceed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub tol: Option<f64>,
}

impl Quantity {
    pub fn exceeds(&self) -> bool {
        match self.tol {
            // NaN residuals count as exceeding
            Some(tol) => !(self.value <= tol),
            None => false,
        }
    }
}

/// A named vector in orthonormal basis coordinates of the algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub coords: Vec<f64>,
}

/// Per-sample rows for CSV export.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleTable {
    pub value_columns: Vec<String>,
    pub rows: Vec<SampleRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    pub verdict: Option<String>,
    pub residuals: Vec<Quantity>,
    pub certificates: Vec<Certificate>,
    pub samples: Option<SampleTable>,
    /// Filled in by callers that own a clock.
    pub wall_time: Option<f64>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            status: Status::Pass,
            verdict: None,
            residuals: Vec::new(),
            certificates: Vec::new(),
            samples: None,
            wall_time: None,
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: &str) -> Self {
        let mut r = CheckReport::new(name);
        r.status = Status::NotApplicable;
        r.verdict = Some(reason.to_string());
        r
    }

    /// Records a residual; the report fails if it exceeds `tol`.
    pub fn residual(&mut self, name: &str, value: f64, tol: f64) -> &mut Self {
        let q = Quantity { name: name.to_string(), value, tol: Some(tol) };
        if q.exceeds() {
            self.status = Status::Fail;
        }
        self.residuals.push(q);
        self
    }

    pub fn stat(&mut self, name: &str, value: f64) -> &mut Self {
        self.residuals.push(Quantity { name: name.to_string(), value, tol: None });
        self
    }

    pub fn certificate(&mut self, name: &str, coords: &[f64]) -> &mut Self {
        self.certificates.push(Certificate { name: name.to_string(), coords: coords.to_vec() });
        self
    }

    pub fn verdict(&mut self, verdict: &str) -> &mut Self {
        self.verdict = Some(verdict.to_string());
        self
    }

    /// Sets a non-failing status. A report that already failed stays failed.
    pub fn set_status(&mut self, status: Status) -> &mut Self {
        debug_assert!(status != Status::Fail, "Fail is derived from residuals");
        if self.status != Status::Fail {
            self.status = status;
        }
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|q| q.name == name).map(|q| q.value)
    }

    pub fn get_certificate(&self, name: &str) -> Option<&[f64]> {
        self.certificates.iter().find(|c| c.name == name).map(|c| c.coords.as_slice())
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fail_is_sticky_and_nan_fails() {
        let mut r = CheckReport::new("x");
        r.residual("a", 1e-12, 1e-10);
        assert_eq!(r.status, Status::Pass);
        r.residual("b", f64::NAN, 1e-10);
        assert_eq!(r.status, Status::Fail);
        r.set_status(Status::Witnessed);
        assert_eq!(r.status, Status::Fail);
        assert!(r.residuals[1].exceeds());
    }
}
