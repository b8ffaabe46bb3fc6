//! Holonomy and dual holonomy fields along `c(t) = exp(t x) o`.
//!
//! In the frame translated by `exp(t x)` a vertical field is a curve `w(t)` in
//! `q` and both transport equations become constant-coefficient systems:
//! `w' = M_hol w` with `M_hol = -pr_q N_x|q - S_x`, and `w' = M_dual w` with
//! `M_dual = -pr_q N_x|q + S_x`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::connection::AdaptedMetric;
use crate::error::{Error, Result};
use crate::linalg::{self, expm};
use crate::oneill::OneillTensors;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Holonomy,
    Dual,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Holonomy => "holonomy",
            FieldKind::Dual => "dual",
        }
    }
}

/// `n` evenly spaced times on `[a, b]`.
pub fn time_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default forward grid: 64 points on `[0, horizon]`.
pub fn default_grid(horizon: f64) -> Vec<f64> {
    time_grid(0.0, horizon, 64)
}

#[derive(Debug, Clone)]
pub struct HolonomyPropagator {
    metric: AdaptedMetric,
    /// Unit direction in algebra coordinates and in m-coordinates.
    x: DVector<f64>,
    x_m: DVector<f64>,
    m_hol: DMatrix<f64>,
    m_dual: DMatrix<f64>,
    horizontal_consistency: f64,
    generator_duality: f64,
}

pub fn generators(metric: &AdaptedMetric, x: &DVector<f64>) -> Result<HolonomyPropagator> {
    let t = metric.triple();
    let xm = t.m_coords(x)?;
    let norm = xm.norm();
    if norm < t.tolerances().tol_struct {
        return Err(Error::ZeroVector);
    }
    let x_m = xm / norm;
    let x_p = t.m_to_p(&x_m);
    let dq = t.dim_q();
    let nx = metric.nomizu_p(&x_p);
    let vert = nx.view((0, 0), (dq, dq)).clone_owned();
    let tensors = OneillTensors::new(metric);
    let s = tensors.s_matrix(&x_m);
    let m_hol = -&vert - &s;
    let m_dual = -&vert + &s;

    // pr_m(N_x w) = -A*_x w on q
    let horiz = nx.view((dq, 0), (t.dim_m(), dq)).clone_owned();
    let horizontal_consistency = linalg::max_abs(&(horiz + tensors.a_star_matrix(&x_m)));
    // M_dual = -P^{-1} M_hol^T P
    let adj = metric.p_inv() * m_hol.transpose() * metric.p();
    let generator_duality = if dq == 0 { 0.0 } else { (&m_dual + adj).norm() };
    Ok(HolonomyPropagator {
        metric: metric.clone(),
        x: t.from_m(&x_m),
        x_m,
        m_hol,
        m_dual,
        horizontal_consistency,
        generator_duality,
    })
}

impl HolonomyPropagator {
    pub fn metric(&self) -> &AdaptedMetric {
        &self.metric
    }
    /// Unit geodesic direction.
    pub fn direction(&self) -> &DVector<f64> {
        &self.x
    }
    pub fn direction_m(&self) -> &DVector<f64> {
        &self.x_m
    }
    pub fn m_hol(&self) -> &DMatrix<f64> {
        &self.m_hol
    }
    pub fn m_dual(&self) -> &DMatrix<f64> {
        &self.m_dual
    }
    pub fn generator(&self, kind: FieldKind) -> &DMatrix<f64> {
        match kind {
            FieldKind::Holonomy => &self.m_hol,
            FieldKind::Dual => &self.m_dual,
        }
    }
    /// `max |pr_m(N_x w) + A*_x w|` over a basis of `q`.
    pub fn horizontal_consistency(&self) -> f64 {
        self.horizontal_consistency
    }
    /// `|M_dual + M_hol^{*g}|`.
    pub fn generator_duality(&self) -> f64 {
        self.generator_duality
    }

    /// Flow `exp(t M)` on q-coordinates; `FieldKind::Holonomy` gives `ĉ(t)`.
    pub fn transform(&self, t: f64, kind: FieldKind) -> DMatrix<f64> {
        expm(&(self.generator(kind) * t))
    }

    pub(crate) fn propagate_q(&self, t: f64, w0: &DVector<f64>, kind: FieldKind) -> DVector<f64> {
        self.transform(t, kind) * w0
    }

    /// `w(t) = exp(t M) w0` for a vertical `w0` in algebra coordinates.
    pub fn propagate(&self, t: f64, w0: &DVector<f64>, kind: FieldKind) -> Result<DVector<f64>> {
        let tr = self.metric.triple();
        let w = tr.q_coords(w0)?;
        Ok(tr.from_q(&self.propagate_q(t, &w, kind)))
    }
}

/// `|exp(t M_dual) - (exp(t M_hol))^{-*}|` over the grid, adjoint taken with `P`.
pub fn dual_relation_check(prop: &HolonomyPropagator, grid: &[f64]) -> CheckReport {
    let g = &prop.metric;
    let tol = g.triple().tolerances().tol_check;
    let mut worst = 0.0f64;
    for &t in grid {
        let hol = prop.transform(t, FieldKind::Holonomy);
        let star = g.p_inv() * hol.transpose() * g.p();
        let inv_star = star.try_inverse().unwrap_or_else(|| DMatrix::from_element(hol.nrows(), hol.ncols(), f64::NAN));
        let dual = prop.transform(t, FieldKind::Dual);
        worst = worst.max((dual - inv_star).norm());
    }
    let mut r = CheckReport::new("dualrel");
    r.residual("dual_inverse_adjoint", worst, tol)
        .residual("generator_duality", prop.generator_duality, tol)
        .residual("horizontal_consistency", prop.horizontal_consistency, tol);
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub norm2: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `|nu(t)|^2` and its first two derivatives for the dual field, from the generator.
pub fn norm_evolution(prop: &HolonomyPropagator, w0: &DVector<f64>, grid: &[f64]) -> Result<Vec<NormSample>> {
    let w0 = prop.metric.triple().q_coords(w0)?;
    Ok(norm_evolution_q(prop, &w0, grid))
}

pub(crate) fn norm_evolution_q(prop: &HolonomyPropagator, w0: &DVector<f64>, grid: &[f64]) -> Vec<NormSample> {
    let g = &prop.metric;
    let m = &prop.m_dual;
    let m2 = m * m;
    grid.iter()
        .map(|&t| {
            let w = prop.propagate_q(t, w0, FieldKind::Dual);
            let mw = m * &w;
            let m2w = &m2 * &w;
            NormSample {
                t,
                norm2: g.inner_q(&w, &w),
                d1: 2.0 * g.inner_q(&mw, &w),
                d2: g.inner_q(&m2w, &w) + 2.0 * g.inner_q(&mw, &mw) + g.inner_q(&w, &m2w),
            }
        })
        .collect()
}

/// `K(c', nu) = 1/2 (|nu|^2)'' - 3 |S_c' nu|^2 + |A*_c' nu|^2` along the dual field.
pub fn curvature_identity_residual(
    metric: &AdaptedMetric,
    x: &DVector<f64>,
    w0: &DVector<f64>,
    grid: &[f64],
) -> Result<CheckReport> {
    let prop = generators(metric, x)?;
    let t = metric.triple();
    let w0 = t.q_coords(w0)?;
    let tensors = OneillTensors::new(metric);
    let x_m = prop.x_m.clone();
    let x_p = t.m_to_p(&x_m);
    let s = tensors.s_matrix(&x_m);
    let a_star = tensors.a_star_matrix(&x_m);
    let series = norm_evolution_q(&prop, &w0, grid);
    let mut worst = 0.0f64;
    let mut min_lhs = f64::INFINITY;
    for sample in &series {
        let w = prop.propagate_q(sample.t, &w0, FieldKind::Dual);
        let lhs = metric.sectional_p(&x_p, &t.q_to_p(&w));
        let sw = &s * &w;
        let rhs = 0.5 * sample.d2 - 3.0 * metric.inner_q(&sw, &sw) + (&a_star * &w).norm_squared();
        worst = worst.max((lhs - rhs).abs());
        min_lhs = min_lhs.min(lhs);
    }
    let mut r = CheckReport::new("eqK");
    r.residual("curvature_identity", worst, t.tolerances().tol_check)
        .stat("min_curvature", min_lhs)
        .stat("grid_points", grid.len() as f64);
    Ok(r)
}

/// Supremum of `|w(t)|^2 / |w0|^2` on `[-T, T]` and the spectrum of the generator.
pub fn boundedness_check(prop: &HolonomyPropagator, w0: &DVector<f64>, horizon: f64, kind: FieldKind) -> Result<CheckReport> {
    let g = &prop.metric;
    let t = g.triple();
    let w0 = t.q_coords(w0)?;
    let n0 = g.inner_q(&w0, &w0);
    if !(n0 > 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut sup = 0.0f64;
    let mut at = 0.0;
    for time in time_grid(-horizon, horizon, 513) {
        let w = prop.propagate_q(time, &w0, kind);
        let ratio = g.inner_q(&w, &w) / n0;
        if !(ratio <= sup) {
            sup = ratio;
            at = time;
        }
    }
    let m = prop.generator(kind);
    let (abscissa, real_part) = if m.nrows() == 0 {
        (0.0, 0.0)
    } else {
        let eig = m.clone().schur().complex_eigenvalues();
        eig.iter().fold((f64::NEG_INFINITY, 0.0f64), |(a, r), l| (a.max(l.re), r.max(l.re.abs())))
    };
    let mut r = CheckReport::new("bounded");
    r.residual("spectrum_real_part", real_part, t.tolerances().tol_check)
        // only finiteness is required of the supremum
        .residual("sup_norm_ratio", sup, f64::MAX)
        .stat("attained_time", at)
        .stat("spectral_abscissa", abscissa)
        .verdict(kind.as_str());
    Ok(r)
}
