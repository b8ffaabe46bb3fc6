//! Top-level checks: WNN estimation, metric-deformation invariance, fatness,
//! flat-pair persistence, the Gronwall bound and the obstruction pipeline.
//!
//! Everything is evaluated at the base point `o`; homogeneity carries the
//! result to every point. Samples are reduced in index order, so reports are
//! bit-stable for a fixed seed.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::connection::{AdaptedMetric, SubmersionTriple};
use crate::error::{Error, Result};
use crate::holonomy::{self, FieldKind, HolonomyPropagator};
use crate::linalg::{self, expm};
use crate::oneill::OneillTensors;
use crate::report::{CheckReport, SampleRow, SampleTable, Status};
use crate::sampling;

pub use crate::sampling::SampleCloud;

/// Pairs used by the per-pair identity scans unless the cloud is smaller.
pub const IDENTITY_PAIRS: usize = 100;
/// Sphere-refinement iterations.
pub const REFINE_STEPS: usize = 200;
const REFINE_STEP: f64 = 1e-2;
const SIGMA_TIE: f64 = 1e-12;

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Flip sign so the largest-magnitude entry is positive.
fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for c in v.iter() {
        if c.abs() > best.abs() + 1e-12 {
            best = *c;
            sign = if *c < 0.0 { -1.0 } else { 1.0 };
        }
    }
    v *= sign;
    v
}

/// Symmetric grid on `[-T, T]` built from the default forward grid.
pub fn symmetric_grid(horizon: f64) -> Vec<f64> {
    let fwd = holonomy::default_grid(horizon);
    let mut out: Vec<f64> = fwd.iter().skip(1).rev().map(|t| -t).collect();
    out.extend(fwd);
    out
}

// ---------------------------------------------------------------------------
// connection invariants

/// Nomizu `g`-skewness and the algebraic symmetries of the curvature tensor over
/// a basis of `p`.
pub fn connection_invariants_report(metric: &AdaptedMetric) -> CheckReport {
    let t = metric.triple();
    let dp = t.dim_p();
    let tol = t.tolerances().tol_check;
    let e: Vec<DVector<f64>> = (0..dp).map(|i| unit(dp, i)).collect();
    let gram = metric.gram_p();

    let mut skew = 0.0f64;
    for z in &e {
        let nz = metric.nomizu_p(z);
        // g N_z + N_z^T g = 0
        skew = skew.max(linalg::max_abs(&(gram * &nz + nz.transpose() * gram)));
    }

    // r[a][b] = matrix of R(e_a, e_b), then Rm(a,b,c,d) = <R(e_a,e_b)e_c, e_d>
    let mut r: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(dp);
    for x in &e {
        let mut row = Vec::with_capacity(dp);
        for y in &e {
            let mut m = DMatrix::zeros(dp, dp);
            for (c, z) in e.iter().enumerate() {
                m.set_column(c, &metric.curvature_p(x, y, z));
            }
            row.push(gram * m);
        }
        r.push(row);
    }
    let rm = |a: usize, b: usize, c: usize, d: usize| r[a][b][(d, c)];
    let (mut anti, mut metric_skew, mut bianchi, mut pair) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for a in 0..dp {
        for b in 0..dp {
            for c in 0..dp {
                for d in 0..dp {
                    let v = rm(a, b, c, d);
                    anti = anti.max((v + rm(b, a, c, d)).abs());
                    metric_skew = metric_skew.max((v + rm(a, b, d, c)).abs());
                    bianchi = bianchi.max((v + rm(b, c, a, d) + rm(c, a, b, d)).abs());
                    pair = pair.max((v - rm(c, d, a, b)).abs());
                }
            }
        }
    }
    let mut rep = CheckReport::new("tensors.connection");
    rep.residual("nomizu_g_skewness", skew, tol)
        .residual("curvature_antisymmetry", anti, tol)
        .residual("curvature_metric_skewness", metric_skew, tol)
        .residual("first_bianchi", bianchi, tol)
        .residual("pair_symmetry", pair, tol);
    rep
}

// ---------------------------------------------------------------------------
// WNN

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WnnRatio {
    Value(f64),
    /// `|A*_x xi| < kernel_eps`; the numerator is kept as a diagnostic.
    Excluded { numerator: f64 },
}

impl WnnRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            WnnRatio::Value(v) => Some(v),
            WnnRatio::Excluded { .. } => None,
        }
    }
}

/// `<(nabla_x A*)_x xi + A*_x S_x xi, A*_x xi> / (|x| |A*_x xi|^2)`.
pub fn wnn_ratio(tensors: &OneillTensors, x: &DVector<f64>, xi: &DVector<f64>) -> Result<WnnRatio> {
    let t = tensors.triple();
    let x_m = t.m_coords(x)?;
    let xi_q = t.q_coords(xi)?;
    Ok(wnn_ratio_coords(tensors, &x_m, &xi_q))
}

fn wnn_ratio_coords(tensors: &OneillTensors, x_m: &DVector<f64>, xi_q: &DVector<f64>) -> WnnRatio {
    let eps = tensors.triple().tolerances().kernel_eps;
    let a_star = tensors.a_star_matrix(x_m);
    let axi = &a_star * xi_q;
    let lhs = tensors.nabla_a_star_coords(x_m, x_m, xi_q) + &a_star * (tensors.s_matrix(x_m) * xi_q);
    let numerator = lhs.dot(&axi);
    let den = axi.norm_squared();
    if libm::sqrt(den) < eps {
        WnnRatio::Excluded { numerator }
    } else {
        WnnRatio::Value(numerator / (x_m.norm() * den))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WnnStatus {
    Estimated,
    /// Every sample was excluded: the inequality holds vacuously with `tau = 0`.
    Vacuous,
    /// An excluded sample carried a numerator above `tol_check`.
    NearKernelViolation,
    /// A non-finite ratio or an empty cloud.
    Indeterminate,
}

impl WnnStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            WnnStatus::Estimated => "Estimated",
            WnnStatus::Vacuous => "Vacuous",
            WnnStatus::NearKernelViolation => "NearKernelViolation",
            WnnStatus::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WnnEstimate {
    pub status: WnnStatus,
    pub tau_hat: f64,
    /// Sample attaining the largest ratio, in algebra coordinates.
    pub max_ratio_sample: Option<(DVector<f64>, DVector<f64>)>,
    pub max_ratio: f64,
    pub excluded_fraction: f64,
    /// Largest numerator among excluded samples (0 when none were excluded).
    pub near_kernel_diagnostic: f64,
    pub n_samples: usize,
    pub samples: SampleTable,
}

pub fn estimate_wnn_tau(tensors: &OneillTensors, cloud: &SampleCloud) -> WnnEstimate {
    let t = tensors.triple();
    let tol = t.tolerances().tol_check;
    let mut best: Option<(f64, usize, usize)> = None;
    let mut excluded = 0usize;
    let mut near = 0.0f64;
    let mut finite = true;
    let mut rows = Vec::with_capacity(cloud.len_pairs());
    let n_xi = cloud.xis.len();
    for (idx, x, xi) in cloud.pairs() {
        let x_m = t.p_m_part(&t.p_space().coords(x));
        let xi_q = t.p_q_part(&t.p_space().coords(xi));
        let r = wnn_ratio_coords(tensors, &x_m, &xi_q);
        let value = match r {
            WnnRatio::Value(v) => {
                if !v.is_finite() {
                    finite = false;
                } else if best.is_none_or(|(b, _, _)| v > b) {
                    best = Some((v, idx / n_xi, idx % n_xi));
                }
                v
            }
            WnnRatio::Excluded { numerator } => {
                excluded += 1;
                near = near.max(numerator);
                f64::NAN
            }
        };
        rows.push(SampleRow { x: x.iter().copied().collect(), xi: xi.iter().copied().collect(), values: vec![value] });
    }
    let n = cloud.len_pairs();
    let status = if n == 0 || !finite {
        WnnStatus::Indeterminate
    } else if near > tol {
        WnnStatus::NearKernelViolation
    } else if excluded == n {
        WnnStatus::Vacuous
    } else {
        WnnStatus::Estimated
    };
    let max_ratio = best.map_or(f64::NAN, |b| b.0);
    let tau_hat = match status {
        WnnStatus::Indeterminate => f64::NAN,
        _ => best.map_or(0.0, |b| b.0.max(0.0)),
    };
    WnnEstimate {
        status,
        tau_hat,
        max_ratio_sample: best.map(|(_, i, j)| (cloud.xs[i].clone(), cloud.xis[j].clone())),
        max_ratio,
        excluded_fraction: if n == 0 { 0.0 } else { excluded as f64 / n as f64 },
        near_kernel_diagnostic: near,
        n_samples: n,
        samples: SampleTable { value_columns: vec![String::from("ratio")], rows },
    }
}

/// Report view of an estimate.
pub fn wnn_report(est: &WnnEstimate) -> CheckReport {
    let mut r = CheckReport::new("wnn");
    r.stat("tau_hat", est.tau_hat)
        .stat("max_ratio", est.max_ratio)
        .stat("excluded_fraction", est.excluded_fraction)
        .stat("near_kernel_numerator", est.near_kernel_diagnostic)
        .stat("samples", est.n_samples as f64)
        .verdict(est.status.as_str());
    if let Some((x, xi)) = &est.max_ratio_sample {
        r.certificate("max_ratio_x", x.as_slice()).certificate("max_ratio_xi", xi.as_slice());
    }
    match est.status {
        WnnStatus::Estimated | WnnStatus::Vacuous => {}
        WnnStatus::NearKernelViolation | WnnStatus::Indeterminate => {
            r.set_status(Status::Inconclusive);
        }
    }
    r.samples = Some(est.samples.clone());
    r
}

// ---------------------------------------------------------------------------
// admissible deformations

/// Frobenius-orthonormal basis of the symmetric matrices on `q` commuting with
/// `ad(k)|q`.
pub fn admissible_basis(triple: &SubmersionTriple) -> Vec<DMatrix<f64>> {
    let dq = triple.dim_q();
    let mut sym = Vec::new();
    for a in 0..dq {
        for b in a..dq {
            let mut s = DMatrix::zeros(dq, dq);
            if a == b {
                s[(a, a)] = 1.0;
            } else {
                let w = core::f64::consts::FRAC_1_SQRT_2;
                s[(a, b)] = w;
                s[(b, a)] = w;
            }
            sym.push(s);
        }
    }
    let ns = sym.len();
    let ads: Vec<DMatrix<f64>> =
        (0..triple.k_space().rank()).map(|i| triple.ad_on_q(&triple.k_space().vector(i))).collect();
    // Gram of the commutator map restricted to symmetric matrices
    let mut gram = DMatrix::<f64>::zeros(ns, ns);
    for ad in &ads {
        let images: Vec<DMatrix<f64>> = sym.iter().map(|s| s * ad - ad * s).collect();
        for i in 0..ns {
            for j in 0..ns {
                gram[(i, j)] += images[i].dot(&images[j]);
            }
        }
    }
    let eig = gram.symmetric_eigen();
    let tol = triple.tolerances().tol_struct;
    let mut out = Vec::new();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= tol {
            let c = eig.eigenvectors.column(k);
            let mut m = DMatrix::zeros(dq, dq);
            for (s, ci) in sym.iter().zip(c.iter()) {
                m += s * *ci;
            }
            out.push(m);
        }
    }
    out
}

/// Random admissible `P = exp(X)` with `X` a random element of the symmetric
/// `Ad(K)`-commutant.
pub fn random_admissible_p(triple: &SubmersionTriple, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let dq = triple.dim_q();
    let mut x = DMatrix::zeros(dq, dq);
    for b in admissible_basis(triple) {
        let c: f64 = rng.sample(rand_distr::StandardNormal);
        x += b * (0.5 * c);
    }
    let p = expm(&x);
    (&p + p.transpose()) * 0.5
}

/// `u(g', nu0, X, t) = u(g, P' nu0, X, t)` with `g' = g.deformed(P')`, together
/// with `nu'(t) = P'^{-1} nu(t)`, `A^dagger nu' = A* nu` and the conjugation of
/// the dual generators.
pub fn wnn_metric_invariance_check(
    metric: &AdaptedMetric,
    p_rel: &DMatrix<f64>,
    cloud: &SampleCloud,
    grid: &[f64],
) -> Result<CheckReport> {
    let deformed = metric.deformed(p_rel)?;
    let t = metric.triple();
    let tol = t.tolerances().tol_check;
    let r_inv = p_rel
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidP(String::from("P' is singular")))?;
    let ten = OneillTensors::new(metric);
    let ten_d = OneillTensors::new(&deformed);
    let (mut u_res, mut u_abs, mut conj, mut dagger, mut gen) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    let mut count = 0usize;
    for x in &cloud.xs {
        let prop = holonomy::generators(metric, x)?;
        let prop_d = holonomy::generators(&deformed, x)?;
        let a = ten.a_star_matrix(prop.direction_m());
        let a_d = ten_d.a_star_matrix(prop_d.direction_m());
        let flows: Vec<(DMatrix<f64>, DMatrix<f64>)> =
            grid.iter().map(|&s| (prop.transform(s, FieldKind::Dual), prop_d.transform(s, FieldKind::Dual))).collect();
        for (e, e_d) in &flows {
            gen = gen.max((e_d - &r_inv * e * p_rel).norm());
        }
        for xi in &cloud.xis {
            let nu0 = t.q_coords(xi)?;
            let mut us = Vec::with_capacity(grid.len());
            for (e, e_d) in &flows {
                let nu_d = e_d * &nu0;
                let nu = e * (p_rel * &nu0);
                let ad = &a_d * &nu_d;
                let an = &a * &nu;
                let (ud, u) = (ad.norm_squared(), an.norm_squared());
                u_res = u_res.max((ud - u).abs() / u.max(1.0));
                u_abs = u_abs.max((ud - u).abs());
                conj = conj.max((&nu_d - &r_inv * &nu).norm());
                dagger = dagger.max((ad - an).norm());
                us.push(ud);
                count += 1;
            }
            rows.push(SampleRow { x: x.iter().copied().collect(), xi: xi.iter().copied().collect(), values: us });
        }
    }
    let mut r = CheckReport::new("invariance");
    r.residual("u_identity", u_res, tol)
        .residual("dual_field_conjugation", conj, tol)
        .residual("a_dagger_identity", dagger, tol)
        .residual("dual_generator_conjugation", gen, tol)
        .stat("u_identity_abs", u_abs)
        .stat("tuples", count as f64);
    r.samples =
        Some(SampleTable { value_columns: grid.iter().map(|s| format!("u(t={s})")).collect(), rows });
    Ok(r)
}

// ---------------------------------------------------------------------------
// fatness

struct SigmaEval {
    lambda: f64,
    gap: f64,
    /// Unit eigenvector of `B^T B` for `lambda`.
    v: DVector<f64>,
    b: DMatrix<f64>,
}

impl SigmaEval {
    fn sigma(&self) -> f64 {
        libm::sqrt(self.lambda.max(0.0))
    }
}

struct SigmaProblem {
    /// `A*_{m_i} P^{-1/2}`.
    b_basis: Vec<DMatrix<f64>>,
    p_inv_sqrt: DMatrix<f64>,
}

impl SigmaProblem {
    fn new(tensors: &OneillTensors) -> Self {
        let t = tensors.triple();
        let (_, p_inv_sqrt) = linalg::spd_sqrt_pair(tensors.metric().p());
        let b_basis =
            (0..t.dim_m()).map(|i| tensors.a_star_matrix(&unit(t.dim_m(), i)) * &p_inv_sqrt).collect();
        SigmaProblem { b_basis, p_inv_sqrt }
    }

    fn eval(&self, x_m: &DVector<f64>) -> SigmaEval {
        let dq = self.p_inv_sqrt.nrows();
        let mut b = DMatrix::zeros(self.b_basis.first().map_or(0, |m| m.nrows()), dq);
        for (bi, c) in self.b_basis.iter().zip(x_m.iter()) {
            b += bi * *c;
        }
        let eig = (b.transpose() * &b).symmetric_eigen();
        let mut order: Vec<usize> = (0..dq).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lambda = eig.eigenvalues[order[0]];
        let gap = if dq > 1 { eig.eigenvalues[order[1]] - lambda } else { f64::INFINITY };
        let v = canonical_sign(eig.eigenvectors.column(order[0]).into_owned());
        SigmaEval { lambda, gap, v, b }
    }

    /// Gradient of `lambda_min` on `R^m` (valid where it is simple).
    fn gradient(&self, e: &SigmaEval) -> DVector<f64> {
        let bv = &e.b * &e.v;
        DVector::from_iterator(self.b_basis.len(), self.b_basis.iter().map(|bi| 2.0 * (bi * &e.v).dot(&bv)))
    }

    fn kernel_vector(&self, e: &SigmaEval) -> DVector<f64> {
        &self.p_inv_sqrt * &e.v
    }
}

fn retract(x: &DVector<f64>, d: &DVector<f64>, s: f64) -> DVector<f64> {
    let y = x + d * s;
    let n = y.norm();
    y / n
}

/// Projected descent of `lambda_min` on the unit sphere of `m`. Only improving
/// steps are accepted, so the result never exceeds the start.
fn refine(problem: &SigmaProblem, start: DVector<f64>, seed: u64, kernel_eps: f64) -> (DVector<f64>, SigmaEval, usize) {
    let mut rng = sampling::rng(seed ^ 0x5f3c_9a1e_d2b4_7086);
    let dm = start.len();
    let mut x = start;
    let mut cur = problem.eval(&x);
    let mut step = REFINE_STEP;
    let mut taken = 0usize;
    for _ in 0..REFINE_STEPS {
        if cur.sigma() < kernel_eps || step < 1e-14 {
            break;
        }
        let mut accepted: Option<(DVector<f64>, SigmaEval)> = None;
        if cur.gap > 1e-8 * cur.lambda.abs().max(1e-8) {
            let mut g = problem.gradient(&cur);
            g -= &x * g.dot(&x);
            let gn = g.norm();
            if gn > 1e-15 {
                let d = -g / gn;
                let mut s = step;
                for _ in 0..30 {
                    let y = retract(&x, &d, s);
                    let e = problem.eval(&y);
                    if e.lambda < cur.lambda {
                        accepted = Some((y, e));
                        step = (2.0 * s).min(0.5);
                        break;
                    }
                    s *= 0.5;
                }
            }
        }
        if accepted.is_none() {
            // tangent sampling where lambda_min is multiple or the line search stalled
            for _ in 0..2 * dm {
                let mut d = sampling::gaussian(&mut rng, dm);
                d -= &x * d.dot(&x);
                let n = d.norm();
                if n < 1e-12 {
                    continue;
                }
                d /= n;
                for sgn in [1.0, -1.0] {
                    let y = retract(&x, &d, sgn * step);
                    let e = problem.eval(&y);
                    let best = accepted.as_ref().map_or(cur.lambda, |a| a.1.lambda);
                    if e.lambda < best {
                        accepted = Some((y, e));
                    }
                }
            }
            if accepted.is_none() {
                step *= 0.5;
            }
        }
        if let Some((y, e)) = accepted {
            x = y;
            cur = e;
            taken += 1;
        }
    }
    (x, cur, taken)
}

/// Smallest singular value of `xi -> A*_x xi` (w.r.t. `g`) over unit `x` in `m`.
///
/// The basis of `m` is probed first, then the cloud; with `refine`, descent on
/// the sphere starts from the worst point found. `Fat` passes, `NotFat` is
/// witnessed with an explicit kernel pair `(x, xi)`, anything in between is
/// inconclusive.
pub fn fatness_scan(tensors: &OneillTensors, cloud: &SampleCloud, refine_flag: bool) -> CheckReport {
    let t = tensors.triple();
    let tol = *t.tolerances();
    let (dq, dm) = (t.dim_q(), t.dim_m());
    if dq == 0 || dm == 0 {
        return CheckReport::not_applicable("fat", "dim q = 0 or dim m = 0");
    }
    let problem = SigmaProblem::new(tensors);
    let mut probes: Vec<DVector<f64>> = (0..dm).map(|i| unit(dm, i)).collect();
    probes.extend(cloud.xs.iter().map(|x| t.p_m_part(&t.p_space().coords(x))));
    let mut rows = Vec::with_capacity(probes.len());
    let mut best: Option<(usize, SigmaEval)> = None;
    for (i, x) in probes.iter().enumerate() {
        let e = problem.eval(x);
        rows.push(SampleRow {
            x: t.from_m(x).iter().copied().collect(),
            xi: t.from_q(&problem.kernel_vector(&e)).iter().copied().collect(),
            values: vec![e.sigma()],
        });
        // near-ties keep the earlier probe, so basis directions win over roundoff
        if best.as_ref().is_none_or(|(_, b)| e.sigma() < b.sigma() - SIGMA_TIE) {
            best = Some((i, e));
        }
    }
    let (bi, be) = best.expect("at least one probe");
    let unrefined = be.sigma();
    let (x_best, e_best, steps) = if refine_flag && unrefined >= tol.kernel_eps {
        refine(&problem, probes[bi].clone(), cloud.seed, tol.kernel_eps)
    } else {
        (probes[bi].clone(), be, 0)
    };
    let sigma = e_best.sigma();
    debug_assert!(sigma <= unrefined);
    let x_alg = t.from_m(&canonical_sign(x_best.clone()));
    let x_m = t.p_m_part(&t.p_space().coords(&x_alg));
    let e_best = problem.eval(&x_m);
    let xi_q = problem.kernel_vector(&e_best);
    let xi_alg = t.from_q(&xi_q);

    let mut r = CheckReport::new("fat");
    r.stat("min_sigma", sigma)
        .stat("min_sigma_unrefined", unrefined)
        .stat("probes", probes.len() as f64)
        .stat("refine_steps", steps as f64)
        .certificate("x", x_alg.as_slice())
        .certificate("xi", xi_alg.as_slice());
    if sigma > tol.fat_eps {
        r.verdict("Fat");
    } else if sigma < tol.kernel_eps {
        let residual = (tensors.a_star_matrix(&x_m) * &xi_q).norm();
        r.residual("certificate_residual", residual, tol.kernel_eps).verdict("NotFat").set_status(Status::Witnessed);
    } else {
        r.verdict("Inconclusive").set_status(Status::Inconclusive);
    }
    r.samples = Some(SampleTable { value_columns: vec![String::from("sigma_min")], rows });
    r
}

/// Kernel pair of a `NotFat` scan.
pub fn flat_pair_certificate(report: &CheckReport) -> Option<(DVector<f64>, DVector<f64>)> {
    if report.verdict.as_deref() != Some("NotFat") {
        return None;
    }
    let x = report.get_certificate("x")?;
    let xi = report.get_certificate("xi")?;
    Some((DVector::from_column_slice(x), DVector::from_column_slice(xi)))
}

// ---------------------------------------------------------------------------
// flat pairs, Gronwall

/// If `A*_x nu0 = 0` the dual field stays in the kernel: reports
/// `max_t |A*_x nu(t)| / |nu0|` on `[-T, T]`.
pub fn flat_pair_persistence(
    metric: &AdaptedMetric,
    x: &DVector<f64>,
    nu0: &DVector<f64>,
    horizon: f64,
) -> Result<CheckReport> {
    let t = metric.triple();
    let tol = t.tolerances();
    let prop = holonomy::generators(metric, x)?;
    let nu0_q = t.q_coords(nu0)?;
    let n0 = metric.norm_q(&nu0_q);
    if !(n0 > 0.0) {
        return Err(Error::ZeroVector);
    }
    let tensors = OneillTensors::new(metric);
    let a = tensors.a_star_matrix(prop.direction_m());
    let start = (&a * &nu0_q).norm() / n0;
    if !(start < tol.kernel_eps) {
        return Err(Error::InvalidFlatPair(start));
    }
    let mut worst = 0.0f64;
    for s in symmetric_grid(horizon) {
        let w = prop.transform(s, FieldKind::Dual) * &nu0_q;
        worst = worst.max((&a * w).norm() / n0);
    }
    let mut r = CheckReport::new("flatgeo");
    r.residual("flat_pair_residual", worst, tol.tol_check)
        .stat("initial_residual", start)
        .stat("horizon", horizon)
        .certificate("x", prop.direction().as_slice())
        .certificate("nu0", nu0.as_slice());
    Ok(r)
}

/// `u(t) = |A*_x nu(t)|^2 <= u(0) e^{2 tau |t|} (1 + tol_check)` on `[-T, T]`;
/// the backward half runs the reversed geodesic `-x`.
///
/// A floor of `(kernel_eps |nu0|)^2` absorbs roundoff when `u(0) = 0`.
pub fn gronwall_check(
    metric: &AdaptedMetric,
    x: &DVector<f64>,
    nu0: &DVector<f64>,
    tau: f64,
    horizon: f64,
) -> Result<CheckReport> {
    let t = metric.triple();
    let tol = t.tolerances();
    let nu0_q = t.q_coords(nu0)?;
    let fwd = holonomy::generators(metric, x)?;
    let bwd = holonomy::generators(metric, &(-x))?;
    let tensors = OneillTensors::new(metric);
    let eps_norm = tol.kernel_eps * metric.norm_q(&nu0_q);
    let floor = eps_norm * eps_norm;
    let grid = holonomy::default_grid(horizon);
    let mut margin = f64::NEG_INFINITY;
    let (mut u0, mut u_max) = (0.0, 0.0f64);
    for prop in [&fwd, &bwd] {
        let a = tensors.a_star_matrix(prop.direction_m());
        u0 = (&a * &nu0_q).norm_squared();
        for &s in &grid {
            let u = (&a * (prop.transform(s, FieldKind::Dual) * &nu0_q)).norm_squared();
            let bound = u0 * libm::exp(2.0 * tau * s) * (1.0 + tol.tol_check) + floor;
            margin = margin.max(u - bound);
            if !u.is_finite() {
                margin = f64::NAN;
            }
            u_max = u_max.max(u);
        }
    }
    let mut r = CheckReport::new("gronwall");
    r.residual("gronwall_margin", margin, 0.0)
        .stat("tau", tau)
        .stat("u0", u0)
        .stat("u_max", u_max);
    Ok(r)
}

// ---------------------------------------------------------------------------
// scans over a cloud

fn cloud_pairs(cloud: &SampleCloud, limit: usize) -> impl Iterator<Item = (usize, &DVector<f64>, &DVector<f64>)> {
    cloud.pairs().take(limit)
}

/// `dual_relation_check` for every direction of the cloud.
pub fn dual_relation_scan(metric: &AdaptedMetric, cloud: &SampleCloud, grid: &[f64]) -> Result<CheckReport> {
    let tol = metric.triple().tolerances().tol_check;
    let (mut inv, mut dual, mut horiz) = (0.0f64, 0.0f64, 0.0f64);
    for x in &cloud.xs {
        let rep = holonomy::dual_relation_check(&holonomy::generators(metric, x)?, grid);
        inv = inv.max(rep.get("dual_inverse_adjoint").unwrap_or(f64::NAN));
        dual = dual.max(rep.get("generator_duality").unwrap_or(f64::NAN));
        horiz = horiz.max(rep.get("horizontal_consistency").unwrap_or(f64::NAN));
    }
    let mut r = CheckReport::new("dualrel");
    r.residual("dual_inverse_adjoint", inv, tol)
        .residual("generator_duality", dual, tol)
        .residual("horizontal_consistency", horiz, tol)
        .stat("directions", cloud.xs.len() as f64);
    Ok(r)
}

/// Curvature-identity residual over the first `limit` pairs of the cloud.
pub fn curvature_identity_scan(
    metric: &AdaptedMetric,
    cloud: &SampleCloud,
    grid: &[f64],
    limit: usize,
) -> Result<CheckReport> {
    let tol = metric.triple().tolerances().tol_check;
    let (mut worst, mut min_k) = (0.0f64, f64::INFINITY);
    let mut n = 0usize;
    for (_, x, xi) in cloud_pairs(cloud, limit) {
        let rep = holonomy::curvature_identity_residual(metric, x, xi, grid)?;
        worst = worst.max(rep.get("curvature_identity").unwrap_or(f64::NAN));
        min_k = min_k.min(rep.get("min_curvature").unwrap_or(f64::NAN));
        n += 1;
    }
    let mut r = CheckReport::new("eqK");
    r.residual("curvature_identity", worst, tol).stat("min_curvature", min_k).stat("pairs", n as f64);
    Ok(r)
}

/// Dual-field boundedness over the first `limit` pairs.
pub fn boundedness_scan(metric: &AdaptedMetric, cloud: &SampleCloud, horizon: f64, limit: usize) -> Result<CheckReport> {
    let tol = metric.triple().tolerances().tol_check;
    let (mut sup, mut re, mut abscissa) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut last: Option<(usize, HolonomyPropagator)> = None;
    let n_xi = cloud.xis.len().max(1);
    for (idx, x, xi) in cloud_pairs(cloud, limit) {
        let i = idx / n_xi;
        if last.as_ref().is_none_or(|(j, _)| *j != i) {
            last = Some((i, holonomy::generators(metric, x)?));
        }
        let rep = holonomy::boundedness_check(&last.as_ref().expect("set above").1, xi, horizon, FieldKind::Dual)?;
        sup = sup.max(rep.get("sup_norm_ratio").unwrap_or(f64::NAN));
        re = re.max(rep.get("spectrum_real_part").unwrap_or(f64::NAN));
        abscissa = abscissa.max(rep.get("spectral_abscissa").unwrap_or(f64::NAN));
    }
    let mut r = CheckReport::new("bounded");
    r.residual("spectrum_real_part", re, tol)
        .residual("sup_norm_ratio", sup, f64::MAX)
        .stat("spectral_abscissa", abscissa);
    Ok(r)
}

/// Gronwall bound over the first `limit` pairs.
pub fn gronwall_scan(metric: &AdaptedMetric, cloud: &SampleCloud, tau: f64, horizon: f64, limit: usize) -> Result<CheckReport> {
    let mut margin = f64::NEG_INFINITY;
    let mut u_max = 0.0f64;
    let mut n = 0usize;
    for (_, x, xi) in cloud_pairs(cloud, limit) {
        let rep = gronwall_check(metric, x, xi, tau, horizon)?;
        let m = rep.get("gronwall_margin").unwrap_or(f64::NAN);
        margin = if m.is_nan() || margin.is_nan() { f64::NAN } else { margin.max(m) };
        u_max = u_max.max(rep.get("u_max").unwrap_or(f64::NAN));
        n += 1;
    }
    let mut r = CheckReport::new("gronwall");
    r.residual("gronwall_margin", margin, 0.0).stat("tau", tau).stat("u_max", u_max).stat("pairs", n as f64);
    Ok(r)
}

// ---------------------------------------------------------------------------
// obstruction

/// Fatness scan, then for a kernel pair: persistence, curvature along the dual
/// field and boundedness. `kappa`, `min_curvature` and `sup_norm_ratio` are
/// empirical stand-ins for the existential constants of the argument.
pub fn obstruction_report(tensors: &OneillTensors, cloud: &SampleCloud, horizon: f64) -> Result<CheckReport> {
    let metric = tensors.metric();
    let t = metric.triple();
    let tol = *t.tolerances();
    let fat = fatness_scan(tensors, cloud, cloud.refine);
    let mut r = CheckReport::new("obstruction");
    if let Some(s) = fat.get("min_sigma") {
        r.stat("min_sigma", s);
    }
    match fat.verdict.as_deref() {
        Some("Fat") => {
            r.verdict("NoKernel");
            return Ok(r);
        }
        Some("NotFat") => {}
        _ => {
            r.verdict("Inconclusive").set_status(Status::Inconclusive);
            return Ok(r);
        }
    }
    // persistence needs WNN; totally geodesic fibres suffice
    if tensors.s_norm() > tol.tol_check {
        let est = estimate_wnn_tau(tensors, cloud);
        if !matches!(est.status, WnnStatus::Estimated | WnnStatus::Vacuous) {
            r.verdict("Inconclusive").set_status(Status::Inconclusive);
            return Ok(r);
        }
    }
    let (x, nu0) = flat_pair_certificate(&fat).expect("NotFat carries a certificate");
    let flat = flat_pair_persistence(metric, &x, &nu0, horizon)?;
    let prop = holonomy::generators(metric, &x)?;
    let bounded = holonomy::boundedness_check(&prop, &nu0, horizon, FieldKind::Dual)?;
    let nu0_q = t.q_coords(&nu0)?;
    let x_p = t.m_to_p(prop.direction_m());
    let n0 = metric.inner_q(&nu0_q, &nu0_q);
    let (mut min_k, mut max_n) = (f64::INFINITY, 0.0f64);
    for s in symmetric_grid(horizon) {
        let w = prop.transform(s, FieldKind::Dual) * &nu0_q;
        min_k = min_k.min(metric.sectional_p(&x_p, &t.q_to_p(&w)));
        max_n = max_n.max(metric.inner_q(&w, &w));
    }
    let sup = bounded.get("sup_norm_ratio").unwrap_or(f64::NAN);
    let kappa = 2.0 * min_k / max_n;
    // with K >= kappa |nu|^2 / 2 > 0 the norm would grow at least like cosh(sqrt(kappa) t)
    let growth = libm::cosh(libm::sqrt(kappa.max(0.0)) * horizon);
    r.residual("flat_pair_residual", flat.get("flat_pair_residual").unwrap_or(f64::NAN), tol.tol_check)
        .residual("spectrum_real_part", bounded.get("spectrum_real_part").unwrap_or(f64::NAN), tol.tol_check)
        .stat("sup_norm_ratio", sup)
        .stat("min_curvature", min_k)
        .stat("kappa", kappa)
        .stat("forced_growth", growth)
        .stat("contradiction_margin", growth - sup)
        .stat("max_nu_norm2", max_n / n0)
        .certificate("x", x.as_slice())
        .certificate("nu0", nu0.as_slice())
        .verdict("ObstructionWitnessed")
        .set_status(Status::Witnessed);
    Ok(r)
}
