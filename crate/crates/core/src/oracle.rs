//! Finite-difference oracles in exponential coordinates `u -> exp(u) o`.
//!
//! These never touch the Nomizu formula. The metric in coordinates is built
//! from the translated frame `W_u`, `W_u v = pr_p(exp(-U) d/ds exp(U + sV))`,
//! where the directional derivative of the matrix exponential is read off the
//! block exponential `exp([[U, V], [0, U]])`. Christoffel symbols then come from
//! central differences of the metric, one Richardson refinement per level.

use alloc::vec::Vec;
use core::cell::OnceCell;
use core::ops::{Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::connection::{curvature_tensor, nomizu_operator, AdaptedMetric};
use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::oneill::{self, OneillTensors};
use crate::report::CheckReport;
use crate::sampling::{self, SampleCloud};

pub const DEFAULT_STEP: f64 = 1e-5;
/// Curvature needs second derivatives of the metric; a larger step keeps the
/// nested round-off near 1e-10.
pub const DEFAULT_CURVATURE_STEP: f64 = 1e-3;
pub const MIN_STEP: f64 = 1e-9;

/// Field along the geodesic `t -> exp(t x) o`, given at `t = 0`.
#[derive(Debug, Clone)]
pub enum FieldSpec {
    /// Translated by the one-parameter group: constant pulled-back coefficients.
    Invariant(DVector<f64>),
    /// Parallel along the geodesic, using the transport `exp(-t N_x)` under test.
    Parallel(DVector<f64>),
}

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
fn derivative<T, F>(f: F, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    let coarse = (f(h) - f(-h)) * (0.5 / h);
    let fine = (f(0.5 * h) - f(-0.5 * h)) * (1.0 / h);
    (fine * 4.0 - coarse) * (1.0 / 3.0)
}

pub struct FdOracle<'a> {
    metric: &'a AdaptedMetric,
    h: f64,
    p_matrices: Vec<DMatrix<f64>>,
    gamma0: OnceCell<Vec<DMatrix<f64>>>,
}

impl<'a> FdOracle<'a> {
    pub fn new(metric: &'a AdaptedMetric, h: f64) -> Result<Self> {
        if !(h >= MIN_STEP) {
            return Err(Error::StepTooSmall(h));
        }
        let t = metric.triple();
        let alg = t.algebra();
        let p_matrices = (0..t.dim_p()).map(|i| alg.to_matrix(&t.p_space().vector(i))).collect();
        Ok(FdOracle { metric, h, p_matrices, gamma0: OnceCell::new() })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// `W_u` on p-coordinates.
    fn frame(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let t = self.metric.triple();
        let alg = t.algebra();
        let dp = t.dim_p();
        let size = alg.matrix_size();
        let um = alg.to_matrix(&t.from_p(u));
        let back = expm(&(-&um));
        let mut w = DMatrix::zeros(dp, dp);
        let mut block = DMatrix::zeros(2 * size, 2 * size);
        block.view_mut((0, 0), (size, size)).copy_from(&um);
        block.view_mut((size, size), (size, size)).copy_from(&um);
        for (j, v) in self.p_matrices.iter().enumerate() {
            block.view_mut((0, size), (size, size)).copy_from(v);
            let e = expm(&block);
            let d = e.view((0, size), (size, size)).clone_owned();
            let omega = &back * d;
            w.set_column(j, &t.p_space().coords(&alg.coords_of(&omega)));
        }
        w
    }

    fn metric_at(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let w = self.frame(u);
        w.transpose() * self.metric.gram_p() * w
    }

    /// `gamma[i][(k, j)] = Gamma^k_ij` at `u`, using step `h`.
    fn christoffel(&self, u: &DVector<f64>, h: f64) -> Vec<DMatrix<f64>> {
        let dp = u.len();
        let dg: Vec<DMatrix<f64>> = (0..dp)
            .map(|i| {
                derivative(
                    |s| {
                        let mut v = u.clone();
                        v[i] += s;
                        self.metric_at(&v)
                    },
                    h,
                )
            })
            .collect();
        let ginv = self.metric_at(u).try_inverse().expect("metric is positive-definite near o");
        (0..dp)
            .map(|i| {
                let mut low = DMatrix::zeros(dp, dp); // (l, j)
                for l in 0..dp {
                    for j in 0..dp {
                        low[(l, j)] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                }
                &ginv * low
            })
            .collect()
    }

    /// Christoffel symbols at `o` for the oracle's own step, computed once.
    fn gamma_origin(&self) -> &[DMatrix<f64>] {
        self.gamma0.get_or_init(|| self.christoffel(&DVector::zeros(self.p_matrices.len()), self.h))
    }

    fn contract(gamma: &[DMatrix<f64>], x: &DVector<f64>) -> DMatrix<f64> {
        let dp = x.len();
        let mut m = DMatrix::zeros(dp, dp);
        for (g, c) in gamma.iter().zip(x.iter()) {
            m += g * *c;
        }
        m
    }

    /// Covariant derivative along `exp(t x) o` at `t = 0`, in algebra coordinates.
    pub fn covariant_derivative(&self, x: &DVector<f64>, field: &FieldSpec) -> Result<DVector<f64>> {
        let t = self.metric.triple();
        let x_p = t.p_coords(x)?;
        let (w0, generator) = match field {
            FieldSpec::Invariant(w) => (t.p_coords(w)?, None),
            FieldSpec::Parallel(w) => (t.p_coords(w)?, Some(-self.metric.nomizu_p(&x_p))),
        };
        let pulled = |s: f64| {
            let w = match &generator {
                Some(m) => expm(&(m * s)) * &w0,
                None => w0.clone(),
            };
            self.frame(&(&x_p * s)).lu().solve(&w).expect("frame is invertible near o")
        };
        let dv = derivative(pulled, self.h);
        Ok(t.from_p(&(dv + Self::contract(self.gamma_origin(), &x_p) * w0)))
    }

    /// `1/2 [X, Y]^v` for the horizontal extensions `u -> W_u^{-1} x`.
    pub fn a_tensor(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        let t = self.metric.triple();
        let (xm, ym) = (t.m_coords(x)?, t.m_coords(y)?);
        let (xp, yp) = (t.m_to_p(&xm), t.m_to_p(&ym));
        let ext = |dir: &DVector<f64>, field: &DVector<f64>| {
            derivative(|s| self.frame(&(dir * s)).lu().solve(field).expect("invertible"), self.h)
        };
        let bracket = ext(&xp, &yp) - ext(&yp, &xp);
        Ok(t.from_q(&(t.p_q_part(&bracket) * 0.5)))
    }

    /// `(nabla_z A*)_x xi` with the output projected to `m`, by differentiating
    /// the coordinate expression of the invariant tensor `A*`.
    pub fn nabla_a_star(
        &self,
        tensors: &OneillTensors,
        z: &DVector<f64>,
        x: &DVector<f64>,
        xi: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let t = self.metric.triple();
        let (zm, xm, xiq) = (t.m_coords(z)?, t.m_coords(x)?, t.q_coords(xi)?);
        let (zp, xp, xip) = (t.m_to_p(&zm), t.m_to_p(&xm), t.q_to_p(&xiq));
        let at_origin = |a: &DVector<f64>, b: &DVector<f64>| {
            let r = tensors.a_star_matrix(&t.p_m_part(a)) * t.p_q_part(b);
            t.m_to_p(&r)
        };
        let field = |s: f64| {
            let w = self.frame(&(&zp * s));
            let r = at_origin(&(&w * &xp), &(&w * &xip));
            w.lu().solve(&r).expect("invertible")
        };
        let d = derivative(field, self.h);
        let gz = Self::contract(self.gamma_origin(), &zp);
        let full = d + &gz * at_origin(&xp, &xip) - at_origin(&(&gz * &xp), &xip) - at_origin(&xp, &(&gz * &xip));
        Ok(t.from_m(&t.p_m_part(&full)))
    }

    /// Full curvature tensor at `o` from second differences of the metric.
    pub fn curvature(&self, h: f64) -> Result<CurvatureOracle> {
        if !(h >= MIN_STEP) {
            return Err(Error::StepTooSmall(h));
        }
        let dp = self.metric.triple().dim_p();
        let origin = DVector::zeros(dp);
        let gamma0 = self.christoffel(&origin, h);
        let dgamma: Vec<Vec<DMatrix<f64>>> = (0..dp)
            .map(|i| {
                // derivative of the whole table along e_i, packed as one tall matrix
                let packed = derivative(
                    |s| {
                        let mut u = origin.clone();
                        u[i] += s;
                        let g = self.christoffel(&u, h);
                        let mut out = DMatrix::zeros(dp * dp, dp);
                        for (j, gj) in g.iter().enumerate() {
                            out.view_mut((j * dp, 0), (dp, dp)).copy_from(gj);
                        }
                        out
                    },
                    h,
                );
                (0..dp).map(|j| packed.view((j * dp, 0), (dp, dp)).clone_owned()).collect()
            })
            .collect();
        Ok(CurvatureOracle { metric: self.metric.clone(), gamma0, dgamma })
    }
}

/// Convenience wrapper with an explicit step.
pub fn fd_connection_oracle(
    metric: &AdaptedMetric,
    x: &DVector<f64>,
    field: &FieldSpec,
    h: f64,
) -> Result<DVector<f64>> {
    FdOracle::new(metric, h)?.covariant_derivative(x, field)
}

/// Curvature assembled from finite-difference Christoffel symbols.
#[derive(Debug, Clone)]
pub struct CurvatureOracle {
    metric: AdaptedMetric,
    gamma0: Vec<DMatrix<f64>>,
    /// `dgamma[i][j] = d/du_i Gamma_j`.
    dgamma: Vec<Vec<DMatrix<f64>>>,
}

impl CurvatureOracle {
    fn curvature_p(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let dp = x.len();
        let mut dxy = DMatrix::zeros(dp, dp);
        let mut dyx = DMatrix::zeros(dp, dp);
        for i in 0..dp {
            for j in 0..dp {
                dxy += &self.dgamma[i][j] * (x[i] * y[j]);
                dyx += &self.dgamma[i][j] * (y[i] * x[j]);
            }
        }
        let gx = FdOracle::contract(&self.gamma0, x);
        let gy = FdOracle::contract(&self.gamma0, y);
        (dxy - dyx + &gx * &gy - &gy * &gx) * z
    }

    /// `R(x, y) z` in algebra coordinates.
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        let t = self.metric.triple();
        let (x, y, z) = (t.p_coords(x)?, t.p_coords(y)?, t.p_coords(z)?);
        Ok(t.from_p(&self.curvature_p(&x, &y, &z)))
    }

    pub fn sectional(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        let t = self.metric.triple();
        let (xp, yp) = (t.p_coords(x)?, t.p_coords(y)?);
        Ok(self.metric.inner_p(&self.curvature_p(&xp, &yp, &yp), &xp))
    }
}

/// Agreement tolerance between the algebraic formulas and the oracle.
pub const ORACLE_TOL: f64 = 1e-4;

/// Nomizu operator, `A`, `nabla A*` and curvature against the oracle on the first
/// `limit` pairs of the cloud. Errors are `|alg - fd| / max(|fd|, 1)` for unit inputs.
pub fn oracle_report(tensors: &OneillTensors, cloud: &SampleCloud, limit: usize) -> Result<CheckReport> {
    let metric = tensors.metric();
    let t = metric.triple();
    let o = FdOracle::new(metric, DEFAULT_STEP)?;
    let curv = o.curvature(DEFAULT_CURVATURE_STEP)?;
    let mut r = sampling::rng(cloud.seed ^ 0x04ac_1e00);
    let unit_p = |r: &mut rand_chacha::ChaCha8Rng| {
        let v = sampling::gaussian(r, t.dim_p());
        t.from_p(&(&v / v.norm()))
    };
    let unit_m = |r: &mut rand_chacha::ChaCha8Rng| {
        let v = sampling::gaussian(r, t.dim_m());
        t.from_m(&(&v / v.norm()))
    };
    let err = |a: &DVector<f64>, b: &DVector<f64>| (a - b).norm() / b.norm().max(1.0);
    let (mut e_n, mut e_a, mut e_na, mut e_r) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut n = 0usize;
    for (_, x, xi) in cloud.pairs().take(limit) {
        let (w, z) = (unit_p(&mut r), unit_p(&mut r));
        let zx = t.from_p(&t.p_coords(&(x + xi))?.normalize());
        let nom = t.from_p(&(nomizu_operator(metric, &zx)?.matrix * t.p_coords(&w)?));
        e_n = e_n.max(err(&nom, &o.covariant_derivative(&zx, &FieldSpec::Invariant(w.clone()))?));
        let y = unit_m(&mut r);
        e_a = e_a.max(err(&oneill::a_tensor(tensors, x, &y)?, &o.a_tensor(x, &y)?));
        let zm = unit_m(&mut r);
        e_na = e_na.max(err(&oneill::nabla_a_star(tensors, &zm, x, xi)?, &o.nabla_a_star(tensors, &zm, x, xi)?));
        e_r = e_r.max(err(&curvature_tensor(metric, x, xi, &z)?, &curv.curvature(x, xi, &z)?));
        n += 1;
    }
    let mut rep = CheckReport::new("tensors.oracle");
    rep.residual("nomizu_vs_fd", e_n, ORACLE_TOL)
        .residual("a_tensor_vs_fd", e_a, ORACLE_TOL)
        .residual("nabla_a_star_vs_fd", e_na, ORACLE_TOL)
        .residual("curvature_vs_fd", e_r, ORACLE_TOL)
        .stat("samples", n as f64);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Scenario};
    use crate::sampling::{gaussian, rng};
    use crate::Tolerances;
    use alloc::sync::Arc;

    fn metric(s: Scenario, p: Option<DMatrix<f64>>) -> AdaptedMetric {
        let t = Arc::new(catalog::triple(s, Tolerances::default()).unwrap());
        match p {
            Some(p) => AdaptedMetric::new(t, p).unwrap(),
            None => AdaptedMetric::normal(t),
        }
    }

    fn random_p(g: &AdaptedMetric, seed: u64) -> DVector<f64> {
        let t = g.triple();
        t.from_p(&gaussian(&mut rng(seed), t.dim_p()))
    }

    #[test]
    fn step_floor() {
        let g = metric(Scenario::Hopf, None);
        assert!(matches!(FdOracle::new(&g, 1e-10), Err(Error::StepTooSmall(_))));
        assert!(FdOracle::new(&g, 1e-9).is_ok());
    }

    #[test]
    fn abelian_oracle_is_zero() {
        let g = metric(Scenario::Torus, None);
        let alg = g.triple().algebra().clone();
        let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
        let d = o.covariant_derivative(&alg.unit(1), &FieldSpec::Invariant(alg.unit(0))).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn nomizu_matches_oracle_on_su2() {
        for p in [None, Some(DMatrix::from_element(1, 1, 2.0))] {
            let g = metric(Scenario::Hopf, p);
            let t = g.triple().clone();
            let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
            for seed in 0..6 {
                let (z, w) = (random_p(&g, seed), random_p(&g, 100 + seed));
                let n = nomizu_operator(&g, &z).unwrap();
                let expected = t.from_p(&(&n.matrix * t.p_coords(&w).unwrap()));
                let got = o.covariant_derivative(&z, &FieldSpec::Invariant(w)).unwrap();
                let rel = (&got - &expected).norm() / expected.norm().max(1e-300);
                assert!(rel < 1e-5, "seed {seed}: {rel:e}");
            }
        }
    }

    #[test]
    fn parallel_field_has_zero_derivative() {
        let g = metric(Scenario::So4S3, Some(DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0, 1.0]))));
        let t = g.triple().clone();
        let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
        let x = t.from_m(&gaussian(&mut rng(1), 3));
        let d = o.covariant_derivative(&x, &FieldSpec::Parallel(random_p(&g, 2))).unwrap();
        assert!(d.norm() < 1e-8, "{}", d.norm());
    }

    #[test]
    fn so4_bi_invariant_half_bracket() {
        let g = metric(Scenario::So4S3, None);
        let alg = g.triple().algebra().clone();
        let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
        let (z, w) = (random_p(&g, 5), random_p(&g, 6));
        let got = o.covariant_derivative(&z, &FieldSpec::Invariant(w.clone())).unwrap();
        let expected = alg.bracket(&z, &w).unwrap() * 0.5;
        assert!((got - expected).norm() < 1e-5);
    }

    #[test]
    fn flow_bracket_fixes_a_sign() {
        let g = metric(Scenario::Hopf, None);
        let alg = g.triple().algebra().clone();
        let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
        let got = o.a_tensor(&alg.unit(1), &alg.unit(2)).unwrap();
        assert!((got - alg.unit(0) * 0.5).norm() < 1e-9);
        let tensors = oneill::OneillTensors::new(&g);
        let t = g.triple().clone();
        for seed in 0..4 {
            let x = t.from_m(&gaussian(&mut rng(seed), 2));
            let y = t.from_m(&gaussian(&mut rng(seed + 50), 2));
            let a = oneill::a_tensor(&tensors, &x, &y).unwrap();
            assert!((o.a_tensor(&x, &y).unwrap() - a).norm() < 1e-9);
        }
    }

    #[test]
    fn nabla_a_star_matches_oracle() {
        let p = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0, 1.5]));
        for g in [metric(Scenario::So4S3, None), metric(Scenario::So4S3, Some(p))] {
            let t = g.triple().clone();
            let tensors = oneill::OneillTensors::new(&g);
            let o = FdOracle::new(&g, DEFAULT_STEP).unwrap();
            for seed in 0..5 {
                let mut r = rng(seed);
                let z = t.from_m(&gaussian(&mut r, 3));
                let x = t.from_m(&gaussian(&mut r, 3));
                let xi = t.from_q(&gaussian(&mut r, 3));
                let alg = oneill::nabla_a_star(&tensors, &z, &x, &xi).unwrap();
                let fd = o.nabla_a_star(&tensors, &z, &x, &xi).unwrap();
                let scale = alg.norm().max(z.norm() * x.norm() * xi.norm());
                assert!((&alg - &fd).norm() / scale < 1e-5, "{alg} vs {fd}");
            }
        }
    }

    #[test]
    fn curvature_matches_oracle_on_hopf() {
        let g = metric(Scenario::Hopf, Some(DMatrix::from_element(1, 1, 0.7)));
        let o = FdOracle::new(&g, DEFAULT_STEP).unwrap().curvature(DEFAULT_CURVATURE_STEP).unwrap();
        for seed in 0..4 {
            let (x, y, z) = (random_p(&g, seed), random_p(&g, seed + 10), random_p(&g, seed + 20));
            let alg = curvature_tensor(&g, &x, &y, &z).unwrap();
            let fd = o.curvature(&x, &y, &z).unwrap();
            assert!((&alg - &fd).norm() < 1e-6 * alg.norm().max(1.0), "{alg} vs {fd}");
        }
    }
}
