//! Gray–O'Neill tensors of the submersion at the base point.
//!
//! Sign convention: `A_x y := pr_q(N_x y)`, which equals `1/2 pr_q [x, y]` and
//! does not depend on `P`. `A*_x` is its `g`-dual, `<A*_x xi, y> = <A_x y, xi>_g`,
//! and `S_x xi := -pr_q(N_xi x)`. The flow-bracket oracle in [`crate::oracle`]
//! confirms the sign of `A` against `1/2 [X, Y]^v` for horizontal extensions.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::connection::{AdaptedMetric, SubmersionTriple};
use crate::error::Result;
use crate::linalg;
use crate::report::{CheckReport, Status};
use crate::sampling::SampleCloud;

/// `A_x`, `A*_x`, `S_x` for every basis vector `x` of `m`.
#[derive(Debug, Clone)]
pub struct OneillTensors {
    metric: AdaptedMetric,
    /// `A_{m_i}`: m-coords -> q-coords.
    a: Vec<DMatrix<f64>>,
    /// `A*_{m_i}`: q-coords -> m-coords.
    a_star: Vec<DMatrix<f64>>,
    /// `S_{m_i}`: q-coords -> q-coords.
    s: Vec<DMatrix<f64>>,
}

impl OneillTensors {
    pub fn new(metric: &AdaptedMetric) -> Self {
        let t = metric.triple().clone();
        let (dq, dm) = (t.dim_q(), t.dim_m());
        let mut a = Vec::with_capacity(dm);
        let mut a_star = Vec::with_capacity(dm);
        let mut s = Vec::with_capacity(dm);
        let nomizu_q: Vec<DMatrix<f64>> = (0..dq)
            .map(|j| metric.nomizu_p(&t.q_to_p(&unit(dq, j))))
            .collect();
        for i in 0..dm {
            let x_p = t.m_to_p(&unit(dm, i));
            let nx = metric.nomizu_p(&x_p);
            // rows 0..dq are the q-part, columns dq.. are the m-inputs
            let ai = nx.view((0, dq), (dq, dm)).clone_owned();
            a_star.push(ai.transpose() * metric.p());
            a.push(ai);
            let mut si = DMatrix::zeros(dq, dq);
            for (j, nq) in nomizu_q.iter().enumerate() {
                let v = nq * &x_p;
                si.set_column(j, &(-v.rows(0, dq)));
            }
            s.push(si);
        }
        OneillTensors { metric: metric.clone(), a, a_star, s }
    }

    pub fn metric(&self) -> &AdaptedMetric {
        &self.metric
    }

    pub fn triple(&self) -> &Arc<SubmersionTriple> {
        self.metric.triple()
    }

    fn combine(table: &[DMatrix<f64>], x_m: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows, cols);
        for (m, c) in table.iter().zip(x_m.iter()) {
            if *c != 0.0 {
                out += m * *c;
            }
        }
        out
    }

    /// Matrix of `A_x` (m -> q) for `x` in m-coordinates.
    pub fn a_matrix(&self, x_m: &DVector<f64>) -> DMatrix<f64> {
        let t = self.triple();
        Self::combine(&self.a, x_m, t.dim_q(), t.dim_m())
    }

    /// Matrix of `A*_x` (q -> m) for `x` in m-coordinates.
    pub fn a_star_matrix(&self, x_m: &DVector<f64>) -> DMatrix<f64> {
        let t = self.triple();
        Self::combine(&self.a_star, x_m, t.dim_m(), t.dim_q())
    }

    /// Matrix of `S_x` (q -> q) for `x` in m-coordinates.
    pub fn s_matrix(&self, x_m: &DVector<f64>) -> DMatrix<f64> {
        let t = self.triple();
        Self::combine(&self.s, x_m, t.dim_q(), t.dim_q())
    }

    /// `(nabla_z A*)_x xi` in coordinates (z, x in m-coords, xi in q-coords).
    pub fn nabla_a_star_coords(&self, z: &DVector<f64>, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
        let t = self.triple();
        let nz = self.metric.nomizu_p(&t.m_to_p(z));
        let axi = self.a_star_matrix(x) * xi;
        let term1 = t.p_m_part(&(&nz * t.m_to_p(&axi)));
        let nzx = t.p_m_part(&(&nz * t.m_to_p(x)));
        let term2 = self.a_star_matrix(&nzx) * xi;
        let nzxi = t.p_q_part(&(&nz * t.q_to_p(xi)));
        let term3 = self.a_star_matrix(x) * nzxi;
        term1 - term2 - term3
    }

    /// Largest `|S_x|` over the basis of `m`.
    pub fn s_norm(&self) -> f64 {
        self.s.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// `A_x y = pr_q(N_x y)` for horizontal `x, y`.
pub fn a_tensor(tensors: &OneillTensors, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let t = tensors.triple();
    let (x, y) = (t.m_coords(x)?, t.m_coords(y)?);
    Ok(t.from_q(&(tensors.a_matrix(&x) * y)))
}

/// `A*_x xi`, the `g`-dual of `A_x`.
pub fn a_star(tensors: &OneillTensors, x: &DVector<f64>, xi: &DVector<f64>) -> Result<DVector<f64>> {
    let t = tensors.triple();
    let (x, xi) = (t.m_coords(x)?, t.q_coords(xi)?);
    Ok(t.from_m(&(tensors.a_star_matrix(&x) * xi)))
}

/// `S_x xi = -pr_q(N_xi x)`.
pub fn s_tensor(tensors: &OneillTensors, x: &DVector<f64>, xi: &DVector<f64>) -> Result<DVector<f64>> {
    let t = tensors.triple();
    let (x, xi) = (t.m_coords(x)?, t.q_coords(xi)?);
    Ok(t.from_q(&(tensors.s_matrix(&x) * xi)))
}

/// `(nabla_z A*)_x xi = pr_m(N_z A*_x xi) - A*_{pr_m N_z x} xi - A*_x pr_q(N_z xi)`.
pub fn nabla_a_star(
    tensors: &OneillTensors,
    z: &DVector<f64>,
    x: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let t = tensors.triple();
    let (z, x, xi) = (t.m_coords(z)?, t.m_coords(x)?, t.q_coords(xi)?);
    Ok(t.from_m(&tensors.nabla_a_star_coords(&z, &x, &xi)))
}

/// Pointwise tensor identities: antisymmetry of `A`, duality, `A*_x xi ⊥ x`,
/// `g`-symmetry of `S`.
pub fn invariants_report(tensors: &OneillTensors) -> CheckReport {
    let t = tensors.triple();
    let g = tensors.metric();
    let (dq, dm) = (t.dim_q(), t.dim_m());
    let tol = t.tolerances().tol_check;
    let (mut antisym, mut duality, mut orth, mut s_sym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..dm {
        let x = unit(dm, i);
        let ax = tensors.a_matrix(&x);
        let asx = tensors.a_star_matrix(&x);
        let sx = tensors.s_matrix(&x);
        antisym = antisym.max((&ax * &x).amax());
        for j in 0..dm {
            let y = unit(dm, j);
            for k in 0..dq {
                let xi = unit(dq, k);
                let lhs = (&asx * &xi).dot(&y);
                let rhs = g.inner_q(&(&ax * &y), &xi);
                duality = duality.max((lhs - rhs).abs());
            }
        }
        for k in 0..dq {
            let xi = unit(dq, k);
            orth = orth.max((&asx * &xi).dot(&x).abs());
            for l in 0..dq {
                let eta = unit(dq, l);
                let d = g.inner_q(&(&sx * &xi), &eta) - g.inner_q(&xi, &(&sx * &eta));
                s_sym = s_sym.max(d.abs());
            }
        }
    }
    let mut r = CheckReport::new("tensors.oneill");
    r.residual("a_antisymmetry", antisym, tol)
        .residual("a_star_duality", duality, tol)
        .residual("a_star_orthogonal_to_x", orth, tol)
        .residual("s_g_symmetry", s_sym, tol)
        .stat("s_max_abs", tensors.s_norm());
    r
}

/// With totally geodesic fibres: `R(X, A*_X xi, xi, X) = <(nabla_X A*)_X xi, A*_X xi>`
/// and `K(xi, X) = |A*_X xi|^2` on sampled pairs.
pub fn tg_identity_check(tensors: &OneillTensors, cloud: &SampleCloud) -> CheckReport {
    let t = tensors.triple();
    let g = tensors.metric();
    let tol = t.tolerances().tol_check;
    let s_norm = tensors.s_norm();
    if s_norm > tol {
        let mut r = CheckReport::not_applicable("tg_identity", "fibres are not totally geodesic (S != 0)");
        r.stat("s_max_abs", s_norm);
        return r;
    }
    let (mut mixed, mut vertizontal, mut count) = (0.0f64, 0.0f64, 0usize);
    for (_, x, xi) in cloud.pairs().take(100) {
        let x_m = t.m_space().coords(x);
        let xi_q = t.q_space().coords(xi);
        let asx = tensors.a_star_matrix(&x_m) * &xi_q;
        let (x_p, xi_p, as_p) = (t.m_to_p(&x_m), t.q_to_p(&xi_q), t.m_to_p(&asx));
        // R(X, Y, Z, W) = <R(X, Y) Z, W>
        let lhs = g.inner_p(&g.curvature_p(&x_p, &as_p, &xi_p), &x_p);
        let rhs = tensors.nabla_a_star_coords(&x_m, &x_m, &xi_q).dot(&asx);
        mixed = mixed.max((lhs - rhs).abs());
        let k = g.sectional_p(&xi_p, &x_p);
        vertizontal = vertizontal.max((k - asx.norm_squared()).abs());
        count += 1;
    }
    let mut r = CheckReport::new("tg_identity");
    r.residual("mixed_curvature_identity", mixed, tol)
        .residual("vertizontal_curvature_identity", vertizontal, tol)
        .stat("samples", count as f64);
    if count == 0 {
        r.set_status(Status::NotApplicable).verdict("no vertizontal pairs");
    }
    r
}

/// Gray–O'Neill horizontal equation `K_B(x, y) = K_M(x, y) + 3 |A_x y|^2_g`.
/// Returns `(K_B, K_M, |A_x y|^2_g)` with `K_B` from the normal metric on `G/H`.
pub fn gray_oneill_horizontal(tensors: &OneillTensors, x: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, f64, f64)> {
    let t = tensors.triple();
    let (xm, ym) = (t.m_coords(x)?, t.m_coords(y)?);
    let base = AdaptedMetric::normal(Arc::new(t.base()?));
    let k_base = crate::connection::sectional_curvature(&base, x, y)?;
    let g = tensors.metric();
    let k_total = g.sectional_p(&t.m_to_p(&xm), &t.m_to_p(&ym));
    let axy = tensors.a_matrix(&xm) * ym;
    Ok((k_base, k_total, g.inner_q(&axy, &axy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Scenario};
    use crate::Tolerances;
    use approx::assert_relative_eq;

    fn tensors(s: Scenario, p: Option<DMatrix<f64>>) -> OneillTensors {
        let t = Arc::new(catalog::triple(s, Tolerances::default()).unwrap());
        let g = match p {
            Some(p) => AdaptedMetric::new(t, p).unwrap(),
            None => AdaptedMetric::normal(t),
        };
        OneillTensors::new(&g)
    }

    #[test]
    fn hopf_values() {
        let o = tensors(Scenario::Hopf, None);
        let alg = o.triple().algebra().clone();
        let e = |i| alg.unit(i);
        assert_relative_eq!(a_tensor(&o, &e(1), &e(2)).unwrap(), e(0) * 0.5, epsilon = 1e-15);
        assert_eq!(a_tensor(&o, &e(1), &e(1)).unwrap().norm(), 0.0);
        assert_relative_eq!(a_star(&o, &e(1), &e(0)).unwrap(), e(2) * 0.5, epsilon = 1e-15);

        let o2 = tensors(Scenario::Hopf, Some(DMatrix::from_element(1, 1, 2.0)));
        assert_relative_eq!(a_star(&o2, &e(1), &e(0)).unwrap(), e(2), epsilon = 1e-15);
        // A itself does not see P
        assert_relative_eq!(a_tensor(&o2, &e(1), &e(2)).unwrap(), e(0) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn totally_geodesic_fibres_for_every_invariant_p() {
        for (s, p) in [
            (Scenario::Hopf, DMatrix::from_element(1, 1, 2.0)),
            (Scenario::So4S3, DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0, 1.0]))),
        ] {
            let o = tensors(s, Some(p));
            assert!(o.s_norm() < 1e-15, "{s}: {}", o.s_norm());
        }
        let o = tensors(Scenario::Torus, None);
        assert_eq!(o.s_norm(), 0.0);
    }

    #[test]
    fn so4_kernel_pair() {
        let o = tensors(Scenario::So4S3, None);
        let alg = o.triple().algebra().clone();
        let l = |s| alg.unit(alg.label_index(s).unwrap());
        assert_eq!(a_star(&o, &l("L14"), &l("L23")).unwrap().norm(), 0.0);
        assert!(a_star(&o, &l("L14"), &l("L12")).unwrap().norm() > 0.4);
    }

    #[test]
    fn nabla_a_star_vanishes_on_hopf_flow() {
        let o = tensors(Scenario::Hopf, None);
        let alg = o.triple().algebra().clone();
        let e = |i| alg.unit(i);
        let d = nabla_a_star(&o, &e(1), &e(1), &e(0)).unwrap();
        let a = a_star(&o, &e(1), &e(0)).unwrap();
        assert!(d.dot(&a).abs() < 1e-15);
        let u = tensors(Scenario::Torus, None);
        let alg = u.triple().algebra().clone();
        assert_eq!(nabla_a_star(&u, &alg.unit(1), &alg.unit(1), &alg.unit(0)).unwrap().norm(), 0.0);
    }

    #[test]
    fn tensor_identities_hold() {
        for s in catalog::ALL {
            let o = tensors(s, None);
            let r = invariants_report(&o);
            assert!(r.passed(), "{s}: {r:?}");
            assert!(r.get("a_star_duality").unwrap() < 1e-12);
        }
    }

    #[test]
    fn tg_identities_on_hopf() {
        let o = tensors(Scenario::Hopf, None);
        let cloud = SampleCloud::new(o.metric(), 3, 10, 10);
        let r = tg_identity_check(&o, &cloud);
        assert!(r.passed(), "{r:?}");
        assert!(r.get("vertizontal_curvature_identity").unwrap() < 1e-10);
        let u = tensors(Scenario::Torus, None);
        let r = tg_identity_check(&u, &SampleCloud::new(u.metric(), 3, 4, 4));
        assert!(r.passed());
        assert_eq!(r.get("vertizontal_curvature_identity"), Some(0.0));
    }

    #[test]
    fn gray_oneill_on_hopf() {
        let o = tensors(Scenario::Hopf, None);
        let alg = o.triple().algebra().clone();
        let (kb, km, a2) = gray_oneill_horizontal(&o, &alg.unit(1), &alg.unit(2)).unwrap();
        assert_relative_eq!(kb, 1.0, epsilon = 1e-14);
        assert_relative_eq!(km, 0.25, epsilon = 1e-14);
        assert_relative_eq!(a2, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn rejects_wrong_blocks() {
        let o = tensors(Scenario::Hopf, None);
        let alg = o.triple().algebra().clone();
        use crate::Error;
        assert!(matches!(a_star(&o, &alg.unit(0), &alg.unit(0)), Err(Error::NotHorizontal(_))));
        assert!(matches!(a_star(&o, &alg.unit(1), &alg.unit(2)), Err(Error::NotVertical(_))));
        assert!(matches!(s_tensor(&o, &alg.unit(1), &alg.unit(2)), Err(Error::NotVertical(_))));
    }
}
