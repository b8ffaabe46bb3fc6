//! Levi-Civita machinery for invariant adapted metrics on `G/K`.
//!
//! Tangent vectors at the base point `o` are modelled by `p = q + m`. Public
//! functions take and return coefficient vectors in the algebra basis; internally
//! everything runs in "p-coordinates": the `q` coordinates followed by the `m`
//! coordinates, both taken in the orthonormal bases stored on the subspaces.
//! In p-coordinates the metric is `blockdiag(P, I)`.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liealg::{LieAlgebraBasis, Subspace};
use crate::linalg;
use crate::report::CheckReport;
use crate::Tolerances;

/// `k < h < g` as the orthogonal splitting `g = k + q + m` with `h = k + q`.
#[derive(Debug, Clone)]
pub struct SubmersionTriple {
    name: String,
    algebra: Arc<LieAlgebraBasis>,
    k_space: Subspace,
    q_space: Subspace,
    m_space: Subspace,
    p_space: Subspace,
    tol: Tolerances,
    /// `pr_p [b_i, .]` on p-coordinates, one matrix per p-basis vector `b_i`.
    p_ad: Vec<DMatrix<f64>>,
}

impl SubmersionTriple {
    /// Builds the triple from `k` and `h`; `q` is the complement of `k` in `h`
    /// and `m` the complement of `h` in `g`.
    pub fn new(
        name: &str,
        algebra: Arc<LieAlgebraBasis>,
        k_space: Subspace,
        h_space: &Subspace,
        tol: Tolerances,
    ) -> Result<Self> {
        let k_in_h = (0..k_space.rank())
            .map(|i| h_space.distance(&k_space.vector(i)))
            .fold(0.0, f64::max);
        if k_in_h > tol.tol_struct {
            return Err(Error::InvalidSubspace("k is not contained in h".to_string()));
        }
        // q = h minus k
        let q_cols: Vec<DVector<f64>> = {
            let k_basis = k_space.basis_matrix();
            let mut cols: Vec<DVector<f64>> = Vec::new();
            let joint = linalg::orthogonal_complement(k_basis, algebra.dim());
            // project h onto the complement of k and orthonormalize
            let proj = &joint * (joint.transpose() * h_space.basis_matrix());
            let svd = proj.svd(true, false);
            if let Some(u) = svd.u {
                for (i, s) in svd.singular_values.iter().enumerate() {
                    if *s > 1e-8 {
                        cols.push(u.column(i).clone_owned());
                    }
                }
            }
            cols
        };
        let q_space = Subspace::from_vectors(&algebra, &q_cols)?;
        let m_space = Subspace::complement(&algebra, &[&k_space, &q_space])?;
        Self::from_parts(name, algebra, k_space, q_space, m_space, tol)
    }

    /// Builds the triple from an explicit orthogonal splitting.
    pub fn from_parts(
        name: &str,
        algebra: Arc<LieAlgebraBasis>,
        k_space: Subspace,
        q_space: Subspace,
        m_space: Subspace,
        tol: Tolerances,
    ) -> Result<Self> {
        let n = algebra.dim();
        let total = k_space.rank() + q_space.rank() + m_space.rank();
        if total != n {
            return Err(Error::DimensionMismatch { expected: n, found: total });
        }
        let p_space = Subspace::direct_sum(&[&q_space, &m_space])?;
        let all = Subspace::direct_sum(&[&k_space, &p_space])?;
        if all.orthonormality_residual() > tol.tol_struct {
            return Err(Error::InvalidSubspace("k, q, m are not mutually orthogonal".to_string()));
        }
        let dp = p_space.rank();
        let bp = p_space.basis_matrix().clone();
        let p_ad = (0..dp)
            .map(|i| {
                let ad = algebra.ad(&p_space.vector(i));
                bp.transpose() * ad * &bp
            })
            .collect();
        let triple = SubmersionTriple {
            name: name.to_string(),
            algebra,
            k_space,
            q_space,
            m_space,
            p_space,
            tol,
            p_ad,
        };
        let report = triple.validate();
        if let Some(bad) = report.residuals.iter().find(|q| q.exceeds()) {
            return Err(Error::InvalidSubspace(alloc::format!(
                "{} residual {:.3e} exceeds {:.3e}",
                bad.name,
                bad.value,
                bad.tol.unwrap_or(0.0)
            )));
        }
        Ok(triple)
    }

    /// The base `G/H` as a homogeneous space in its own right: isotropy `h`,
    /// tangent model `m`, no vertical part.
    pub fn base(&self) -> Result<SubmersionTriple> {
        let h = Subspace::direct_sum(&[&self.k_space, &self.q_space])?;
        Self::from_parts(
            &alloc::format!("{}/base", self.name),
            self.algebra.clone(),
            h,
            Subspace::zero(&self.algebra),
            self.m_space.clone(),
            self.tol,
        )
    }

    /// Subalgebra and invariance residuals.
    pub fn validate(&self) -> CheckReport {
        let tol = self.tol.tol_struct;
        let h = Subspace::direct_sum(&[&self.k_space, &self.q_space]).expect("nonempty");
        let mut r = CheckReport::new("triple");
        r.residual("h_subalgebra", h.bracket_leakage(&h, &h), tol)
            .residual("k_subalgebra", self.k_space.bracket_leakage(&self.k_space, &self.k_space), tol)
            .residual("kq_in_q", self.k_space.bracket_leakage(&self.q_space, &self.q_space), tol)
            .residual("hm_in_m", h.bracket_leakage(&self.m_space, &self.m_space), tol);
        r
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn algebra(&self) -> &Arc<LieAlgebraBasis> {
        &self.algebra
    }
    pub fn k_space(&self) -> &Subspace {
        &self.k_space
    }
    pub fn q_space(&self) -> &Subspace {
        &self.q_space
    }
    pub fn m_space(&self) -> &Subspace {
        &self.m_space
    }
    pub fn p_space(&self) -> &Subspace {
        &self.p_space
    }
    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }
    pub fn dim_q(&self) -> usize {
        self.q_space.rank()
    }
    pub fn dim_m(&self) -> usize {
        self.m_space.rank()
    }
    pub fn dim_p(&self) -> usize {
        self.p_space.rank()
    }

    fn membership_tol(&self, x: &DVector<f64>) -> f64 {
        self.tol.tol_struct * x.norm().max(1.0)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), found: x.len() });
        }
        Ok(())
    }

    /// p-coordinates of a vector of `p`.
    pub fn p_coords(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let off = self.k_space.coords(x).norm();
        if off > self.membership_tol(x) {
            return Err(Error::NotInP(off));
        }
        Ok(self.p_space.coords(x))
    }

    /// m-coordinates of a horizontal vector.
    pub fn m_coords(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let off = (x - self.m_space.project_unchecked(x)).norm();
        if off > self.membership_tol(x) {
            return Err(Error::NotHorizontal(off));
        }
        Ok(self.m_space.coords(x))
    }

    /// q-coordinates of a vertical vector.
    pub fn q_coords(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let off = (x - self.q_space.project_unchecked(x)).norm();
        if off > self.membership_tol(x) {
            return Err(Error::NotVertical(off));
        }
        Ok(self.q_space.coords(x))
    }

    pub fn from_p(&self, p: &DVector<f64>) -> DVector<f64> {
        self.p_space.embed(p)
    }
    pub fn from_q(&self, q: &DVector<f64>) -> DVector<f64> {
        self.q_space.embed(q)
    }
    pub fn from_m(&self, m: &DVector<f64>) -> DVector<f64> {
        self.m_space.embed(m)
    }

    /// p-coordinates of the vertical vector with q-coordinates `q`.
    pub(crate) fn q_to_p(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut p = DVector::zeros(self.dim_p());
        p.rows_mut(0, self.dim_q()).copy_from(q);
        p
    }
    pub(crate) fn m_to_p(&self, m: &DVector<f64>) -> DVector<f64> {
        let mut p = DVector::zeros(self.dim_p());
        p.rows_mut(self.dim_q(), self.dim_m()).copy_from(m);
        p
    }
    pub(crate) fn p_q_part(&self, p: &DVector<f64>) -> DVector<f64> {
        p.rows(0, self.dim_q()).clone_owned()
    }
    pub(crate) fn p_m_part(&self, p: &DVector<f64>) -> DVector<f64> {
        p.rows(self.dim_q(), self.dim_m()).clone_owned()
    }

    /// `pr_p [x, .]` on p-coordinates.
    pub(crate) fn p_ad(&self, x_p: &DVector<f64>) -> DMatrix<f64> {
        let dp = self.dim_p();
        let mut m = DMatrix::zeros(dp, dp);
        for (i, a) in self.p_ad.iter().enumerate() {
            if x_p[i] != 0.0 {
                m += a * x_p[i];
            }
        }
        m
    }

    /// Matrix of `ad(z)|_q` in q-coordinates.
    pub(crate) fn ad_on_q(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let bq = self.q_space.basis_matrix();
        bq.transpose() * self.algebra.ad(z) * bq
    }
}

/// Which subspace a [`LinearMap`] acts between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Q,
    M,
    P,
}

/// A linear map between subspaces, as a matrix in their orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub domain: Block,
    pub codomain: Block,
    pub matrix: DMatrix<f64>,
}

/// A `G`-invariant adapted metric: `P` on the `q`-block, the normal metric on `m`.
#[derive(Debug, Clone)]
pub struct AdaptedMetric {
    triple: Arc<SubmersionTriple>,
    p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    gram: DMatrix<f64>,
    /// Nomizu operator of each p-basis vector.
    nomizu: Vec<DMatrix<f64>>,
}

impl AdaptedMetric {
    /// The normal metric, `P = I`.
    pub fn normal(triple: Arc<SubmersionTriple>) -> Self {
        let dq = triple.dim_q();
        Self::new(triple, DMatrix::identity(dq, dq)).expect("identity is admissible")
    }

    pub fn new(triple: Arc<SubmersionTriple>, p: DMatrix<f64>) -> Result<Self> {
        let dq = triple.dim_q();
        if p.nrows() != dq || p.ncols() != dq {
            return Err(Error::InvalidP(alloc::format!(
                "P is {}x{} but dim q = {dq}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidP("P has non-finite entries".to_string()));
        }
        let tol = triple.tol.tol_struct * linalg::max_abs(&p).max(1.0);
        let asym = linalg::max_abs(&(&p - p.transpose()));
        if asym > tol {
            return Err(Error::InvalidP(alloc::format!("P is not symmetric (residual {asym:.3e})")));
        }
        let p = (&p + p.transpose()) * 0.5;
        if dq > 0 {
            let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
            if !(min_eig > 0.0) {
                return Err(Error::InvalidP(alloc::format!(
                    "P is not positive-definite (smallest eigenvalue {min_eig:.3e})"
                )));
            }
        }
        for i in 0..triple.k_space.rank() {
            let c = triple.ad_on_q(&triple.k_space.vector(i));
            let comm = linalg::max_abs(&(&p * &c - &c * &p));
            if comm > tol {
                return Err(Error::InvalidP(alloc::format!(
                    "P does not commute with ad(k) on q (residual {comm:.3e})"
                )));
            }
        }
        let p_inv = p.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(0, 0));
        let dp = triple.dim_p();
        let mut gram = DMatrix::identity(dp, dp);
        gram.view_mut((0, 0), (dq, dq)).copy_from(&p);
        let mut gram_inv = DMatrix::identity(dp, dp);
        gram_inv.view_mut((0, 0), (dq, dq)).copy_from(&p_inv);
        let nomizu = Self::nomizu_table(&triple, &gram, &gram_inv);
        Ok(AdaptedMetric { triple, p, p_inv, gram, nomizu })
    }

    // N_{b_i} = 1/2 A_i + U_i, with 2 <U(b_i, w), b_v>_g = (A_v^T G + G A_v)_{i,.} w
    fn nomizu_table(triple: &SubmersionTriple, gram: &DMatrix<f64>, gram_inv: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let dp = triple.dim_p();
        let sym: Vec<DMatrix<f64>> =
            triple.p_ad.iter().map(|a| a.transpose() * gram + gram * a).collect();
        (0..dp)
            .map(|i| {
                let mut gu = DMatrix::zeros(dp, dp);
                for (v, s) in sym.iter().enumerate() {
                    gu.set_row(v, &(s.row(i) * 0.5));
                }
                &triple.p_ad[i] * 0.5 + gram_inv * gu
            })
            .collect()
    }

    /// The deformed metric `g'(a, b) = g(P_rel a, b)` on `q`.
    pub fn deformed(&self, p_rel: &DMatrix<f64>) -> Result<AdaptedMetric> {
        if p_rel.nrows() != self.p.nrows() || p_rel.ncols() != self.p.ncols() {
            return Err(Error::InvalidP("relative tensor has the wrong shape".to_string()));
        }
        AdaptedMetric::new(self.triple.clone(), &self.p * p_rel)
    }

    pub fn triple(&self) -> &Arc<SubmersionTriple> {
        &self.triple
    }

    /// The vertical tensor in q-coordinates.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn p_inv(&self) -> &DMatrix<f64> {
        &self.p_inv
    }

    /// Metric on p-coordinates, `blockdiag(P, I)`.
    pub fn gram_p(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn is_normal(&self) -> bool {
        let dq = self.p.nrows();
        linalg::max_abs(&(&self.p - DMatrix::<f64>::identity(dq, dq))) == 0.0
    }

    /// `g(a, b)` for vectors of `p` in algebra coordinates.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        let (a, b) = (self.triple.p_coords(a)?, self.triple.p_coords(b)?);
        Ok(self.inner_p(&a, &b))
    }

    pub fn norm(&self, a: &DVector<f64>) -> Result<f64> {
        Ok(libm::sqrt(self.inner(a, a)?.max(0.0)))
    }

    pub(crate) fn inner_p(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.gram * b))
    }
    pub(crate) fn inner_q(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.p * b))
    }
    pub(crate) fn norm_q(&self, a: &DVector<f64>) -> f64 {
        libm::sqrt(self.inner_q(a, a).max(0.0))
    }

    /// Nomizu operator on p-coordinates.
    pub(crate) fn nomizu_p(&self, z_p: &DVector<f64>) -> DMatrix<f64> {
        let dp = self.triple.dim_p();
        let mut m = DMatrix::zeros(dp, dp);
        for (i, n) in self.nomizu.iter().enumerate() {
            if z_p[i] != 0.0 {
                m += n * z_p[i];
            }
        }
        m
    }

    /// Curvature on p-coordinates.
    pub(crate) fn curvature_p(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let t = &self.triple;
        let nx = self.nomizu_p(x);
        let ny = self.nomizu_p(y);
        let xy_p = t.p_ad(x) * y;
        let (xg, yg, zg) = (t.from_p(x), t.from_p(y), t.from_p(z));
        let xy = t.algebra.bracket_unchecked(&xg, &yg);
        let xy_k = t.k_space.project_unchecked(&xy);
        let iso = t.p_space.coords(&t.algebra.bracket_unchecked(&xy_k, &zg));
        &nx * (&ny * z) - &ny * (&nx * z) - self.nomizu_p(&xy_p) * z - iso
    }

    pub(crate) fn sectional_p(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.inner_p(&self.curvature_p(x, y, y), x)
    }
}

/// Nomizu operator `N_z` on `p`: `N_z w = 1/2 pr_p [z, w] + U(z, w)`.
pub fn nomizu_operator(metric: &AdaptedMetric, z: &DVector<f64>) -> Result<LinearMap> {
    let z = metric.triple.p_coords(z)?;
    Ok(LinearMap { domain: Block::P, codomain: Block::P, matrix: metric.nomizu_p(&z) })
}

/// `R(x, y) z = [N_x, N_y] z - N_{pr_p [x,y]} z - [pr_k [x,y], z]`.
pub fn curvature_tensor(
    metric: &AdaptedMetric,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let t = &metric.triple;
    let (x, y, z) = (t.p_coords(x)?, t.p_coords(y)?, t.p_coords(z)?);
    Ok(t.from_p(&metric.curvature_p(&x, &y, &z)))
}

/// Unreduced sectional curvature `<R(x, y) y, x>_g`.
pub fn sectional_curvature(metric: &AdaptedMetric, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let t = &metric.triple;
    let (x, y) = (t.p_coords(x)?, t.p_coords(y)?);
    Ok(metric.sectional_p(&x, &y))
}

/// Parallel transport along `t -> exp(t x) o` in the translated frame.
#[derive(Debug, Clone)]
pub struct ParallelPropagator {
    generator: LinearMap,
}

impl ParallelPropagator {
    /// Generator `-N_x`.
    pub fn generator(&self) -> &LinearMap {
        &self.generator
    }

    /// Transport matrix at time `t` on p-coordinates.
    pub fn flow(&self, t: f64) -> DMatrix<f64> {
        linalg::expm(&(&self.generator.matrix * t))
    }
}

pub fn parallel_propagator(metric: &AdaptedMetric, x: &DVector<f64>) -> Result<ParallelPropagator> {
    let t = &metric.triple;
    let xm = t.m_coords(x)?;
    let xp = t.m_to_p(&xm);
    Ok(ParallelPropagator {
        generator: LinearMap { domain: Block::P, codomain: Block::P, matrix: -metric.nomizu_p(&xp) },
    })
}
