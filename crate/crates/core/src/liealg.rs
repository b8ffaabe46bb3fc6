//! Compact matrix Lie algebras with orthonormal bases.
//!
//! Every algebra is stored as a list of real square matrices that are
//! orthonormal for the scaled trace form `<X, Y> = -s * trace(XY)`. Complex
//! anti-Hermitian algebras are realified first (`A + iB -> [[A, -B], [B, A]]`),
//! which doubles the real trace. Structure constants are read off the matrix
//! commutators by projecting with the same form, so `gram` is the identity up
//! to rounding and every adjoint used downstream is a plain transpose.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::report::CheckReport;

/// Input accepted by [`build_algebra`].
#[derive(Debug, Clone)]
pub enum AlgebraSpec {
    /// `"su2"`, `"u1xu1"` or `"so<n>"` for `n` in `2..=9`.
    Catalog(String),
    /// Linearly independent real matrices closed under commutator.
    Matrices { matrices: Vec<DMatrix<f64>>, trace_scale: f64 },
}

#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    name: String,
    labels: Vec<String>,
    basis: Vec<DMatrix<f64>>,
    trace_scale: f64,
    /// `c[(i * dim + j) * dim + k]` with `[e_i, e_j] = sum_k c_ijk e_k`.
    structure: Vec<f64>,
    gram: DMatrix<f64>,
    tol_struct: f64,
}

fn elementary_so(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    m
}

fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(re);
    m.view_mut((0, n), (n, n)).copy_from(&(-im));
    m.view_mut((n, 0), (n, n)).copy_from(im);
    m.view_mut((n, n), (n, n)).copy_from(re);
    m
}

/// `-(i/2) * sigma_k` for the Pauli matrices, realified.
fn su2_basis() -> Vec<DMatrix<f64>> {
    let z = DMatrix::<f64>::zeros(2, 2);
    let s1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let s3 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    // -(i/2) sigma_2 is already real
    let e2 = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
    alloc::vec![realify(&z, &(&s1 * -0.5)), realify(&e2, &z), realify(&z, &(&s3 * -0.5))]
}

fn so_labels(n: usize) -> (Vec<String>, Vec<DMatrix<f64>>) {
    let mut labels = Vec::new();
    let mut basis = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            labels.push(format!("L{}{}", i + 1, j + 1));
            basis.push(elementary_so(n, i, j));
        }
    }
    (labels, basis)
}

/// Builds and validates an algebra from a catalog id or an explicit basis.
pub fn build_algebra(spec: &AlgebraSpec, tol_struct: f64) -> Result<LieAlgebraBasis> {
    match spec {
        AlgebraSpec::Catalog(id) => {
            let (labels, basis, scale) = match id.as_str() {
                "su2" => (
                    ["E1", "E2", "E3"].iter().map(|s| s.to_string()).collect(),
                    su2_basis(),
                    1.0,
                ),
                "u1xu1" => {
                    let a = elementary_so(4, 1, 0);
                    let b = elementary_so(4, 3, 2);
                    (alloc::vec!["T1".to_string(), "T2".to_string()], alloc::vec![a, b], 0.5)
                }
                other => {
                    let n = other
                        .strip_prefix("so")
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|n| (2..=9).contains(n))
                        .ok_or_else(|| Error::UnknownCatalog(other.to_string()))?;
                    let (labels, basis) = so_labels(n);
                    (labels, basis, 0.5)
                }
            };
            LieAlgebraBasis::from_orthonormal(id.clone(), labels, basis, scale, tol_struct)
        }
        AlgebraSpec::Matrices { matrices, trace_scale } => {
            LieAlgebraBasis::from_matrices("custom", matrices, *trace_scale, tol_struct)
        }
    }
}

fn trace_form(a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> f64 {
    // -s tr(AB) = -s sum_ij A_ij B_ji
    -scale * a.component_mul(&b.transpose()).sum()
}

impl LieAlgebraBasis {
    /// Orthonormalizes an arbitrary basis under the scaled trace form and validates closure.
    pub fn from_matrices(
        name: &str,
        matrices: &[DMatrix<f64>],
        trace_scale: f64,
        tol_struct: f64,
    ) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidSubspace("empty basis".to_string()));
        };
        let size = first.nrows();
        for m in matrices {
            if !m.is_square() || m.nrows() != size {
                return Err(Error::DimensionMismatch { expected: size, found: m.nrows() });
            }
        }
        let n = matrices.len();
        let gram = DMatrix::from_fn(n, n, |i, j| trace_form(&matrices[i], &matrices[j], trace_scale));
        let min_eig = gram.clone().symmetric_eigen().eigenvalues.min();
        let scale = linalg::max_abs(&gram).max(1.0);
        if !(min_eig > tol_struct * scale) {
            return Err(Error::Degenerate { min_eigenvalue: min_eig });
        }
        // e_j = sum_i M_i C_ij with C = L^{-T}, G = L L^T
        let chol = gram.cholesky().ok_or(Error::Degenerate { min_eigenvalue: min_eig })?;
        let c = chol
            .l()
            .transpose()
            .try_inverse()
            .ok_or(Error::Degenerate { min_eigenvalue: min_eig })?;
        let basis: Vec<DMatrix<f64>> = (0..n)
            .map(|j| {
                let mut e = DMatrix::zeros(size, size);
                for i in 0..n {
                    e += &matrices[i] * c[(i, j)];
                }
                e
            })
            .collect();
        let labels = (1..=n).map(|i| format!("e{i}")).collect();
        Self::from_orthonormal(name.to_string(), labels, basis, trace_scale, tol_struct)
    }

    fn from_orthonormal(
        name: String,
        labels: Vec<String>,
        basis: Vec<DMatrix<f64>>,
        trace_scale: f64,
        tol_struct: f64,
    ) -> Result<Self> {
        let n = basis.len();
        let gram = DMatrix::from_fn(n, n, |i, j| trace_form(&basis[i], &basis[j], trace_scale));
        let mut structure = alloc::vec![0.0; n * n * n];
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let mut rest = comm.clone();
                for k in 0..n {
                    let ck = trace_form(&comm, &basis[k], trace_scale);
                    structure[(i * n + j) * n + k] = ck;
                    structure[(j * n + i) * n + k] = -ck;
                    rest -= &basis[k] * ck;
                }
                worst = worst.max(libm::sqrt(trace_scale) * rest.norm());
            }
        }
        if !(worst <= tol_struct) {
            return Err(Error::NotClosed { residual: worst, tol: tol_struct });
        }
        Ok(LieAlgebraBasis { name, labels, basis, trace_scale, structure, gram, tol_struct })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn trace_scale(&self) -> f64 {
        self.trace_scale
    }

    pub fn tol_struct(&self) -> f64 {
        self.tol_struct
    }

    /// Size of the representing matrices.
    pub fn matrix_size(&self) -> usize {
        self.basis[0].nrows()
    }

    #[inline]
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.structure[(i * n + j) * n + k]
    }

    /// Coefficient vector of the basis element `e_i`.
    pub fn unit(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[i] = 1.0;
        v
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// `[a, b]` in coefficients.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.bracket_unchecked(a, b))
    }

    pub(crate) fn bracket_unchecked(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = a[i] * b[j];
                if w == 0.0 {
                    continue;
                }
                let row = (i * n + j) * n;
                for k in 0..n {
                    out[k] += w * self.structure[row + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad(z)` acting on coefficient vectors.
    pub fn ad(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m.set_column(j, &self.bracket_unchecked(z, &self.unit(j)));
        }
        m
    }

    /// `sum_i x_i e_i` as a matrix.
    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let size = self.matrix_size();
        let mut m = DMatrix::zeros(size, size);
        for (xi, e) in x.iter().zip(&self.basis) {
            if *xi != 0.0 {
                m += e * *xi;
            }
        }
        m
    }

    /// Coefficients of an algebra element given as a matrix (orthogonal projection).
    pub fn coords_of(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.basis.iter().map(|e| trace_form(m, e, self.trace_scale)))
    }
}

/// Jacobi, ad-skewness and commutator-consistency residuals.
pub fn validate_structure(alg: &LieAlgebraBasis) -> CheckReport {
    let n = alg.dim();
    let tol = alg.tol_struct;
    let mut jacobi = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (ei, ej, ek) = (alg.unit(i), alg.unit(j), alg.unit(k));
                let t1 = alg.bracket_unchecked(&alg.bracket_unchecked(&ei, &ej), &ek);
                let t2 = alg.bracket_unchecked(&alg.bracket_unchecked(&ej, &ek), &ei);
                let t3 = alg.bracket_unchecked(&alg.bracket_unchecked(&ek, &ei), &ej);
                jacobi = jacobi.max((t1 + t2 + t3).norm());
            }
        }
    }
    let mut skew = 0.0f64;
    for z in 0..n {
        let adz = alg.ad(&alg.unit(z));
        // <[z,x],y> + <x,[z,y]> = (ad_z^T G + G ad_z)_{yx}
        let form = adz.transpose() * &alg.gram + &alg.gram * &adz;
        skew = skew.max(linalg::max_abs(&form));
    }
    let mut consistency = 0.0f64;
    let mut gram_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let comm = &alg.basis[i] * &alg.basis[j] - &alg.basis[j] * &alg.basis[i];
            let expected = alg.to_matrix(&alg.bracket_unchecked(&alg.unit(i), &alg.unit(j)));
            consistency = consistency.max(libm::sqrt(alg.trace_scale) * (comm - expected).norm());
            let target = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((alg.gram[(i, j)] - target).abs());
        }
    }
    let min_eig = if n == 0 { 1.0 } else { alg.gram.clone().symmetric_eigen().eigenvalues.min() };
    let mut r = CheckReport::new("validate");
    r.residual("jacobi", jacobi, tol)
        .residual("ad_skewness", skew, tol)
        .residual("commutator_consistency", consistency, tol)
        .residual("gram_orthonormality", gram_dev, tol)
        .stat("gram_min_eigenvalue", min_eig)
        .stat("dim", n as f64);
    r
}

/// An orthonormal family of coefficient vectors in a parent algebra.
#[derive(Debug, Clone)]
pub struct Subspace {
    parent: Arc<LieAlgebraBasis>,
    span: DMatrix<f64>,
}

impl Subspace {
    /// Span of the listed basis elements.
    pub fn from_indices(parent: &Arc<LieAlgebraBasis>, indices: &[usize]) -> Result<Self> {
        let n = parent.dim();
        let mut cols = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidSubspace(format!("basis index {i} out of range 0..{n}")));
            }
            cols.push(parent.unit(i));
        }
        Self::from_vectors(parent, &cols)
    }

    /// Orthonormalized span of arbitrary coefficient vectors.
    pub fn from_vectors(parent: &Arc<LieAlgebraBasis>, vectors: &[DVector<f64>]) -> Result<Self> {
        let n = parent.dim();
        for v in vectors {
            parent.check_dim(v)?;
        }
        if vectors.is_empty() {
            return Ok(Subspace { parent: parent.clone(), span: DMatrix::zeros(n, 0) });
        }
        let raw = DMatrix::from_columns(vectors);
        let span = linalg::orthonormalize(&raw, 1e-8)
            .ok_or_else(|| Error::InvalidSubspace("spanning vectors are linearly dependent".to_string()))?;
        Ok(Subspace { parent: parent.clone(), span })
    }

    pub fn zero(parent: &Arc<LieAlgebraBasis>) -> Self {
        Subspace { parent: parent.clone(), span: DMatrix::zeros(parent.dim(), 0) }
    }

    /// Orthogonal complement of the sum of `parts` inside the parent algebra.
    pub fn complement(parent: &Arc<LieAlgebraBasis>, parts: &[&Subspace]) -> Result<Self> {
        let cols: Vec<DVector<f64>> = parts
            .iter()
            .flat_map(|s| s.span.column_iter().map(|c| c.clone_owned()))
            .collect();
        let n = parent.dim();
        let joint = if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            linalg::orthonormalize(&DMatrix::from_columns(&cols), 1e-8)
                .ok_or_else(|| Error::InvalidSubspace("parts overlap".to_string()))?
        };
        Ok(Subspace { parent: parent.clone(), span: linalg::orthogonal_complement(&joint, n) })
    }

    /// Direct sum of mutually orthogonal subspaces, columns in the given order.
    pub fn direct_sum(parts: &[&Subspace]) -> Result<Self> {
        let parent = parts
            .first()
            .map(|s| s.parent.clone())
            .ok_or_else(|| Error::InvalidSubspace("empty direct sum".to_string()))?;
        let n = parent.dim();
        let total: usize = parts.iter().map(|s| s.rank()).sum();
        let mut span = DMatrix::zeros(n, total);
        let mut at = 0;
        for s in parts {
            span.view_mut((0, at), (n, s.rank())).copy_from(&s.span);
            at += s.rank();
        }
        Ok(Subspace { parent, span })
    }

    pub fn parent(&self) -> &Arc<LieAlgebraBasis> {
        &self.parent
    }

    pub fn rank(&self) -> usize {
        self.span.ncols()
    }

    /// Columns are the orthonormal spanning vectors.
    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.span
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.span.column(i).clone_owned()
    }

    /// Coordinates in the subspace's own orthonormal basis.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.span.transpose() * x
    }

    pub fn embed(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.span * c
    }

    pub(crate) fn project_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.span * (self.span.transpose() * x)
    }

    /// Distance from `x` to the subspace.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        (x - self.project_unchecked(x)).norm()
    }

    /// Largest orthonormality defect of the stored span.
    pub fn orthonormality_residual(&self) -> f64 {
        let r = self.rank();
        linalg::max_abs(&(self.span.transpose() * &self.span - DMatrix::<f64>::identity(r, r)))
    }

    /// Largest component of `[a, b]` outside `target` over basis pairs of `self` and `other`.
    pub fn bracket_leakage(&self, other: &Subspace, target: &Subspace) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rank() {
            for j in 0..other.rank() {
                let b = self.parent.bracket_unchecked(&self.vector(i), &other.vector(j));
                worst = worst.max(target.distance(&b));
            }
        }
        worst
    }
}

/// Gram-orthogonal projection of `x` onto `s`.
pub fn project(x: &DVector<f64>, s: &Subspace) -> Result<DVector<f64>> {
    s.parent.check_dim(x)?;
    Ok(s.project_unchecked(x))
}

pub fn bracket(alg: &LieAlgebraBasis, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    alg.bracket(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cat(id: &str) -> LieAlgebraBasis {
        build_algebra(&AlgebraSpec::Catalog(id.to_string()), 1e-10).unwrap()
    }

    #[test]
    fn su2_cyclic_brackets() {
        let a = cat("su2");
        assert_eq!(a.dim(), 3);
        let e = |i| a.unit(i);
        assert_relative_eq!(a.bracket(&e(0), &e(1)).unwrap(), e(2), epsilon = 1e-15);
        assert_relative_eq!(a.bracket(&e(1), &e(2)).unwrap(), e(0), epsilon = 1e-15);
        assert_relative_eq!(a.bracket(&e(2), &e(0)).unwrap(), e(1), epsilon = 1e-15);
        assert!(linalg::max_abs(&(a.gram() - DMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn u1xu1_is_abelian() {
        let a = cat("u1xu1");
        assert_eq!(a.dim(), 2);
        assert!(a.structure.iter().all(|c| *c == 0.0));
        let r = validate_structure(&a);
        assert!(r.passed());
        assert_eq!(r.get("jacobi"), Some(0.0));
        assert_eq!(r.get("ad_skewness"), Some(0.0));
        assert_eq!(r.get("commutator_consistency"), Some(0.0));
    }

    #[test]
    fn so5_validates() {
        let a = cat("so5");
        assert_eq!(a.dim(), 10);
        let r = validate_structure(&a);
        assert!(r.passed());
        assert!(r.get("jacobi").unwrap() < 1e-12);
        // [L12, L23] = L13
        let l = |s| a.unit(a.label_index(s).unwrap());
        assert_relative_eq!(a.bracket(&l("L12"), &l("L23")).unwrap(), l("L13"), epsilon = 1e-15);
    }

    #[test]
    fn unknown_catalog_is_rejected() {
        let e = build_algebra(&AlgebraSpec::Catalog("g2".into()), 1e-10).unwrap_err();
        assert_eq!(e, Error::UnknownCatalog("g2".into()));
    }

    #[test]
    fn non_closed_basis_is_rejected() {
        // L12 and L23 in so(3) without L13
        let m = alloc::vec![elementary_so(3, 0, 1), elementary_so(3, 1, 2)];
        let e = build_algebra(&AlgebraSpec::Matrices { matrices: m, trace_scale: 0.5 }, 1e-10).unwrap_err();
        assert!(matches!(e, Error::NotClosed { .. }));
    }

    #[test]
    fn non_compact_basis_is_degenerate() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = build_algebra(&AlgebraSpec::Matrices { matrices: alloc::vec![h], trace_scale: 0.5 }, 1e-10)
            .unwrap_err();
        assert!(matches!(e, Error::Degenerate { .. }));
    }

    #[test]
    fn custom_basis_is_orthonormalized() {
        // a skewed basis of so(3)
        let l12 = elementary_so(3, 0, 1);
        let l13 = elementary_so(3, 0, 2);
        let l23 = elementary_so(3, 1, 2);
        let m = alloc::vec![&l12 * 2.0, &l12 + &l13, &l23 * 0.5 - &l13];
        let a = build_algebra(&AlgebraSpec::Matrices { matrices: m, trace_scale: 0.5 }, 1e-10).unwrap();
        assert!(validate_structure(&a).passed());
        assert!(linalg::max_abs(&(a.gram() - DMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let a = Arc::new(cat("su2"));
        let s = Subspace::from_indices(&a, &[0]).unwrap();
        let x = a.unit(0) + a.unit(1);
        let p = project(&x, &s).unwrap();
        assert_relative_eq!(p, a.unit(0), epsilon = 1e-15);
        assert_relative_eq!(project(&p, &s).unwrap(), p, epsilon = 1e-15);
        assert!(matches!(project(&DVector::zeros(2), &s), Err(Error::DimensionMismatch { .. })));

        let so4 = Arc::new(cat("so4"));
        let l = |s| so4.unit(so4.label_index(s).unwrap());
        let h = Subspace::from_indices(&so4, &[0, 1, 3]).unwrap();
        let b = so4.bracket(&l("L14"), &l("L24")).unwrap();
        assert!(b.norm() > 0.5);
        assert_relative_eq!(project(&b, &h).unwrap(), b, epsilon = 1e-15);
    }

    #[test]
    fn bracket_dimension_mismatch() {
        let a = cat("su2");
        assert!(matches!(
            a.bracket(&DVector::zeros(3), &DVector::zeros(4)),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }
}
