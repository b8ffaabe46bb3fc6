//! Small dense helpers on top of nalgebra that are not available in `no_std`
//! builds (matrix exponential) or that the rest of the crate needs in one place.

use nalgebra::{DMatrix, DVector};

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        libm::ceil(libm::log2(norm1 / THETA13)) as i32
    } else {
        0
    };
    let scaled = a * libm::exp2(-f64::from(squarings));
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Symmetric positive-definite square root and inverse square root.
pub fn spd_sqrt_pair(p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = p.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let sqrt = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| libm::sqrt(*l)));
    let inv = sqrt.map(|s| 1.0 / s);
    (
        q * DMatrix::from_diagonal(&sqrt) * q.transpose(),
        q * DMatrix::from_diagonal(&inv) * q.transpose(),
    )
}

/// Modified Gram–Schmidt on the columns of `cols` (Euclidean inner product).
/// Columns whose residual norm falls below `tol` are reported as dependent.
pub fn orthonormalize(cols: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let mut out = cols.clone();
    for j in 0..out.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = out.column(i).dot(&out.column(j));
                let ci = out.column(i).clone_owned();
                let mut cj = out.column_mut(j);
                cj.axpy(-proj, &ci, 1.0);
            }
        }
        let norm = out.column(j).norm();
        if norm < tol {
            return None;
        }
        out.column_mut(j).scale_mut(1.0 / norm);
    }
    Some(out)
}

/// Orthonormal basis of the Euclidean orthogonal complement of the column span
/// of `basis` (assumed orthonormal) inside `R^n`.
pub fn orthogonal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut cols: alloc::vec::Vec<DVector<f64>> = basis.column_iter().map(|c| c.clone_owned()).collect();
    let start = cols.len();
    for k in 0..n {
        let mut v = DVector::<f64>::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / norm);
        }
        if cols.len() == n {
            break;
        }
    }
    let extra = &cols[start..];
    if extra.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(extra)
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| f64::max(acc, v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], libm::cos(3.0), epsilon = 1e-14);
        assert_relative_eq!(e[(1, 0)], libm::sin(3.0), epsilon = 1e-14);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&DMatrix::zeros(3, 3));
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn expm_nilpotent_and_large_norm() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 1)], 1.0, epsilon = 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![20.0, -7.5]));
        let e = expm(&d);
        assert_relative_eq!(e[(0, 0)], libm::exp(20.0), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 1)], libm::exp(-7.5), max_relative = 1e-13);
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = orthonormalize(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), 1e-12).unwrap();
        let c = orthogonal_complement(&b, 3);
        assert_eq!(c.ncols(), 2);
        assert!(max_abs(&(b.transpose() * &c)) < 1e-14);
        assert!(max_abs(&(c.transpose() * &c - DMatrix::identity(2, 2))) < 1e-14);
    }
}
