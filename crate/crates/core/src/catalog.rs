//! The built-in submersion scenarios.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::connection::SubmersionTriple;
use crate::error::{Error, Result};
use crate::liealg::{build_algebra, AlgebraSpec, LieAlgebraBasis, Subspace};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `SU(2) -> S^2`, fibre `U(1)`.
    Hopf,
    /// `U(1) x U(1) -> S^1`.
    Torus,
    /// `SO(4) -> S^3`, fibre `SO(3)`.
    So4S3,
    /// `SO(5) -> SO(5)/SO(3)`, the irreducible `SO(3)`.
    Berger,
}

pub const ALL: [Scenario; 4] = [Scenario::Hopf, Scenario::Torus, Scenario::So4S3, Scenario::Berger];

impl Scenario {
    pub fn id(self) -> &'static str {
        match self {
            Scenario::Hopf => "hopf",
            Scenario::Torus => "torus",
            Scenario::So4S3 => "so4_s3",
            Scenario::Berger => "berger",
        }
    }

    pub fn algebra_id(self) -> &'static str {
        match self {
            Scenario::Hopf => "su2",
            Scenario::Torus => "u1xu1",
            Scenario::So4S3 => "so4",
            Scenario::Berger => "so5",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Hopf => "su2/u1 -> S^2",
            Scenario::Torus => "u1xu1 -> S^1",
            Scenario::So4S3 => "so4/so3 -> S^3",
            Scenario::Berger => "so5/so3_irr -> B^7",
        }
    }

    /// Basis of the fibre algebra `h` (here `k` is trivial for every entry).
    fn h_vectors(self, alg: &LieAlgebraBasis) -> Vec<nalgebra::DVector<f64>> {
        let idx = |l: &str| alg.unit(alg.label_index(l).expect("catalog label"));
        match self {
            Scenario::Hopf => alloc::vec![idx("E1")],
            Scenario::Torus => alloc::vec![idx("T1")],
            Scenario::So4S3 => alloc::vec![idx("L12"), idx("L13"), idx("L23")],
            Scenario::Berger => berger_generators().iter().map(|m| alg.coords_of(m)).collect(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL.iter()
            .copied()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::UnknownCatalog(s.to_string()))
    }
}

/// Orthonormal basis of traceless symmetric 3x3 matrices for `<S, T> = tr(ST)`.
fn sym0_basis() -> [DMatrix<f64>; 5] {
    let r2 = libm::sqrt(0.5);
    let r6 = 1.0 / libm::sqrt(6.0);
    let m = |v: [f64; 9]| DMatrix::from_row_slice(3, 3, &v);
    [
        m([r2, 0.0, 0.0, 0.0, -r2, 0.0, 0.0, 0.0, 0.0]),
        m([r6, 0.0, 0.0, 0.0, r6, 0.0, 0.0, 0.0, -2.0 * r6]),
        m([0.0, r2, 0.0, r2, 0.0, 0.0, 0.0, 0.0, 0.0]),
        m([0.0, 0.0, r2, 0.0, 0.0, 0.0, r2, 0.0, 0.0]),
        m([0.0, 0.0, 0.0, 0.0, 0.0, r2, 0.0, r2, 0.0]),
    ]
}

/// Images of `L12, L13, L23` of `so(3)` acting by commutator on traceless
/// symmetric 3x3 matrices, written in the basis of [`sym0_basis`].
pub fn berger_generators() -> [DMatrix<f64>; 3] {
    let s = sym0_basis();
    let so3 = |i: usize, j: usize| {
        let mut l = DMatrix::<f64>::zeros(3, 3);
        l[(i, j)] = 1.0;
        l[(j, i)] = -1.0;
        l
    };
    let rho = |l: DMatrix<f64>| {
        DMatrix::from_fn(5, 5, |i, j| {
            let c = &l * &s[j] - &s[j] * &l;
            (&s[i] * c).trace()
        })
    };
    [rho(so3(0, 1)), rho(so3(0, 2)), rho(so3(1, 2))]
}

pub fn algebra(s: Scenario, tol: &Tolerances) -> Result<LieAlgebraBasis> {
    build_algebra(&AlgebraSpec::Catalog(s.algebra_id().to_string()), tol.tol_struct)
}

pub fn triple(s: Scenario, tol: Tolerances) -> Result<SubmersionTriple> {
    let alg = Arc::new(algebra(s, &tol)?);
    let h = Subspace::from_vectors(&alg, &s.h_vectors(&alg))?;
    let k = Subspace::zero(&alg);
    SubmersionTriple::new(s.id(), alg, k, &h, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn dims() {
        let dims: Vec<(usize, usize)> = ALL
            .iter()
            .map(|s| {
                let t = triple(*s, Tolerances::default()).unwrap();
                (t.dim_q(), t.dim_m())
            })
            .collect();
        assert_eq!(dims, alloc::vec![(1, 2), (1, 1), (3, 3), (3, 7)]);
    }

    #[test]
    fn berger_generators_form_irreducible_so3() {
        let [a, b, c] = berger_generators();
        for g in [&a, &b, &c] {
            assert!(max_abs(&(g + g.transpose())) < 1e-15);
        }
        // same relations as L12, L13, L23 in so(3): [L12, L13] = -L23, [L12, L23] = L13, [L13, L23] = -L12
        assert!(max_abs(&(&a * &b - &b * &a + &c)) < 1e-14);
        assert!(max_abs(&(&a * &c - &c * &a - &b)) < 1e-14);
        assert!(max_abs(&(&b * &c - &c * &b + &a)) < 1e-14);
        // Casimir acts as the scalar -l(l+1) = -6 on the spin-2 representation
        let cas = &a * &a + &b * &b + &c * &c;
        assert!(max_abs(&(cas + DMatrix::identity(5, 5) * 6.0)) < 1e-13);
    }

    #[test]
    fn berger_generators_regression() {
        let r3 = libm::sqrt(3.0);
        let locked = |entries: &[(usize, usize, f64)]| {
            let mut m = DMatrix::<f64>::zeros(5, 5);
            for &(i, j, v) in entries {
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
            m
        };
        let expected = [
            locked(&[(0, 2, 2.0), (3, 4, 1.0)]),
            locked(&[(0, 3, 1.0), (1, 3, r3), (2, 4, 1.0)]),
            locked(&[(0, 4, -1.0), (1, 4, r3), (2, 3, 1.0)]),
        ];
        for (got, want) in berger_generators().iter().zip(&expected) {
            assert!(max_abs(&(got - want)) < 1e-14, "{got}");
        }
    }

    #[test]
    fn parse_ids() {
        assert_eq!("berger".parse::<Scenario>().unwrap(), Scenario::Berger);
        assert!("nope".parse::<Scenario>().is_err());
    }
}
