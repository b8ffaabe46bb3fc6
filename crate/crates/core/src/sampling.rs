//! Seeded unit-vector clouds in `m` and `q`.

use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::connection::AdaptedMetric;

/// Deterministic RNG used by every sampler in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal vector of length `n`.
pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Unit vectors in `m` (normal metric) and in `q` (unit `g`-norm under `P`),
/// both stored in algebra coordinates.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub seed: u64,
    pub xs: Vec<DVector<f64>>,
    pub xis: Vec<DVector<f64>>,
    pub refine: bool,
}

impl SampleCloud {
    pub fn new(metric: &AdaptedMetric, seed: u64, n_x: usize, n_xi: usize) -> Self {
        let t = metric.triple();
        let mut r = rng(seed);
        let mut xs = Vec::with_capacity(n_x);
        while xs.len() < n_x && t.dim_m() > 0 {
            let v = gaussian(&mut r, t.dim_m());
            let n = v.norm();
            if n > 1e-12 {
                xs.push(t.from_m(&(v / n)));
            }
        }
        let mut xis = Vec::with_capacity(n_xi);
        while xis.len() < n_xi && t.dim_q() > 0 {
            let v = gaussian(&mut r, t.dim_q());
            let n = metric.norm_q(&v);
            if n > 1e-12 {
                xis.push(t.from_q(&(v / n)));
            }
        }
        SampleCloud { seed, xs, xis, refine: false }
    }

    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    /// All `(x, xi)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, &DVector<f64>, &DVector<f64>)> + '_ {
        let n_xi = self.xis.len();
        self.xs
            .iter()
            .enumerate()
            .flat_map(move |(i, x)| self.xis.iter().enumerate().map(move |(j, xi)| (i * n_xi + j, x, xi)))
    }

    pub fn len_pairs(&self) -> usize {
        self.xs.len() * self.xis.len()
    }
}
