use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const RANDOM_DIRECTIONS: usize = 64;
const DIRECTION_SEED: u64 = 0x5a0e_070b;

/// Fixed direction set for support-function comparisons: the `2n` signed
/// coordinate axes followed by 64 seeded pseudo-random unit vectors.
#[derive(Debug, Clone)]
pub struct TestDirections {
    dirs: Vec<DVector<f64>>,
}

impl TestDirections {
    pub fn standard(n: usize) -> Self {
        let mut dirs = Self::axes(n).dirs;
        let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED ^ n as u64);
        for _ in 0..RANDOM_DIRECTIONS {
            dirs.push(random_unit(n, &mut rng));
        }
        TestDirections { dirs }
    }

    /// Only the `2n` signed axes.
    pub fn axes(n: usize) -> Self {
        let mut dirs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            dirs.push(e.clone());
            e[i] = -1.0;
            dirs.push(e);
        }
        TestDirections { dirs }
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.dirs.iter()
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Uniformly distributed unit vector (normalized Gaussian sample).
pub fn random_unit<R: rand::Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}
