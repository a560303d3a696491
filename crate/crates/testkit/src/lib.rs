//! Reference implementations used only by tests.
//!
//! Everything here is deliberately independent of the production crates: the
//! dual QP is solved by projected gradient over the feasible polytope, not by
//! pairwise coordinate updates, so the two routes can cross-check each other.

pub mod qp_oracle;

pub use qp_oracle::{
    decision_score, gram_matrix, kkt_gap, objective, rbf, solve_one_class_dual, OracleSolution,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded 4-d training set: a gaussian cloud with `outliers` far points.
/// Scales differ per column so standardization actually matters.
pub fn random_training_set(seed: u64, len: usize, outliers: usize) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [15.0, 20.0, 25.0, 28.0];
    let center = [90.0, 40.0, 130.0, 131.0];
    let mut points = Vec::with_capacity(len);
    for i in 0..len {
        let far = i < outliers;
        let mut p = [0.0f64; 4];
        for c in 0..4 {
            let z = gauss(&mut rng);
            let offset = if far { 5.0 + (i as f64) } else { 0.0 };
            p[c] = center[c] + scales[c] * (z + offset);
        }
        points.push(p);
    }
    points
}

/// Standard normal via Box-Muller, deterministic under the seeded rng.
pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
