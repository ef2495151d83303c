//! Random data shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rgs_core::game::StackedMixed;
use rgs_core::measures::{AffinePiece, Belief, BeliefMeasure};

pub fn simplex_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    // Exponential spacings give the uniform law on the simplex.
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn belief(rng: &mut ChaCha8Rng, k: usize) -> Belief<f64> {
    Belief::normalized(simplex_point(rng, k))
}

pub fn measure(rng: &mut ChaCha8Rng, k: usize, atoms: usize) -> BeliefMeasure<f64> {
    let w = simplex_point(rng, atoms);
    BeliefMeasure::new((0..atoms).map(|s| (belief(rng, k), w[s])).collect()).unwrap()
}

/// Splits each atom of `u` into up to three points with the same barycenter.
/// The result is dominated by `u`.
pub fn split(rng: &mut ChaCha8Rng, u: &BeliefMeasure<f64>) -> BeliefMeasure<f64> {
    let k = u.dim();
    let mut items = Vec::new();
    for a in u.atoms() {
        let parts = rng.gen_range(1..=3);
        let dirs: Vec<Vec<f64>> = (0..parts)
            .map(|_| {
                let x = simplex_point(rng, k);
                x.iter().zip(a.atom.iter()).map(|(q, p)| q - p).collect()
            })
            .collect();
        let lam = simplex_point(rng, parts);
        // Center the directions, then shrink until every point is inside.
        let mean: Vec<f64> = (0..k)
            .map(|s| (0..parts).map(|r| lam[r] * dirs[r][s]).sum())
            .collect();
        let mut scale: f64 = 1.0;
        for d in &dirs {
            for s in 0..k {
                let step = d[s] - mean[s];
                if step < 0.0 {
                    scale = scale.min(a.atom[s] / -step);
                }
            }
        }
        for r in 0..parts {
            let q: Vec<f64> = (0..k)
                .map(|s| (a.atom[s] + scale * (dirs[r][s] - mean[s])).max(0.0))
                .collect();
            items.push((Belief::normalized(q), a.weight * lam[r]));
        }
    }
    BeliefMeasure::new(items).unwrap()
}

/// Random concave function given as a minimum of affine pieces.
pub fn concave(rng: &mut ChaCha8Rng, k: usize) -> Vec<AffinePiece<f64>> {
    let n = rng.gen_range(1..=5);
    (0..n)
        .map(|_| AffinePiece {
            constant: rng.gen_range(-1.0..1.0),
            gradient: (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        })
        .collect()
}

/// Joint law on states x signals.
pub fn joint(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Vec<Vec<f64>> {
    let flat = simplex_point(rng, k * d);
    (0..k).map(|s| flat[s * d..(s + 1) * d].to_vec()).collect()
}

pub fn stacked(rng: &mut ChaCha8Rng, k: usize, i: usize) -> StackedMixed<f64> {
    StackedMixed::normalized((0..k).map(|_| simplex_point(rng, i)).collect())
}

/// Measure with one to three atoms.
pub fn small_measure(rng: &mut ChaCha8Rng, k: usize) -> BeliefMeasure<f64> {
    let n = rng.gen_range(1..4);
    measure(rng, k, n)
}
