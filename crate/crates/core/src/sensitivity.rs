//! Analytic and empirical L1 sensitivity of the clipping transforms.
//!
//! The original mechanism claims the L2 ball of radius C has L1 diameter
//! 2C. The true value is 2C*sqrt(n), attained at the antipodal hypercube
//! corners (+-C/sqrt(n), ..., +-C/sqrt(n)); a two-dimensional pair at
//! (+-2C/3, +-2C/3) already realizes distance 8C/3 > 2C and refutes the
//! claim. This module carries the formulas, the witness constructions, a
//! Monte Carlo estimator, and a brute-force oracle that searches the
//! sphere directly without relying on the analytic answer.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::simulate::{sample_latents, SamplerKind, SigmaConvention};
use crate::vector::{clip, l1_distance, ClipSpec, LatentVector, NormKind};

/// Label attached to the refuted 2C claim wherever it is reported.
pub const CLAIMED_LABEL: &str = "claimed (refuted)";

/// The claimed L1 sensitivity of L2 clipping at constant C: returns 2C.
/// The claim is false for any dimension above 1.
pub fn claimed_sensitivity(c: f64) -> f64 {
    assert!(c > 0.0, "clip constant must be positive");
    2.0 * c
}

/// The true L1 sensitivity of L2 clipping in n dimensions: 2C*sqrt(n).
pub fn true_sensitivity_l2clip(c: f64, n: usize) -> f64 {
    assert!(c > 0.0, "clip constant must be positive");
    assert!(n >= 1, "dimension must be >= 1");
    2.0 * c * (n as f64).sqrt()
}

/// The L1 sensitivity of L1 clipping: the L1 ball's L1 diameter, 2C,
/// independent of dimension.
pub fn sensitivity_l1clip(c: f64) -> f64 {
    assert!(c > 0.0, "clip constant must be positive");
    2.0 * c
}

/// The antipodal corner pair (-C/sqrt(n), ...) and (+C/sqrt(n), ...):
/// both on the L2 sphere of radius C, at the maximal L1 distance
/// 2C*sqrt(n) from each other.
pub fn extremal_pair(c: f64, n: usize) -> (LatentVector, LatentVector) {
    assert!(c > 0.0, "clip constant must be positive");
    assert!(n >= 1, "dimension must be >= 1");
    let coord = c / (n as f64).sqrt();
    (
        LatentVector::from_components_unchecked(vec![-coord; n]),
        LatentVector::from_components_unchecked(vec![coord; n]),
    )
}

/// The two-dimensional refutation pair (-2C/3, -2C/3) and (2C/3, 2C/3).
/// Both survive L2 clipping unchanged and sit 8C/3 > 2C apart in L1.
pub fn counterexample_pair(c: f64) -> (LatentVector, LatentVector) {
    assert!(c > 0.0, "clip constant must be positive");
    let coord = 2.0 * c / 3.0;
    (
        LatentVector::from_components_unchecked(vec![-coord, -coord]),
        LatentVector::from_components_unchecked(vec![coord, coord]),
    )
}

/// Worst-case privacy level actually delivered by a Laplace mechanism
/// calibrated to the wrong sensitivity: eps * df_true / df_claimed.
pub fn effective_epsilon(epsilon: f64, delta_f_claimed: f64, delta_f_true: f64) -> f64 {
    assert!(epsilon > 0.0 && delta_f_claimed > 0.0 && delta_f_true > 0.0);
    epsilon * delta_f_true / delta_f_claimed
}

/// Claimed vs true sensitivity for one clipping spec, with the maximum
/// realized distance and the pair that realizes it.
#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    pub dim: usize,
    pub clip_constant: f64,
    pub claimed: f64,
    pub claimed_label: &'static str,
    pub true_analytic: f64,
    pub empirical_max: f64,
    pub witness_pair: (LatentVector, LatentVector),
    pub samples_used: usize,
}

fn analytic_bounds(spec: &ClipSpec, n: usize) -> (f64, &'static str, f64) {
    let c = spec.clip_constant();
    match spec.norm_kind() {
        NormKind::L2 => (claimed_sensitivity(c), CLAIMED_LABEL, true_sensitivity_l2clip(c, n)),
        NormKind::L1 => (sensitivity_l1clip(c), "claimed (exact)", sensitivity_l1clip(c)),
    }
}

fn analytic_witness(spec: &ClipSpec, n: usize) -> (LatentVector, LatentVector) {
    let c = spec.clip_constant();
    match spec.norm_kind() {
        NormKind::L2 => extremal_pair(c, n),
        NormKind::L1 => {
            // Antipodal vertices of the cross-polytope.
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            a[0] = c;
            b[0] = -c;
            (
                LatentVector::from_components_unchecked(a),
                LatentVector::from_components_unchecked(b),
            )
        }
    }
}

/// Report built from the analytic witness alone (no sampling).
pub fn analytic_report(spec: &ClipSpec, n: usize) -> SensitivityReport {
    assert!(n >= 1, "dimension must be >= 1");
    let (claimed, claimed_label, true_analytic) = analytic_bounds(spec, n);
    let witness = analytic_witness(spec, n);
    let fx = clip(&witness.0, spec);
    let fy = clip(&witness.1, spec);
    let realized = l1_distance(fx.components(), fy.components());
    assert!(
        realized <= true_analytic + 1e-9,
        "witness distance {realized} exceeds analytic bound {true_analytic}"
    );
    SensitivityReport {
        dim: n,
        clip_constant: spec.clip_constant(),
        claimed,
        claimed_label,
        true_analytic,
        empirical_max: realized,
        witness_pair: witness,
        samples_used: 0,
    }
}

/// Maximum pairwise L1 distance after clipping, with the arg-max pair.
/// The reduction order is fixed (ties break toward the smallest index
/// pair), so the result does not depend on worker count.
pub fn empirical_max_over(vectors: &[LatentVector], spec: &ClipSpec) -> (f64, usize, usize) {
    assert!(vectors.len() >= 2, "need at least two vectors");
    let clipped: Vec<LatentVector> = vectors.iter().map(|v| clip(v, spec)).collect();
    let best = (0..clipped.len() - 1)
        .into_par_iter()
        .map(|i| {
            let mut local = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
            for j in (i + 1)..clipped.len() {
                let d = l1_distance(clipped[i].components(), clipped[j].components());
                if d > local.0 {
                    local = (d, i, j);
                }
            }
            local
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );
    best
}

/// Monte Carlo sensitivity estimate: sample `num_vectors` latents, clip
/// them, and take the maximum pairwise L1 distance. Vectors are drawn
/// sequentially from one stream, so runs with growing `num_vectors` and a
/// fixed seed extend the same sample.
pub fn empirical_sensitivity(
    spec: &ClipSpec,
    n: usize,
    sampler: SamplerKind,
    num_vectors: usize,
    seed: u64,
) -> SensitivityReport {
    assert!(n >= 1, "dimension must be >= 1");
    assert!(num_vectors >= 2, "need at least two vectors");
    let mut rng = SeededRng::new(seed);
    let vectors = sample_latents(
        sampler,
        n,
        num_vectors,
        spec.clip_constant(),
        SigmaConvention::Variance,
        &mut rng,
    );
    let (empirical_max, i, j) = empirical_max_over(&vectors, spec);
    let (claimed, claimed_label, true_analytic) = analytic_bounds(spec, n);
    assert!(
        empirical_max <= true_analytic + 1e-9,
        "empirical max {empirical_max} exceeds analytic bound {true_analytic}"
    );
    SensitivityReport {
        dim: n,
        clip_constant: spec.clip_constant(),
        claimed,
        claimed_label,
        true_analytic,
        empirical_max,
        witness_pair: (vectors[i].clone(), vectors[j].clone()),
        samples_used: num_vectors,
    }
}

const ORACLE_MAX_DIM: usize = 16;
const ASCENT_ITERATIONS: usize = 32;

fn normalize_in_place(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    debug_assert!(norm > 0.0);
    for v in x.iter_mut() {
        *v /= norm;
    }
}

fn random_unit_vector(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        if x.iter().map(|v| v * v).sum::<f64>() > 0.0 {
            normalize_in_place(&mut x);
            return x;
        }
    }
}

fn sign_or_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Push the pair apart along the sign pattern of their difference,
/// renormalizing onto the unit sphere after each step.
fn sign_aligned_ascent(x: &mut [f64], y: &mut [f64]) -> f64 {
    let mut step = 1.0;
    for _ in 0..ASCENT_ITERATIONS {
        for i in 0..x.len() {
            let s = sign_or_zero(x[i] - y[i]);
            x[i] += step * s;
            y[i] -= step * s;
        }
        normalize_in_place(x);
        normalize_in_place(y);
        step *= 0.7;
    }
    l1_distance(x, y)
}

/// Brute-force search for the maximum L1 distance between two points of
/// the L2 sphere of radius C: random unit-vector pairs, each refined by
/// sign-aligned ascent. Independent of the analytic 2C*sqrt(n) result it
/// is used to verify. Trials split into deterministic per-chunk streams,
/// so the result is seed-stable for any worker count.
pub fn brute_force_max_l1_on_sphere(
    c: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    assert!(c > 0.0, "clip constant must be positive");
    if !(1..=ORACLE_MAX_DIM).contains(&n) {
        return Err(Error::DimOutOfRange {
            dim: n,
            min: 1,
            max: ORACLE_MAX_DIM,
        });
    }
    assert!(trials >= 10_000, "the oracle is specified for >= 10^4 trials");

    let chunks: usize = 64;
    let per_chunk = trials / chunks;
    let remainder = trials % chunks;
    let best_unit = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::substream(seed, k as u64);
            let mut local = 0.0f64;
            let chunk_trials = per_chunk + usize::from(k < remainder);
            for _ in 0..chunk_trials {
                let mut x = random_unit_vector(n, &mut rng);
                let mut y = random_unit_vector(n, &mut rng);
                local = local.max(l1_distance(&x, &y));
                local = local.max(sign_aligned_ascent(&mut x, &mut y));
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(c * best_unit)
}
