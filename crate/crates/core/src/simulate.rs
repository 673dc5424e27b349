//! Violation-fraction simulation: the share of clipped vector pairs whose
//! L1 distance exceeds the claimed `2C` sensitivity bound, swept over the
//! latent dimension.
//!
//! Every pair of latent vectors is a neighboring pair in the local-DP
//! reading, so any pair whose clipped L1 distance exceeds the sensitivity
//! the noise was calibrated to is a direct privacy violation. The sweep
//! shows the fraction climbing from 0 at `n = 1` to essentially 1 by
//! `n = 32` for both latent-space samplers.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::vector::{clip, ClipSpec, LatentVector, NormKind};

/// Latent-space distribution the simulated encoder outputs are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SamplerKind {
    /// Each coordinate i.i.d. uniform on the open interval (-C, +C).
    #[serde(rename = "uniform")]
    UniformPerDim,
    /// Each coordinate i.i.d. zero-centered normal with variance 0.1*C.
    #[serde(rename = "gaussian")]
    GaussianZeroCentered,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::UniformPerDim => "uniform",
            SamplerKind::GaussianZeroCentered => "gaussian",
        }
    }

    fn id(self) -> u64 {
        match self {
            SamplerKind::UniformPerDim => 0,
            SamplerKind::GaussianZeroCentered => 1,
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::UniformPerDim),
            "gaussian" => Ok(SamplerKind::GaussianZeroCentered),
            other => Err(Error::InvalidParameter(format!(
                "unknown sampler '{other}' (expected uniform or gaussian)"
            ))),
        }
    }
}

/// Reading of the "variance = 0.1*C" Gaussian parameterization.
///
/// `Variance` is the literal reading (sigma = sqrt(0.1*C)) and the
/// default; `StdDev` treats 0.1*C as sigma itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaConvention {
    #[default]
    Variance,
    StdDev,
}

impl std::str::FromStr for SigmaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(SigmaConvention::Variance),
            "stddev" => Ok(SigmaConvention::StdDev),
            other => Err(Error::InvalidParameter(format!(
                "unknown sigma convention '{other}' (expected variance or stddev)"
            ))),
        }
    }
}

/// Default dimension sweep: small dims for the trend plus the typical
/// encoder range 32..1024.
pub const DEFAULT_DIM_SWEEP: &[usize] = &[1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    /// Enumerate all m*(m-1)/2 distinct pairs.
    AllPairs,
    /// Check a uniform sample of distinct pairs.
    SampledPairs(u64),
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub dims: Vec<usize>,
    pub num_vectors: usize,
    pub clip_constant: f64,
    pub sampler: SamplerKind,
    pub pair_mode: PairMode,
    pub seed: u64,
    pub sigma_convention: SigmaConvention,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidParameter("dims must be non-empty".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::InvalidParameter("every dim must be >= 1".into()));
        }
        if self.num_vectors < 2 {
            return Err(Error::InvalidParameter("num_vectors must be >= 2".into()));
        }
        if !(self.clip_constant > 0.0 && self.clip_constant.is_finite()) {
            return Err(Error::NonPositive {
                name: "clip_constant",
                value: self.clip_constant,
            });
        }
        if let PairMode::SampledPairs(0) = self.pair_mode {
            return Err(Error::InvalidParameter("sampled pair count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome for one (dim, sampler) cell of the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct DimRecord {
    pub dim: usize,
    pub sampler: SamplerKind,
    pub num_vectors: usize,
    pub pairs_checked: u64,
    pub violations: u64,
    pub violation_fraction: f64,
    pub clip_constant: f64,
    pub seed: u64,
    /// The 2C bound the pairs were checked against.
    pub claimed_bound: f64,
    /// Set when a SampledPairs count had to be clamped to the number of
    /// distinct pairs available.
    pub pairs_clamped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationResult {
    pub records: Vec<DimRecord>,
}

pub const CSV_HEADER: &str =
    "dim,sampler,num_vectors,pairs_checked,violations,violation_fraction,clip_constant,seed";

impl SimulationResult {
    /// CSV rows with the fixed header, LF line endings, and round-trip
    /// exact float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.dim,
                r.sampler.name(),
                r.num_vectors,
                r.pairs_checked,
                r.violations,
                r.violation_fraction,
                r.clip_constant,
                r.seed
            ));
        }
        out
    }
}

/// `count` latent vectors with coordinates i.i.d. uniform on (-C, +C).
pub fn sample_uniform_latents(
    n: usize,
    count: usize,
    c: f64,
    rng: &mut SeededRng,
) -> Vec<LatentVector> {
    (0..count)
        .map(|_| {
            LatentVector::from_components_unchecked(
                (0..n).map(|_| rng.uniform_symmetric(c)).collect(),
            )
        })
        .collect()
}

/// `count` latent vectors with coordinates i.i.d. N(0, 0.1*C).
pub fn sample_gaussian_latents(
    n: usize,
    count: usize,
    c: f64,
    rng: &mut SeededRng,
) -> Vec<LatentVector> {
    sample_gaussian_latents_with(n, count, c, SigmaConvention::Variance, rng)
}

pub fn sample_gaussian_latents_with(
    n: usize,
    count: usize,
    c: f64,
    convention: SigmaConvention,
    rng: &mut SeededRng,
) -> Vec<LatentVector> {
    let sigma = match convention {
        SigmaConvention::Variance => (0.1 * c).sqrt(),
        SigmaConvention::StdDev => 0.1 * c,
    };
    (0..count)
        .map(|_| {
            LatentVector::from_components_unchecked(
                (0..n).map(|_| sigma * rng.standard_normal()).collect(),
            )
        })
        .collect()
}

/// Draw `count` vectors from `kind`'s distribution.
pub fn sample_latents(
    kind: SamplerKind,
    n: usize,
    count: usize,
    c: f64,
    convention: SigmaConvention,
    rng: &mut SeededRng,
) -> Vec<LatentVector> {
    match kind {
        SamplerKind::UniformPerDim => sample_uniform_latents(n, count, c, rng),
        SamplerKind::GaussianZeroCentered => {
            sample_gaussian_latents_with(n, count, c, convention, rng)
        }
    }
}

// Stream indices: one vector-sampling stream and one pair-sampling stream
// per (dim, sampler) cell, all derived from the master seed.
fn vector_stream(seed: u64, dim: usize, sampler: SamplerKind) -> SeededRng {
    SeededRng::substream(seed, (sampler.id() << 40) | dim as u64)
}

fn pair_stream(seed: u64, dim: usize, sampler: SamplerKind) -> SeededRng {
    SeededRng::substream(seed, (1 << 62) | (sampler.id() << 40) | dim as u64)
}

/// Clipped vectors in one contiguous row-major buffer.
struct FlatRows {
    data: Vec<f64>,
    dim: usize,
    count: usize,
}

impl FlatRows {
    fn from_clipped(vectors: &[LatentVector], spec: &ClipSpec) -> Self {
        let dim = vectors[0].dim();
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            data.extend_from_slice(clip(v, spec).components());
        }
        Self {
            data,
            dim,
            count: vectors.len(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn l1_dist_rows(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y).abs();
    }
    acc
}

/// Count pairs with L1 distance strictly above `bound` over all distinct
/// pairs. Parallelizes over the first index; the additive merge makes the
/// result independent of worker count.
fn count_violations_all_pairs(rows: &FlatRows, bound: f64) -> (u64, u64) {
    let m = rows.count;
    let violations: u64 = (0..m.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let a = rows.row(i);
            let mut local = 0u64;
            for j in (i + 1)..m {
                if l1_dist_rows(a, rows.row(j)) > bound {
                    local += 1;
                }
            }
            local
        })
        .sum();
    let pairs = (m as u64) * (m as u64 - 1) / 2;
    (pairs, violations)
}

/// Decode a flat pair index in [0, m*(m-1)/2) to (i, j) with i < j.
fn decode_pair_index(p: u64, m: u64) -> (usize, usize) {
    // pairs_before(i) = i*m - i*(i+1)/2; find the largest i with
    // pairs_before(i) <= p by binary search.
    let pairs_before = |i: u64| i * m - i * (i + 1) / 2;
    let (mut lo, mut hi) = (0u64, m - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if pairs_before(mid) <= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = if pairs_before(hi) <= p { hi } else { lo };
    let j = i + 1 + (p - pairs_before(i));
    (i as usize, j as usize)
}

/// `k` distinct pair indices out of `total`, uniformly, via Floyd's
/// algorithm. Requires k <= total.
fn sample_distinct_pair_indices(total: u64, k: u64, rng: &mut SeededRng) -> Vec<u64> {
    let mut chosen = std::collections::HashSet::with_capacity(k as usize);
    let mut picks = Vec::with_capacity(k as usize);
    for t in (total - k)..total {
        let r = rng.uniform_below(t + 1);
        let pick = if chosen.contains(&r) { t } else { r };
        chosen.insert(pick);
        picks.push(pick);
    }
    picks.sort_unstable();
    picks
}

fn count_violations_sampled(
    rows: &FlatRows,
    bound: f64,
    k: u64,
    rng: &mut SeededRng,
) -> (u64, u64) {
    let m = rows.count as u64;
    let total = m * (m - 1) / 2;
    let picks = sample_distinct_pair_indices(total, k, rng);
    let violations: u64 = picks
        .par_iter()
        .map(|&p| {
            let (i, j) = decode_pair_index(p, m);
            u64::from(l1_dist_rows(rows.row(i), rows.row(j)) > bound)
        })
        .sum();
    (k, violations)
}

/// Run the sweep: for each dim, sample the configured latent vectors,
/// L2-clip them at C, and count pairs whose L1 distance strictly exceeds
/// the claimed 2C bound. Deterministic for a fixed config regardless of
/// worker count.
pub fn run_violation_simulation(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let c = config.clip_constant;
    let clip_spec = ClipSpec::new(NormKind::L2, c)?;
    let claimed_bound = 2.0 * c;
    let m = config.num_vectors;

    let mut records = Vec::with_capacity(config.dims.len());
    for &dim in &config.dims {
        let mut rng = vector_stream(config.seed, dim, config.sampler);
        let vectors = sample_latents(
            config.sampler,
            dim,
            m,
            c,
            config.sigma_convention,
            &mut rng,
        );
        let rows = FlatRows::from_clipped(&vectors, &clip_spec);
        drop(vectors);

        let total_pairs = (m as u64) * (m as u64 - 1) / 2;
        let (pairs_checked, violations, pairs_clamped) = match config.pair_mode {
            PairMode::AllPairs => {
                let (p, v) = count_violations_all_pairs(&rows, claimed_bound);
                (p, v, false)
            }
            PairMode::SampledPairs(k) if k >= total_pairs => {
                let (p, v) = count_violations_all_pairs(&rows, claimed_bound);
                (p, v, true)
            }
            PairMode::SampledPairs(k) => {
                let mut pair_rng = pair_stream(config.seed, dim, config.sampler);
                let (p, v) = count_violations_sampled(&rows, claimed_bound, k, &mut pair_rng);
                (p, v, false)
            }
        };

        records.push(DimRecord {
            dim,
            sampler: config.sampler,
            num_vectors: m,
            pairs_checked,
            violations,
            violation_fraction: violations as f64 / pairs_checked as f64,
            clip_constant: c,
            seed: config.seed,
            claimed_bound,
            pairs_clamped,
        });
    }
    Ok(SimulationResult { records })
}
