//! Laplace noise sampling, density evaluation, and the privatization
//! mechanisms.
//!
//! Three calibrations are provided. `ClaimedAdept` is the original
//! mechanism: L2-clip then per-coordinate Laplace noise at scale `2C/eps`,
//! calibrated to a claimed L1 sensitivity of `2C`. That claim is false for
//! dimension >= 2 (the true sensitivity of L2 clipping is `2C*sqrt(n)`),
//! so the mode is kept only as the audit target. `CorrectedRescaled` keeps
//! the L2 clip and scales the noise to the true sensitivity;
//! `CorrectedL1Clip` switches the clip to the L1 norm, whose ball really
//! does have L1 diameter `2C`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::vector::{clip, ClipSpec, LatentVector, NormKind};

/// How the noise scale is calibrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    ClaimedAdept,
    CorrectedRescaled,
    CorrectedL1Clip,
}

impl ScaleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScaleMode::ClaimedAdept => "claimed-adept",
            ScaleMode::CorrectedRescaled => "corrected-rescaled",
            ScaleMode::CorrectedL1Clip => "corrected-l1clip",
        }
    }
}

impl std::str::FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "claimed-adept" => Ok(ScaleMode::ClaimedAdept),
            "corrected-rescaled" => Ok(ScaleMode::CorrectedRescaled),
            "corrected-l1clip" => Ok(ScaleMode::CorrectedL1Clip),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode '{other}' (expected claimed-adept, corrected-rescaled or corrected-l1clip)"
            ))),
        }
    }
}

/// One fully calibrated privatization mechanism: clipping transform,
/// privacy budget, claimed sensitivity and the resulting noise scale.
#[derive(Clone, Debug, Serialize)]
pub struct MechanismSpec {
    clip: ClipSpec,
    epsilon: f64,
    scale_mode: ScaleMode,
    claimed_sensitivity: f64,
    noise_scale: f64,
    /// Populated for the n-dependent `CorrectedRescaled` calibration.
    dim: Option<usize>,
}

impl MechanismSpec {
    /// L2 clip, noise scale `2C/eps` (the refuted calibration).
    pub fn claimed_adept(clip_constant: f64, epsilon: f64) -> Result<Self> {
        let clip = ClipSpec::new(NormKind::L2, clip_constant)?;
        let claimed = 2.0 * clip_constant;
        Ok(Self {
            clip,
            epsilon: check_epsilon(epsilon)?,
            scale_mode: ScaleMode::ClaimedAdept,
            claimed_sensitivity: claimed,
            noise_scale: claimed / epsilon,
            dim: None,
        })
    }

    /// L2 clip, noise rescaled to the true sensitivity `2C*sqrt(n)`.
    pub fn corrected_rescaled(clip_constant: f64, epsilon: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        let clip = ClipSpec::new(NormKind::L2, clip_constant)?;
        let sensitivity = 2.0 * clip_constant * (dim as f64).sqrt();
        Ok(Self {
            clip,
            epsilon: check_epsilon(epsilon)?,
            scale_mode: ScaleMode::CorrectedRescaled,
            claimed_sensitivity: sensitivity,
            noise_scale: sensitivity / epsilon,
            dim: Some(dim),
        })
    }

    /// L1 clip, noise scale `2C/eps` (the L1 ball's L1 diameter is 2C).
    pub fn corrected_l1clip(clip_constant: f64, epsilon: f64) -> Result<Self> {
        let clip = ClipSpec::new(NormKind::L1, clip_constant)?;
        let sensitivity = 2.0 * clip_constant;
        Ok(Self {
            clip,
            epsilon: check_epsilon(epsilon)?,
            scale_mode: ScaleMode::CorrectedL1Clip,
            claimed_sensitivity: sensitivity,
            noise_scale: sensitivity / epsilon,
            dim: None,
        })
    }

    pub fn from_mode(
        mode: ScaleMode,
        clip_constant: f64,
        epsilon: f64,
        dim: usize,
    ) -> Result<Self> {
        match mode {
            ScaleMode::ClaimedAdept => Self::claimed_adept(clip_constant, epsilon),
            ScaleMode::CorrectedRescaled => Self::corrected_rescaled(clip_constant, epsilon, dim),
            ScaleMode::CorrectedL1Clip => Self::corrected_l1clip(clip_constant, epsilon),
        }
    }

    pub fn clip_spec(&self) -> &ClipSpec {
        &self.clip
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn claimed_sensitivity(&self) -> f64 {
        self.claimed_sensitivity
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Rejects vectors whose dimension disagrees with an n-dependent scale.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.dim {
            Some(n) if n != dim => Err(Error::DimensionMismatch { left: n, right: dim }),
            _ => Ok(()),
        }
    }

    /// Privacy status of the calibration, spelled out for reports.
    pub fn privacy_note(&self) -> &'static str {
        match self.scale_mode {
            ScaleMode::ClaimedAdept => {
                "NOT epsilon-DP for dim >= 2: calibrated to the refuted claim that \
                 L2 clipping has L1 sensitivity 2C; the true sensitivity is 2C*sqrt(n)"
            }
            ScaleMode::CorrectedRescaled => {
                "epsilon-DP: noise rescaled to the true L1 sensitivity 2C*sqrt(n) of L2 clipping"
            }
            ScaleMode::CorrectedL1Clip => {
                "epsilon-DP: L1 clipping bounds outputs in the L1 ball, whose L1 diameter is 2C"
            }
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<f64> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(epsilon)
    } else {
        Err(Error::NonPositive {
            name: "epsilon",
            value: epsilon,
        })
    }
}

/// Laplace density with scale `b` centered at `mu`, evaluated at `t`:
/// `(1/2b) * exp(-|mu - t| / b)`.
pub fn laplace_density(t: f64, mu: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::NonPositive { name: "scale b", value: b });
    }
    Ok((-((mu - t).abs()) / b).exp() / (2.0 * b))
}

/// One Laplace draw via the inverse-CDF transform of a single uniform
/// `u` in (-1/2, 1/2): `mu - b * sign(u) * ln(1 - 2|u|)`.
pub fn sample_laplace(mu: f64, b: f64, rng: &mut SeededRng) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::NonPositive { name: "scale b", value: b });
    }
    let u = rng.uniform_centered();
    Ok(mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln())
}

/// Clip `r` per the spec, then add i.i.d. zero-centered Laplace noise at
/// the spec's scale to every coordinate.
///
/// Coordinates consume draws sequentially from `rng`; batch callers give
/// each vector its own substream (see [`SeededRng::substream`]).
pub fn privatize(r: &LatentVector, spec: &MechanismSpec, rng: &mut SeededRng) -> Result<LatentVector> {
    spec.check_dim(r.dim())?;
    let clipped = clip(r, spec.clip_spec());
    let components = clipped
        .components()
        .iter()
        .map(|&x| sample_laplace(0.0, spec.noise_scale(), rng).map(|eta| x + eta))
        .collect::<Result<Vec<f64>>>()?;
    LatentVector::new(components)
}

/// Log density of the mechanism emitting `output` on `input`:
/// `sum_i [ ln(eps / (2*df)) - eps * |f(input)_i - output_i| / df ]`
/// where `f` is the spec's clip and `df` its claimed sensitivity.
pub fn mechanism_log_density(
    spec: &MechanismSpec,
    input: &LatentVector,
    output: &LatentVector,
) -> Result<f64> {
    if input.dim() != output.dim() {
        return Err(Error::DimensionMismatch {
            left: input.dim(),
            right: output.dim(),
        });
    }
    spec.check_dim(input.dim())?;
    let df = spec.claimed_sensitivity();
    let eps = spec.epsilon();
    let fx = clip(input, spec.clip_spec());
    let log_norm = (eps / (2.0 * df)).ln();
    let mut total = 0.0;
    for (&fi, &zi) in fx.components().iter().zip(output.components()) {
        total += log_norm - eps * (fi - zi).abs() / df;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::l1_distance;
    use proptest::prelude::*;

    #[test]
    fn density_peak_is_half_inverse_scale() {
        for b in [0.3, 1.0, 7.5] {
            let peak = laplace_density(2.0, 2.0, b).unwrap();
            assert!((peak - 1.0 / (2.0 * b)).abs() < 1e-15);
        }
    }

    #[test]
    fn density_direct_evaluation() {
        let d = laplace_density(1.0, 0.0, 1.0).unwrap();
        assert!((d - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((d - 0.1839397).abs() < 1e-7);
    }

    #[test]
    fn density_is_symmetric_about_mu() {
        let left = laplace_density(2.0 - 0.7, 2.0, 3.0).unwrap();
        let right = laplace_density(2.0 + 0.7, 2.0, 3.0).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn density_rejects_bad_scale() {
        assert!(laplace_density(0.0, 0.0, 0.0).is_err());
        assert!(laplace_density(0.0, 0.0, -1.0).is_err());
        assert!(sample_laplace(0.0, 0.0, &mut SeededRng::new(1)).is_err());
    }

    /// Simpson quadrature on [lo, hi]; the integrand must be smooth there.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
        let n = intervals + intervals % 2; // even
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn density_normalizes_to_one() {
        for (mu, b) in [(0.0, 1.0), (3.5, 0.2), (-2.0, 4.0)] {
            let f = |t: f64| laplace_density(t, mu, b).unwrap();
            // Split at mu: |mu - t| has a kink there.
            let mass = simpson(f, mu - 40.0 * b, mu, 20_000) + simpson(f, mu, mu + 40.0 * b, 20_000);
            assert!((mass - 1.0).abs() < 1e-6, "mass {mass} for mu={mu} b={b}");
        }
    }

    #[test]
    fn sampler_moments_match_laplace() {
        let mut rng = SeededRng::new(42);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = sample_laplace(0.0, 1.0, &mut rng).unwrap();
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 2.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn sampler_variance_tracks_two_b_squared() {
        let b = 3.0;
        let mut rng = SeededRng::new(7);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = sample_laplace(0.0, b, &mut rng).unwrap();
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let expected = 2.0 * b * b;
        assert!((var - expected).abs() / expected < 0.025, "variance {var}");
    }

    #[test]
    fn scale_family_scales_deviation() {
        // Same uniform input at scales b and k*b: deviation from mu scales by k.
        let k = 5.0;
        for seed in [1u64, 2, 3, 99] {
            let d1 = sample_laplace(0.0, 1.0, &mut SeededRng::new(seed)).unwrap();
            let dk = sample_laplace(0.0, k, &mut SeededRng::new(seed)).unwrap();
            assert!((dk - k * d1).abs() <= 1e-12 * (1.0 + dk.abs()));
        }
    }

    #[test]
    fn tiny_scale_concentrates_at_mu() {
        for seed in 0..50u64 {
            let x = sample_laplace(5.0, 0.001, &mut SeededRng::new(seed)).unwrap();
            assert!((x - 5.0).abs() < 0.1, "draw {x} too far from mu");
        }
    }

    #[test]
    fn spec_noise_scales_per_mode() {
        let claimed = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
        assert_eq!(claimed.noise_scale(), 2.0);
        assert_eq!(claimed.claimed_sensitivity(), 2.0);

        let rescaled = MechanismSpec::corrected_rescaled(1.0, 1.0, 4).unwrap();
        assert_eq!(rescaled.noise_scale(), 4.0);
        assert_eq!(rescaled.claimed_sensitivity(), 4.0);

        let l1 = MechanismSpec::corrected_l1clip(1.0, 1.0).unwrap();
        assert_eq!(l1.noise_scale(), 2.0);
        assert_eq!(l1.clip_spec().norm_kind(), NormKind::L1);
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(MechanismSpec::claimed_adept(0.0, 1.0).is_err());
        assert!(MechanismSpec::claimed_adept(1.0, 0.0).is_err());
        assert!(MechanismSpec::corrected_rescaled(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn privatize_rejects_dimension_mismatch() {
        let spec = MechanismSpec::corrected_rescaled(1.0, 1.0, 4).unwrap();
        let r = LatentVector::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            privatize(&r, &spec, &mut SeededRng::new(0)),
            Err(Error::DimensionMismatch { left: 4, right: 2 })
        ));
    }

    #[test]
    fn privatize_is_deterministic_per_seed() {
        let spec = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
        let r = LatentVector::new(vec![0.5, -2.0, 0.25]).unwrap();
        let a = privatize(&r, &spec, &mut SeededRng::substream(11, 3)).unwrap();
        let b = privatize(&r, &spec, &mut SeededRng::substream(11, 3)).unwrap();
        assert_eq!(a, b);
        let c = privatize(&r, &spec, &mut SeededRng::substream(11, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn privatize_at_vanishing_noise_approaches_clip() {
        // b = 2C/eps = 1e-12 via a huge epsilon; |noise| > 1e-9 has
        // probability exp(-1000) per coordinate.
        let spec = MechanismSpec::claimed_adept(1.0, 2e12).unwrap();
        assert_eq!(spec.noise_scale(), 1e-12);
        let r = LatentVector::new(vec![3.0, 4.0]).unwrap();
        let out = privatize(&r, &spec, &mut SeededRng::new(5)).unwrap();
        let clipped = clip(&r, spec.clip_spec());
        for (&a, &b) in out.components().iter().zip(clipped.components()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn log_density_at_clipped_input_is_normalizer_only() {
        let spec = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
        let r = LatentVector::new(vec![0.3, -0.4, 0.1]).unwrap();
        let z = clip(&r, spec.clip_spec());
        let ld = mechanism_log_density(&spec, &r, &z).unwrap();
        let expected = 3.0 * (spec.epsilon() / (2.0 * spec.claimed_sensitivity())).ln();
        assert!((ld - expected).abs() < 1e-12);
    }

    #[test]
    fn log_density_direct_evaluation() {
        // n=1, df=2, eps=1, f(r)=0, z=2: ln(1/4) - 1.
        let spec = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
        let r = LatentVector::new(vec![0.0]).unwrap();
        let z = LatentVector::new(vec![2.0]).unwrap();
        let ld = mechanism_log_density(&spec, &r, &z).unwrap();
        assert!((ld - (0.25f64.ln() - 1.0)).abs() < 1e-12);
        assert!((ld + 2.38629).abs() < 1e-5);
    }

    #[test]
    fn log_density_rejects_dimension_mismatch() {
        let spec = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
        let r = LatentVector::new(vec![0.0]).unwrap();
        let z = LatentVector::new(vec![0.0, 0.0]).unwrap();
        assert!(mechanism_log_density(&spec, &r, &z).is_err());
    }

    fn arb_vec(dim: usize) -> impl Strategy<Value = LatentVector> {
        prop::collection::vec(-3.0f64..3.0, dim..=dim)
            .prop_map(LatentVector::from_components_unchecked)
    }

    proptest! {
        // Log-density differences between two inputs at one output are
        // bounded by eps * ||f(r) - f(r')||_1 / df.
        #[test]
        fn log_density_ratio_bound(r in arb_vec(3), r2 in arb_vec(3), z in arb_vec(3)) {
            let spec = MechanismSpec::claimed_adept(1.0, 1.0).unwrap();
            let diff = mechanism_log_density(&spec, &r, &z).unwrap()
                - mechanism_log_density(&spec, &r2, &z).unwrap();
            let fr = clip(&r, spec.clip_spec());
            let fr2 = clip(&r2, spec.clip_spec());
            let bound = spec.epsilon()
                * l1_distance(fr.components(), fr2.components())
                / spec.claimed_sensitivity();
            prop_assert!(diff <= bound + 1e-9);
        }
    }
}
