//! Audit toolkit for Laplace-mechanism privatization of clipped latent
//! vectors.
//!
//! A local-DP text privatization scheme clips an encoder's latent vector
//! to L2 norm C and adds per-coordinate Laplace noise at scale `2C/eps`,
//! on the claim that the clipped function has L1 sensitivity `2C`. That
//! claim is false in any dimension above one: the L1 diameter of the L2
//! ball is `2C*sqrt(n)`, so the mechanism under-noises by a factor of
//! `sqrt(n)` and delivers `eps*sqrt(n)`-DP at best. This crate implements
//! the mechanism and its two corrected calibrations, verifies the
//! sensitivity claims analytically and by brute force, constructs the
//! concrete counterexample pair, and reproduces the violation-fraction
//! simulation as plot-ready CSV.
//!
//! Modules:
//! - [`vector`]: latent vectors, norms, and the clipping transform
//! - [`mechanism`]: Laplace sampling/density and the three calibrations
//! - [`sensitivity`]: claimed vs true sensitivity, witnesses, oracle
//! - [`audit`]: per-pair DP bound checks and density-ratio probes
//! - [`simulate`]: violation-fraction sweep over latent dimensions
//! - [`cli`]: the `dpaudit` command-line surface

pub mod audit;
pub mod cli;
pub mod error;
pub mod mechanism;
pub mod rng;
pub mod sensitivity;
pub mod simulate;
pub mod vector;

pub use audit::{check_dp_bound, numeric_ratio_probe, ratio_bound_exponent, AuditFinding};
pub use error::{Error, Result};
pub use mechanism::{
    laplace_density, mechanism_log_density, privatize, sample_laplace, MechanismSpec, ScaleMode,
};
pub use rng::SeededRng;
pub use sensitivity::{
    brute_force_max_l1_on_sphere, claimed_sensitivity, counterexample_pair, effective_epsilon,
    empirical_sensitivity, extremal_pair, sensitivity_l1clip, true_sensitivity_l2clip,
    SensitivityReport,
};
pub use simulate::{
    run_violation_simulation, sample_gaussian_latents, sample_uniform_latents, PairMode,
    SamplerKind, SigmaConvention, SimulationConfig, SimulationResult,
};
pub use vector::{clip, l1_distance, l1_norm, l2_norm, ClipSpec, LatentVector, NormKind};
