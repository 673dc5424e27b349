//! Browser demo bindings for the dpaudit toolkit.
//!
//! Exposes three interactive operations to the static page in `www/`:
//! the counterexample audit, the claimed-vs-true sensitivity curve, and
//! the violation-fraction sweep. Each returns a JSON string the page
//! parses and plots; all computation runs in wasm via the core crate.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dpaudit::{
    check_dp_bound, counterexample_pair, effective_epsilon, run_violation_simulation,
    true_sensitivity_l2clip, MechanismSpec, PairMode, SamplerKind, SigmaConvention,
    SimulationConfig,
};

/// Cap on demo problem sizes so a browser tab stays responsive.
const MAX_DEMO_VECTORS: u32 = 5_000;
const MAX_DEMO_DIM: usize = 1_024;

/// Audit the refutation pair (+-2C/3, +-2C/3) under the claimed-adept
/// calibration; returns the finding as JSON.
#[wasm_bindgen]
pub fn counterexample_audit(clip: f64, epsilon: f64) -> Result<String, JsError> {
    counterexample_audit_json(clip, epsilon).map_err(|e| JsError::new(&e))
}

/// Claimed vs true sensitivity and effective epsilon over a dimension
/// list like "1,2,4,...,1024"; returns JSON rows.
#[wasm_bindgen]
pub fn sensitivity_curve(clip: f64, epsilon: f64, dims_csv: &str) -> Result<String, JsError> {
    sensitivity_curve_json(clip, epsilon, dims_csv).map_err(|e| JsError::new(&e))
}

/// Violation-fraction sweep at demo scale; returns JSON rows, one per
/// (dim, sampler). `sampler` is "uniform", "gaussian" or "both".
#[wasm_bindgen]
pub fn violation_curve(
    dims_csv: &str,
    vectors: u32,
    sampler: &str,
    clip: f64,
    seed: u32,
) -> Result<String, JsError> {
    violation_curve_json(dims_csv, vectors, sampler, clip, seed).map_err(|e| JsError::new(&e))
}

fn counterexample_audit_json(clip: f64, epsilon: f64) -> Result<String, String> {
    let spec = MechanismSpec::claimed_adept(clip, epsilon).map_err(|e| e.to_string())?;
    let (x, y) = counterexample_pair(clip);
    let finding = check_dp_bound(&x, &y, &spec).map_err(|e| e.to_string())?;
    serde_json::to_string(&finding).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SensitivityRow {
    dim: usize,
    claimed: f64,
    true_sensitivity: f64,
    effective_epsilon: f64,
}

fn sensitivity_curve_json(clip: f64, epsilon: f64, dims_csv: &str) -> Result<String, String> {
    if !(clip > 0.0 && clip.is_finite()) {
        return Err("clip constant must be positive".into());
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err("epsilon must be positive".into());
    }
    let dims = parse_dims(dims_csv)?;
    let rows: Vec<SensitivityRow> = dims
        .into_iter()
        .map(|dim| {
            let claimed = 2.0 * clip;
            let true_sensitivity = true_sensitivity_l2clip(clip, dim);
            SensitivityRow {
                dim,
                claimed,
                true_sensitivity,
                effective_epsilon: effective_epsilon(epsilon, claimed, true_sensitivity),
            }
        })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

fn violation_curve_json(
    dims_csv: &str,
    vectors: u32,
    sampler: &str,
    clip: f64,
    seed: u32,
) -> Result<String, String> {
    if !(2..=MAX_DEMO_VECTORS).contains(&vectors) {
        return Err(format!("vectors must be in [2, {MAX_DEMO_VECTORS}]"));
    }
    let dims = parse_dims(dims_csv)?;
    let samplers: Vec<SamplerKind> = match sampler {
        "both" => vec![SamplerKind::UniformPerDim, SamplerKind::GaussianZeroCentered],
        other => vec![other.parse().map_err(|e: dpaudit::Error| e.to_string())?],
    };
    let mut records = Vec::new();
    for kind in samplers {
        let config = SimulationConfig {
            dims: dims.clone(),
            num_vectors: vectors as usize,
            clip_constant: clip,
            sampler: kind,
            pair_mode: PairMode::AllPairs,
            seed: seed as u64,
            sigma_convention: SigmaConvention::Variance,
        };
        let result = run_violation_simulation(&config).map_err(|e| e.to_string())?;
        records.extend(result.records);
    }
    serde_json::to_string(&records).map_err(|e| e.to_string())
}

fn parse_dims(dims_csv: &str) -> Result<Vec<usize>, String> {
    let dims = dims_csv
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid dimension '{part}'"))
        })
        .collect::<Result<Vec<usize>, String>>()?;
    if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > MAX_DEMO_DIM) {
        return Err(format!("dimensions must be in [1, {MAX_DEMO_DIM}]"));
    }
    Ok(dims)
}
