//! Latent vectors, norms, and the clipping transform that defines the
//! privatized function `f`.
//!
//! Clipping rescales a vector so its norm does not exceed the clipping
//! constant `C`: `f(r) = r * min(1, C / ||r||_p)`. The L2 variant is the
//! original mechanism's transform; the L1 variant is one of the two
//! corrected mechanisms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which norm a [`ClipSpec`] bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "L1" => Ok(NormKind::L1),
            "l2" | "L2" => Ok(NormKind::L2),
            other => Err(Error::InvalidParameter(format!(
                "unknown norm '{other}' (expected l1 or l2)"
            ))),
        }
    }
}

/// An n-dimensional latent coordinate vector.
///
/// Invariants (enforced at construction): dimension >= 1 and every
/// component finite. Serializes as a plain JSON array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LatentVector {
    components: Vec<f64>,
}

impl LatentVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (index, &value) in components.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteComponent { index, value });
            }
        }
        Ok(Self { components })
    }

    /// Skips validation; callers must guarantee the invariants hold.
    pub(crate) fn from_components_unchecked(components: Vec<f64>) -> Self {
        debug_assert!(!components.is_empty());
        debug_assert!(components.iter().all(|c| c.is_finite()));
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }
}

impl TryFrom<Vec<f64>> for LatentVector {
    type Error = Error;

    fn try_from(components: Vec<f64>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<LatentVector> for Vec<f64> {
    fn from(v: LatentVector) -> Vec<f64> {
        v.components
    }
}

/// Clipping norm and constant defining one clipping transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClipSpec {
    norm_kind: NormKind,
    clip_constant: f64,
}

impl ClipSpec {
    pub fn new(norm_kind: NormKind, clip_constant: f64) -> Result<Self> {
        if !(clip_constant > 0.0 && clip_constant.is_finite()) {
            return Err(Error::NonPositive {
                name: "clip_constant",
                value: clip_constant,
            });
        }
        Ok(Self {
            norm_kind,
            clip_constant,
        })
    }

    pub fn l2(clip_constant: f64) -> Result<Self> {
        Self::new(NormKind::L2, clip_constant)
    }

    pub fn l1(clip_constant: f64) -> Result<Self> {
        Self::new(NormKind::L1, clip_constant)
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn clip_constant(&self) -> f64 {
        self.clip_constant
    }

    pub fn norm_of(&self, v: &LatentVector) -> f64 {
        match self.norm_kind {
            NormKind::L1 => l1_norm(v),
            NormKind::L2 => l2_norm(v),
        }
    }
}

/// Sum of absolute component values.
pub fn l1_norm(v: &LatentVector) -> f64 {
    v.components.iter().map(|c| c.abs()).sum()
}

/// Euclidean norm.
pub fn l2_norm(v: &LatentVector) -> f64 {
    v.components.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// L1 distance between two equal-length coordinate slices.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn slice_norm(components: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => components.iter().map(|c| c.abs()).sum(),
        NormKind::L2 => components.iter().map(|c| c * c).sum::<f64>().sqrt(),
    }
}

/// Rescale `v` so its norm does not exceed the clipping constant:
/// `v * min(1, C / ||v||_p)`.
///
/// Vectors already inside the ball (including the zero vector, where the
/// scale factor is taken as 1) are returned bit-identical. The direction
/// of `v` is always preserved.
pub fn clip(v: &LatentVector, spec: &ClipSpec) -> LatentVector {
    let c = spec.clip_constant;
    let norm = spec.norm_of(v);
    if norm <= c {
        return v.clone();
    }
    let scale = c / norm;
    let mut components: Vec<f64> = v.components.iter().map(|x| x * scale).collect();
    // Rescaling can land a hair above C in floating point; force the
    // recomputed norm under C so clipping is exactly idempotent.
    loop {
        let m = slice_norm(&components, spec.norm_kind);
        if m <= c {
            break;
        }
        let shrink = (c / m) * (1.0 - f64::EPSILON);
        for x in &mut components {
            *x *= shrink;
        }
    }
    LatentVector::from_components_unchecked(components)
}
