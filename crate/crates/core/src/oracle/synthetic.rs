//! Closed-form synthetic oracles used as stand-ins for a fine-tuned model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Oracle, OracleInfo};
use crate::error::{Error, Result};
use crate::heads::{Geometry, PruneMask};

/// Accuracy falls by a fixed per-head amount, plus optional per-mask noise:
/// `baseline - sum(w_h for h in mask) - noise(mask)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveSpec {
    pub baseline: f64,
    /// `layers x heads` matrix of per-head drops in percentage points.
    /// Negative entries model heads whose removal helps.
    pub weights: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl AdditiveSpec {
    /// Noise-free spec.
    pub fn exact(baseline: f64, weights: Vec<Vec<f64>>) -> Self {
        AdditiveSpec {
            baseline,
            weights,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Drops compound: `baseline - sum(w_h) - growth * |S| * (|S| - 1) / 2`, so
/// the marginal cost of a head grows by `growth` with every head already
/// pruned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupermodularSpec {
    pub baseline: f64,
    pub weights: Vec<Vec<f64>>,
    pub growth: f64,
}

fn weight_matrix(weights: &[Vec<f64>]) -> Result<(Geometry, Vec<f64>)> {
    let layers = weights.len();
    let heads = weights.first().map_or(0, Vec::len);
    let geometry = Geometry::new(layers, heads)?;
    if let Some(row) = weights.iter().position(|r| r.len() != heads) {
        return Err(Error::InvalidOracle(format!(
            "weight row {row} has {} entries, expected {heads}",
            weights[row].len()
        )));
    }
    let flat: Vec<f64> = weights.iter().flatten().copied().collect();
    if flat.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidOracle("weights must be finite".into()));
    }
    Ok((geometry, flat))
}

fn mask_drop(geometry: Geometry, weights: &[f64], mask: &PruneMask) -> f64 {
    mask.iter().map(|&h| weights[geometry.offset(h)]).sum()
}

#[derive(Debug, Clone)]
pub struct AdditiveOracle {
    info: OracleInfo,
    weights: Vec<f64>,
    noise_sigma: f64,
    seed: u64,
}

impl AdditiveOracle {
    pub fn new(spec: AdditiveSpec) -> Result<Self> {
        let (geometry, weights) = weight_matrix(&spec.weights)?;
        if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
            return Err(Error::InvalidOracle(format!(
                "noise_sigma must be non-negative, got {}",
                spec.noise_sigma
            )));
        }
        Ok(AdditiveOracle {
            info: OracleInfo::new(geometry, spec.baseline)?,
            weights,
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        })
    }

    /// Deterministic noise keyed by seed and mask contents, never by call
    /// order. Zero for the empty mask.
    fn noise(&self, mask: &PruneMask) -> f64 {
        if self.noise_sigma == 0.0 || mask.is_empty() {
            return 0.0;
        }
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        for h in mask.iter() {
            hasher.update((h.layer as u64).to_le_bytes());
            hasher.update((h.head as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        let z: f64 = ChaCha8Rng::from_seed(key).sample(StandardNormal);
        self.noise_sigma * z
    }
}

impl Oracle for AdditiveOracle {
    fn info(&self) -> OracleInfo {
        self.info
    }

    fn accuracy(&self, mask: &PruneMask) -> Result<f64> {
        let drop = mask_drop(self.info.geometry, &self.weights, mask);
        Ok(self.info.baseline_accuracy - drop - self.noise(mask))
    }
}

#[derive(Debug, Clone)]
pub struct SupermodularOracle {
    info: OracleInfo,
    weights: Vec<f64>,
    growth: f64,
}

impl SupermodularOracle {
    pub fn new(spec: SupermodularSpec) -> Result<Self> {
        let (geometry, weights) = weight_matrix(&spec.weights)?;
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidOracle("supermodular weights must be non-negative".into()));
        }
        if !(spec.growth.is_finite() && spec.growth >= 0.0) {
            return Err(Error::InvalidOracle(format!(
                "growth must be non-negative, got {}",
                spec.growth
            )));
        }
        Ok(SupermodularOracle {
            info: OracleInfo::new(geometry, spec.baseline)?,
            weights,
            growth: spec.growth,
        })
    }
}

impl Oracle for SupermodularOracle {
    fn info(&self) -> OracleInfo {
        self.info
    }

    fn accuracy(&self, mask: &PruneMask) -> Result<f64> {
        let k = mask.len() as f64;
        let drop = mask_drop(self.info.geometry, &self.weights, mask);
        Ok(self.info.baseline_accuracy - drop - self.growth * k * (k - 1.0) / 2.0)
    }
}

/// Per-head drops shaped like a fine-tuned encoder: exactly `nonpositive`
/// heads are harmless or slightly harmful to keep (weights in `(-0.05, 0]`),
/// the rest are strictly positive with a log-normal tail, so a handful of
/// heads dominate the damage.
pub fn heavy_tailed_weights(geometry: Geometry, nonpositive: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let total = geometry.total_heads();
    if nonpositive > total {
        return Err(Error::InvalidOracle(format!(
            "{nonpositive} non-positive heads requested but geometry {geometry} has {total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let tail = LogNormal::new((0.1f64).ln(), 1.2).expect("valid log-normal parameters");
    let mut flat = vec![0.0; total];
    for (rank, &slot) in order.iter().enumerate() {
        flat[slot] = if rank < nonpositive {
            -rng.random_range(0.0..0.05)
        } else {
            tail.sample(&mut rng)
        };
    }
    Ok(flat.chunks(geometry.heads_per_layer()).map(<[f64]>::to_vec).collect())
}
