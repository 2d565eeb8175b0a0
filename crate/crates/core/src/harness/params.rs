use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transformer dimensions used to translate pruned heads into parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    /// Hidden size `d`.
    pub hidden: u64,
    /// Heads per layer `n`.
    pub heads: u64,
    pub total_params: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamReduction {
    pub per_head: u64,
    pub total: u64,
    pub removed: u64,
    pub remaining: u64,
}

impl ModelDims {
    /// Parameters owned by one head: its `d x d/n` slices of the query, key,
    /// value and output projections plus its query, key and value bias
    /// slices.
    pub fn params_per_head(&self) -> Result<u64> {
        if self.heads == 0 || self.hidden == 0 || !self.hidden.is_multiple_of(self.heads) {
            return Err(Error::Config(vec![format!(
                "model_dims: hidden size {} is not divisible by {} heads",
                self.hidden, self.heads
            )]));
        }
        let head_dim = self.hidden / self.heads;
        Ok(4 * self.hidden * head_dim + 3 * head_dim)
    }
}

pub fn param_reduction(dims: &ModelDims, pruned_count: usize) -> Result<ParamReduction> {
    let per_head = dims.params_per_head()?;
    let removed = per_head * pruned_count as u64;
    let remaining = dims.total_params.checked_sub(removed).ok_or_else(|| {
        Error::Config(vec![format!(
            "model_dims: pruning {pruned_count} heads removes {removed} parameters, more than the total {}",
            dims.total_params
        )])
    })?;
    Ok(ParamReduction {
        per_head,
        total: dims.total_params,
        removed,
        remaining,
    })
}
