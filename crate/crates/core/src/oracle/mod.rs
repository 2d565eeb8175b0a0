//! Accuracy oracles.
//!
//! An [`Oracle`] maps a prune mask to the model accuracy (percent) measured
//! with those heads disabled. Search code never talks to an oracle directly:
//! it goes through an [`Evaluator`], which memoizes results per canonical
//! mask and counts how many evaluations were requested and how many actually
//! reached the oracle.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::{Geometry, PruneMask};

mod external;
mod synthetic;
mod table;

pub use external::{ExternalOracle, WireClient};
pub use synthetic::{heavy_tailed_weights, AdditiveOracle, AdditiveSpec, SupermodularOracle, SupermodularSpec};
pub use table::{TableEntry, TableFile, TableOracle};

/// What an oracle reports about the model it evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub geometry: Geometry,
    /// Accuracy of the unpruned model, in percent.
    pub baseline_accuracy: f64,
}

impl OracleInfo {
    pub fn new(geometry: Geometry, baseline_accuracy: f64) -> Result<Self> {
        check_percent("baseline accuracy", baseline_accuracy)?;
        Ok(OracleInfo {
            geometry,
            baseline_accuracy,
        })
    }
}

pub(crate) fn check_percent(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=100.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidOracle(format!(
            "{what} must be a percentage in [0, 100], got {value}"
        )))
    }
}

/// A black-box accuracy function over prune masks.
///
/// Implementations must return `baseline_accuracy` for the empty mask and
/// must be deterministic per mask. Callers guarantee the mask is canonical
/// and inside the reported geometry.
pub trait Oracle: Send + Sync {
    fn info(&self) -> OracleInfo;

    fn accuracy(&self, mask: &PruneMask) -> Result<f64>;
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn info(&self) -> OracleInfo {
        (**self).info()
    }

    fn accuracy(&self, mask: &PruneMask) -> Result<f64> {
        (**self).accuracy(mask)
    }
}

/// Evaluation counters. `requested` counts every call, `computed` counts
/// distinct masks that reached the oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    pub requested: u64,
    pub computed: u64,
}

impl EvalCounter {
    pub fn since(&self, earlier: EvalCounter) -> EvalCounter {
        EvalCounter {
            requested: self.requested - earlier.requested,
            computed: self.computed - earlier.computed,
        }
    }
}

/// Memoizing front end for an [`Oracle`]. Safe to share between threads.
pub struct Evaluator {
    oracle: Box<dyn Oracle>,
    info: OracleInfo,
    cache: Mutex<HashMap<PruneMask, f64>>,
    requested: AtomicU64,
    computed: AtomicU64,
}

impl Evaluator {
    pub fn new(oracle: impl Oracle + 'static) -> Self {
        Self::from_boxed(Box::new(oracle))
    }

    pub fn from_boxed(oracle: Box<dyn Oracle>) -> Self {
        let info = oracle.info();
        Evaluator {
            oracle,
            info,
            cache: Mutex::new(HashMap::new()),
            requested: AtomicU64::new(0),
            computed: AtomicU64::new(0),
        }
    }

    pub fn info(&self) -> OracleInfo {
        self.info
    }

    pub fn geometry(&self) -> Geometry {
        self.info.geometry
    }

    pub fn baseline(&self) -> f64 {
        self.info.baseline_accuracy
    }

    /// Accuracy with `mask` applied. Cached per mask.
    pub fn evaluate(&self, mask: &PruneMask) -> Result<f64> {
        mask.check_bounds(self.info.geometry)?;
        self.requested.fetch_add(1, Ordering::Relaxed);
        if let Some(&hit) = self.lock_cache().get(mask) {
            return Ok(hit);
        }
        let value = self.oracle.accuracy(mask)?;
        // Two workers may race on the same key; values are identical, so only
        // the first insertion counts.
        if self.lock_cache().insert(mask.clone(), value).is_none() {
            self.computed.fetch_add(1, Ordering::Relaxed);
        }
        Ok(value)
    }

    pub fn counter(&self) -> EvalCounter {
        EvalCounter {
            requested: self.requested.load(Ordering::Relaxed),
            computed: self.computed.load(Ordering::Relaxed),
        }
    }

    /// Every computed evaluation, sorted by mask.
    pub fn recorded(&self) -> Vec<(PruneMask, f64)> {
        let mut entries: Vec<_> = self.lock_cache().iter().map(|(m, &a)| (m.clone(), a)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries
    }

    /// Snapshot of the cache as a replayable table-oracle file.
    pub fn to_table(&self) -> TableFile {
        TableFile::new(
            self.info,
            self.recorded()
                .into_iter()
                .map(|(mask, accuracy)| TableEntry { mask, accuracy })
                .collect(),
        )
    }

    fn lock_cache(&self) -> std::sync::MutexGuard<'_, HashMap<PruneMask, f64>> {
        // A poisoned cache still holds only fully inserted entries.
        self.cache.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl std::fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evaluator")
            .field("info", &self.info)
            .field("counter", &self.counter())
            .finish()
    }
}
