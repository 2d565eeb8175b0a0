//! Replay of recorded evaluations.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Oracle, OracleInfo};
use crate::error::{Error, Result};
use crate::heads::{Geometry, PruneMask};

/// On-disk table format:
/// `{"baseline":F,"geometry":[L,N],"entries":[{"mask":[[i,j],...],"accuracy":F},...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub baseline: f64,
    pub geometry: [usize; 2],
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub mask: PruneMask,
    pub accuracy: f64,
}

impl TableFile {
    /// Entries are stored sorted by mask so the file is deterministic.
    pub fn new(info: OracleInfo, mut entries: Vec<TableEntry>) -> Self {
        entries.sort_by(|a, b| a.mask.cmp(&b.mask));
        TableFile {
            baseline: info.baseline_accuracy,
            geometry: [info.geometry.layers(), info.geometry.heads_per_layer()],
            entries,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct TableOracle {
    info: OracleInfo,
    entries: HashMap<PruneMask, f64>,
}

impl TableOracle {
    pub fn new(file: TableFile) -> Result<Self> {
        let geometry = Geometry::new(file.geometry[0], file.geometry[1])?;
        let info = OracleInfo::new(geometry, file.baseline)?;
        let mut entries = HashMap::with_capacity(file.entries.len());
        for entry in file.entries {
            entry.mask.check_bounds(geometry)?;
            if !entry.accuracy.is_finite() {
                return Err(Error::InvalidOracle(format!(
                    "non-finite accuracy for mask {}",
                    entry.mask
                )));
            }
            if entry.mask.is_empty() && entry.accuracy != info.baseline_accuracy {
                return Err(Error::InvalidOracle(format!(
                    "empty-mask entry {} disagrees with baseline {}",
                    entry.accuracy, info.baseline_accuracy
                )));
            }
            if let Some(prev) = entries.insert(entry.mask.clone(), entry.accuracy) {
                if prev != entry.accuracy {
                    return Err(Error::InvalidOracle(format!(
                        "conflicting entries for mask {}",
                        entry.mask
                    )));
                }
            }
        }
        Ok(TableOracle { info, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(TableFile::load(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Oracle for TableOracle {
    fn info(&self) -> OracleInfo {
        self.info
    }

    fn accuracy(&self, mask: &PruneMask) -> Result<f64> {
        if mask.is_empty() {
            return Ok(self.info.baseline_accuracy);
        }
        self.entries
            .get(mask)
            .copied()
            .ok_or_else(|| Error::TableMiss { mask: mask.to_string() })
    }
}
