//! Head identifiers, model geometry and canonical prune masks.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Shape of the attention stack: `layers` encoder layers with
/// `heads_per_layer` heads each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr")]
pub struct Geometry {
    layers: usize,
    heads_per_layer: usize,
}

#[derive(Deserialize)]
struct GeometryRepr {
    layers: usize,
    heads_per_layer: usize,
}

impl TryFrom<GeometryRepr> for Geometry {
    type Error = Error;

    fn try_from(raw: GeometryRepr) -> Result<Self> {
        Geometry::new(raw.layers, raw.heads_per_layer)
    }
}

impl Geometry {
    pub fn new(layers: usize, heads_per_layer: usize) -> Result<Self> {
        if layers == 0 || heads_per_layer == 0 {
            return Err(Error::InvalidGeometry {
                layers,
                heads: heads_per_layer,
            });
        }
        Ok(Geometry {
            layers,
            heads_per_layer,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads_per_layer
    }

    pub fn total_heads(&self) -> usize {
        self.layers * self.heads_per_layer
    }

    pub fn contains(&self, index: HeadIndex) -> bool {
        index.layer < self.layers && index.head < self.heads_per_layer
    }

    pub fn check(&self, index: HeadIndex) -> Result<()> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { index, geometry: *self })
        }
    }

    /// Row-major position of `index`, used to address per-head matrices.
    pub fn offset(&self, index: HeadIndex) -> usize {
        index.layer * self.heads_per_layer + index.head
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.layers, self.heads_per_layer)
    }
}

/// One attention head, zero-based. Ordered lexicographically by
/// `(layer, head)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeadIndex {
    pub layer: usize,
    pub head: usize,
}

impl HeadIndex {
    pub const fn new(layer: usize, head: usize) -> Self {
        HeadIndex { layer, head }
    }
}

impl fmt::Display for HeadIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.layer, self.head)
    }
}

impl From<(usize, usize)> for HeadIndex {
    fn from((layer, head): (usize, usize)) -> Self {
        HeadIndex { layer, head }
    }
}

// Heads travel as `[layer, head]` pairs.
impl Serialize for HeadIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.layer, self.head].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HeadIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [layer, head] = <[usize; 2]>::deserialize(deserializer)?;
        Ok(HeadIndex { layer, head })
    }
}

/// A duplicate-free set of heads kept sorted by `(layer, head)`.
///
/// The canonical order makes masks usable as cache keys and keeps every
/// serialized artifact deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct PruneMask(Vec<HeadIndex>);

impl PruneMask {
    pub fn empty() -> Self {
        PruneMask(Vec::new())
    }

    /// Builds a canonical mask, rejecting heads outside `geometry`.
    pub fn from_heads<I>(heads: I, geometry: Geometry) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<HeadIndex>,
    {
        let mut entries = Vec::new();
        for h in heads {
            let h = h.into();
            geometry.check(h)?;
            entries.push(h);
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(PruneMask(entries))
    }

    pub fn heads(&self) -> &[HeadIndex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, head: HeadIndex) -> bool {
        self.0.binary_search(&head).is_ok()
    }

    pub fn insert(&mut self, head: HeadIndex) -> bool {
        match self.0.binary_search(&head) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, head);
                true
            }
        }
    }

    /// Copy of this mask with `head` added.
    pub fn with(&self, head: HeadIndex) -> PruneMask {
        let mut next = self.clone();
        next.insert(head);
        next
    }

    pub fn with_all<'a>(&self, heads: impl IntoIterator<Item = &'a HeadIndex>) -> PruneMask {
        let mut next = self.clone();
        for &h in heads {
            next.insert(h);
        }
        next
    }

    pub fn check_bounds(&self, geometry: Geometry) -> Result<()> {
        self.0.iter().try_for_each(|&h| geometry.check(h))
    }

    pub fn iter(&self) -> impl Iterator<Item = &HeadIndex> {
        self.0.iter()
    }
}

impl<'de> Deserialize<'de> for PruneMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mut entries = Vec::<HeadIndex>::deserialize(deserializer)?;
        entries.sort_unstable();
        entries.dedup();
        Ok(PruneMask(entries))
    }
}

impl fmt::Display for PruneMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        f.write_str("}")
    }
}

/// Sorts and deduplicates `mask`, checking every head against `geometry`.
pub fn canonicalize(mask: &PruneMask, geometry: Geometry) -> Result<PruneMask> {
    PruneMask::from_heads(mask.0.iter().copied(), geometry)
}

/// Every head of `geometry` in canonical order.
pub fn all_heads(geometry: Geometry) -> Vec<HeadIndex> {
    (0..geometry.layers)
        .flat_map(|layer| (0..geometry.heads_per_layer).map(move |head| HeadIndex { layer, head }))
        .collect()
}
