use serde::{Deserialize, Serialize};

use super::TreeUpdateMetrics;
use crate::error::{Error, Result};

/// Which extremum a tree tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

/// An `(index, value)` pair as stored in every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub index: usize,
    pub value: f64,
}

impl Entry {
    #[inline]
    fn same(&self, other: &Entry) -> bool {
        self.index == other.index && self.value.to_bits() == other.value.to_bits()
    }
}

const PAD_INDEX: usize = usize::MAX;

/// Tournament tree answering argmin or argmax over `n` values in `O(1)`.
///
/// Leaves are padded to a power of two with entries that lose every
/// comparison against a real leaf. Nodes live in one flat heap-ordered array
/// (root at 1, children of `v` at `2v` and `2v + 1`), each holding the
/// winning pair of its subtree, so an update never has to look at the
/// original value vector. Ties go to the lower index.
#[derive(Debug, Clone)]
pub struct ArgExtremeTree {
    direction: Direction,
    len: usize,
    leaves: usize,
    nodes: Vec<Entry>,
    pruning: bool,
    metrics: TreeUpdateMetrics,
}

impl ArgExtremeTree {
    pub fn new(values: &[f64], direction: Direction) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tree value {v}")));
        }
        let len = values.len();
        let leaves = len.next_power_of_two();
        let pad = Entry {
            index: PAD_INDEX,
            value: match direction {
                Direction::Min => f64::INFINITY,
                Direction::Max => f64::NEG_INFINITY,
            },
        };
        let mut nodes = vec![pad; 2 * leaves];
        for (i, &value) in values.iter().enumerate() {
            nodes[leaves + i] = Entry { index: i, value };
        }
        let mut tree = Self {
            direction,
            len,
            leaves,
            nodes,
            pruning: true,
            metrics: TreeUpdateMetrics::new(leaves.trailing_zeros()),
        };
        for v in (1..leaves).rev() {
            tree.nodes[v] = tree.winner(v);
        }
        Ok(tree)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Number of real leaves.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of levels between a leaf and the root.
    pub fn height(&self) -> u32 {
        self.leaves.trailing_zeros()
    }

    /// The extremal pair.
    #[inline]
    pub fn top(&self) -> Entry {
        self.nodes[1]
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i].value
    }

    /// Enables or disables early termination of the upward pass.
    pub fn set_pruning(&mut self, enabled: bool) {
        self.pruning = enabled;
    }

    pub fn metrics(&self) -> &TreeUpdateMetrics {
        &self.metrics
    }

    pub fn reset_metrics(&mut self) {
        self.metrics = TreeUpdateMetrics::new(self.height());
    }

    #[inline]
    fn beats(&self, a: &Entry, b: &Entry) -> bool {
        match self.direction {
            Direction::Min => a.value < b.value || (a.value == b.value && a.index < b.index),
            Direction::Max => a.value > b.value || (a.value == b.value && a.index < b.index),
        }
    }

    #[inline]
    fn winner(&self, v: usize) -> Entry {
        let (l, r) = (&self.nodes[2 * v], &self.nodes[2 * v + 1]);
        if self.beats(r, l) {
            *r
        } else {
            *l
        }
    }

    /// Sets leaf `i` to `value` and repairs its ancestors.
    ///
    /// The climb stops at the first ancestor whose pair comes out unchanged,
    /// since nothing above it can change either.
    pub fn update(&mut self, i: usize, value: f64) -> Result<()> {
        if i >= self.len {
            return Err(Error::LeafOutOfRange {
                index: i,
                len: self.len,
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("tree value {value} at leaf {i}")));
        }
        let mut v = self.leaves + i;
        self.nodes[v].value = value;
        let mut climbed = 0u64;
        while v > 1 {
            v /= 2;
            climbed += 1;
            let w = self.winner(v);
            if self.pruning && w.same(&self.nodes[v]) {
                break;
            }
            self.nodes[v] = w;
        }
        self.metrics.record(climbed);
        Ok(())
    }
}
