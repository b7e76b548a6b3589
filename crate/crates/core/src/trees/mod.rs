//! Incrementally updatable binary trees.
//!
//! [`ArgExtremeTree`] keeps the minimal or maximal gradient component with
//! its index available in `O(1)` while single components change;
//! [`WeightTree`] draws from an unnormalized discrete distribution whose
//! weights change a few at a time.

mod extreme;
mod weight;

pub use extreme::{ArgExtremeTree, Direction, Entry};
pub use weight::WeightTree;

use serde::{Deserialize, Serialize};

/// How far updates climb in an [`ArgExtremeTree`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeUpdateMetrics {
    pub updates: u64,
    pub total_levels_climbed: u64,
    pub full_height: u32,
}

impl TreeUpdateMetrics {
    pub fn new(full_height: u32) -> Self {
        Self {
            updates: 0,
            total_levels_climbed: 0,
            full_height,
        }
    }

    #[inline]
    fn record(&mut self, climbed: u64) {
        self.updates += 1;
        self.total_levels_climbed += climbed;
    }

    pub fn average_climbed(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.total_levels_climbed as f64 / self.updates as f64
        }
    }

    /// Sum of two metric records over trees of the same height.
    pub fn merge(&self, other: &TreeUpdateMetrics) -> TreeUpdateMetrics {
        TreeUpdateMetrics {
            updates: self.updates + other.updates,
            total_levels_climbed: self.total_levels_climbed + other.total_levels_climbed,
            full_height: self.full_height.max(other.full_height),
        }
    }
}
