//! The three PageRank solvers.
//!
//! All of them work on `A = Pᵀ − I` stored in both orientations and keep
//! every derived quantity (`b = Ax`, the gradient image, the objective)
//! up to date by touching only the entries that a sparse iterate change
//! reaches.

pub mod fw;
pub mod gk;
pub mod nl1;

pub use fw::{fw_iteration_bound, FwConfig, FwState};
pub use gk::{gk_iterations, GkConfig, GkState, UpdateOrder};
pub use nl1::{Nl1Config, Nl1State};

use crate::error::{Error, Result};
use crate::sparse::DualSparseMatrix;

/// Agreement required between tracked and freshly recomputed quantities.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Default period (in iterations) of the debug-mode consistency check.
pub const DEFAULT_CHECK_STRIDE: u64 = 1024;

/// Default ratio by which the tracked objective must fall before it is
/// re-summed from the tracked residual vector.
pub const DEFAULT_REFRESH_RATIO: f64 = 0.25;

/// Tracked state compared against a from-scratch recomputation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub f_tracked: f64,
    pub f_fresh: f64,
    /// `‖b − Ax‖_∞ / max(1, ‖Ax‖_∞)`.
    pub b_error: f64,
    /// `‖g − AᵀAx‖_∞ / max(1, ‖AᵀAx‖_∞)`.
    pub g_error: f64,
}

impl Consistency {
    pub fn f_relative_error(&self) -> f64 {
        let scale = self.f_tracked.abs().max(self.f_fresh.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.f_tracked - self.f_fresh).abs() / scale
        }
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        if self.f_relative_error() > tol {
            return Err(Error::Drift {
                quantity: "objective",
                tracked: self.f_tracked,
                fresh: self.f_fresh,
            });
        }
        if self.b_error > tol {
            return Err(Error::Drift {
                quantity: "residual vector b",
                tracked: self.b_error,
                fresh: 0.0,
            });
        }
        if self.g_error > tol {
            return Err(Error::Drift {
                quantity: "gradient",
                tracked: self.g_error,
                fresh: 0.0,
            });
        }
        Ok(())
    }
}

pub(crate) fn scaled_inf_distance(tracked: &[f64], fresh: &[f64]) -> f64 {
    let scale = fresh.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    tracked
        .iter()
        .zip(fresh)
        .fold(0.0f64, |m, (t, f)| m.max((t - f).abs()))
        / scale
}

pub(crate) fn half_norm_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

pub(crate) fn require_square(a: &DualSparseMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if a.n_rows() == 0 {
        return Err(Error::Empty);
    }
    Ok(a.n_rows())
}

/// Rows of a residual vector that have ever been written, so that `½‖b‖²`
/// can be re-summed in time proportional to the support instead of `n`.
#[derive(Debug, Clone)]
pub(crate) struct RowSupport {
    seen: Vec<bool>,
    rows: Vec<usize>,
}

impl RowSupport {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            seen: vec![false; n],
            rows: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn insert(&mut self, r: usize) {
        if !self.seen[r] {
            self.seen[r] = true;
            self.rows.push(r);
        }
    }

    pub(crate) fn half_norm_sq(&self, b: &[f64]) -> f64 {
        0.5 * self.rows.iter().map(|&r| b[r] * b[r]).sum::<f64>()
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Deduplicated list of indices touched during one iteration.
#[derive(Debug, Clone)]
pub(crate) struct TouchSet {
    mark: Vec<u32>,
    epoch: u32,
    list: Vec<usize>,
}

impl TouchSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            mark: vec![0; n],
            epoch: 1,
            list: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize) {
        if self.mark[i] != self.epoch {
            self.mark[i] = self.epoch;
            self.list.push(i);
        }
    }

    /// Hands out the touched indices and starts a new round.
    pub(crate) fn take(&mut self) -> Vec<usize> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.fill(0);
            self.epoch = 1;
        }
        std::mem::take(&mut self.list)
    }

    /// Returns a buffer obtained from [`TouchSet::take`] for reuse.
    pub(crate) fn recycle(&mut self, mut buf: Vec<usize>) {
        buf.clear();
        if buf.capacity() > self.list.capacity() {
            self.list = buf;
        }
    }
}
