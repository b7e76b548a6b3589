//! Sparse PageRank solvers over the unit simplex.
//!
//! The PageRank vector of a row-stochastic `P` is the point of the simplex
//! where `Ax = 0` for `A = Pᵀ − I`. When every row and every column of `P`
//! has at most `s ≪ √n` nonzeros, the three methods here do `O(s² log n)`
//! (NL1, FW) or `O(s log n)` (GK) work per iteration, independent of `n`:
//!
//! - [`solver::nl1`]: gradient steps in the 1-norm on the hyperplane
//!   `Σx = 1`, with a quadratic penalty on negative components;
//! - [`solver::fw`]: Frank–Wolfe on the simplex with a lazily applied scale
//!   factor;
//! - [`solver::gk`]: randomized exponential-weights self-play on the
//!   saddle-point form `min_x max_ω ⟨ω, [A; −A]x⟩`.
//!
//! ```
//! use pagerank_sparse::problem::gen_random_ds;
//! use pagerank_sparse::solver::{fw, FwConfig};
//! use pagerank_sparse::sparse::pagerank_operator;
//!
//! let p = gen_random_ds(1000, 3, 7).unwrap();
//! let a = pagerank_operator(&p).unwrap();
//! let out = fw::solve(&a, &FwConfig { epsilon: 1e-3, ..FwConfig::default() }).unwrap();
//! assert!(out.report.success);
//! assert!(out.report.final_residual_two <= 0.5e-6);
//! ```

pub mod error;
pub mod problem;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod trees;

pub use error::{Error, Result};
pub use report::{BenchRow, Method, SolveOutcome, SolveReport, TraceRow};
pub use sparse::DualSparseMatrix;
