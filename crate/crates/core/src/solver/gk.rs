//! Randomized exponential-weights self-play for
//! `min_{x ∈ S_n} max_{ω ∈ S_2n} ⟨ω, Ãx⟩`, `Ã = [A; −A]`.
//!
//! The column player (B, minimizer, `n` strategies) and the row player
//! (A, maximizer, `2n` strategies) each hold unnormalized weights in a
//! [`WeightTree`]. Every round both draw one pure strategy from their
//! current weights, then B multiplies the weights of the `≤ s+1` columns in
//! the opponent's row by `exp(−η_B·ã)` and A multiplies the `≤ 2(s+1)` rows
//! hit by the opponent's column by `exp(+η_A·ã)`. Nothing else changes, so a
//! round costs `O(s log n)`. The answer is the empirical frequency `x̄` of
//! B's plays.
//!
//! Weights are never normalized. When a tree total passes
//! `rescale_threshold` the whole tree is multiplied by `1/total`; this does
//! not change the distribution but is counted, since weight blow-up is the
//! main failure signature of this method in floating point. Leaves that
//! shrink below the smallest subnormal after a rescale become zero and are
//! never drawn again.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::require_square;
use crate::error::{Error, Result};
use crate::report::{
    GkDiagnostics, GkTraceRow, LoopClock, Method, ProblemSummary, SolveOutcome, SolveReport,
    TraceRow, TraceSchedule,
};
use crate::sparse::{residual_inf, residual_two, DualSparseMatrix};
use crate::trees::{TreeUpdateMetrics, WeightTree};

pub const RNG_NAME: &str = "ChaCha8";

/// `⌈16 (ln(2n) + 8 ln(2/σ)) / ε²⌉` rounds give `‖Ax̄‖_∞ ≤ ε` with
/// probability at least `1 − σ`.
pub fn gk_iterations(n: usize, epsilon: f64, sigma: f64) -> u64 {
    let n = n as f64;
    (16.0 * ((2.0 * n).ln() + 8.0 * (2.0 / sigma).ln()) / (epsilon * epsilon)).ceil() as u64
}

/// `√(2/N)(√ln n + 2√(2 ln σ⁻¹))`: high-probability bound on the column
/// player's regret after `N` rounds.
pub fn regret_bound(n: usize, horizon: u64, sigma: f64) -> f64 {
    (2.0 / horizon as f64).sqrt()
        * ((n as f64).ln().sqrt() + 2.0 * (2.0 * (1.0 / sigma).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateOrder {
    /// Both players draw from their current weights, then both update.
    Simultaneous,
    /// B draws, A updates, A draws from the updated weights, B updates.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkConfig {
    pub epsilon: f64,
    /// Failure probability.
    pub sigma: f64,
    pub seed: u64,
    pub rescale_threshold: f64,
    /// Horizon used for the step sizes; defaults to [`gk_iterations`].
    pub override_n: Option<u64>,
    /// Rounds to play; defaults to the horizon.
    pub rounds: Option<u64>,
    pub update_order: UpdateOrder,
    /// Samples of `‖Ax̄‖_∞` and the weight statistics per doubling of the
    /// round count; each sample costs `O(nnz)` and is excluded from timing.
    pub trace_per_doubling: u64,
}

impl Default for GkConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            sigma: 0.1,
            seed: 0,
            rescale_threshold: 1e150,
            override_n: None,
            rounds: None,
            update_order: UpdateOrder::Simultaneous,
            trace_per_doubling: 8,
        }
    }
}

impl GkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {}",
                self.epsilon
            )));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma = {}", self.sigma)));
        }
        if !(self.rescale_threshold > 1.0 && self.rescale_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rescale threshold = {}",
                self.rescale_threshold
            )));
        }
        if self.override_n == Some(0) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn horizon(&self, n: usize) -> u64 {
        self.override_n
            .unwrap_or_else(|| gk_iterations(n, self.epsilon, self.sigma))
    }
}

#[derive(Debug, Clone)]
pub struct GkState<'a> {
    a: &'a DualSparseMatrix,
    n: usize,
    w_b: WeightTree,
    w_a: WeightTree,
    counts_x: Vec<u64>,
    counts_w: Vec<u64>,
    eta_b: f64,
    eta_a: f64,
    horizon: u64,
    k: u64,
    rng: ChaCha8Rng,
    order: UpdateOrder,
    rescale_threshold: f64,
    rescales: u64,
    peak_total: f64,
    /// `Σ_k ã_{i(k) j(k)}`.
    loss_sum: f64,
    leaf_updates: u64,
}

impl<'a> GkState<'a> {
    pub fn new(a: &'a DualSparseMatrix, cfg: &GkConfig) -> Result<Self> {
        cfg.validate()?;
        let n = require_square(a)?;
        if let Some(v) = a.by_rows().values().iter().find(|v| v.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "payoff entries must lie in [-1, 1], found {v}"
            )));
        }
        let horizon = cfg.horizon(n);
        Ok(Self {
            a,
            n,
            w_b: WeightTree::uniform(n, 1.0)?,
            w_a: WeightTree::uniform(2 * n, 1.0)?,
            counts_x: vec![0; n],
            counts_w: vec![0; 2 * n],
            eta_b: (2.0 * (n as f64).ln() / horizon as f64).sqrt(),
            eta_a: (2.0 * (2.0 * n as f64).ln() / horizon as f64).sqrt(),
            horizon,
            k: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            order: cfg.update_order,
            rescale_threshold: cfg.rescale_threshold,
            rescales: 0,
            peak_total: 2.0 * n as f64,
            loss_sum: 0.0,
            leaf_updates: 0,
        })
    }

    pub fn rounds(&self) -> u64 {
        self.k
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn column_weights(&self) -> &WeightTree {
        &self.w_b
    }

    pub fn row_weights(&self) -> &WeightTree {
        &self.w_a
    }

    pub fn counts_x(&self) -> &[u64] {
        &self.counts_x
    }

    pub fn counts_w(&self) -> &[u64] {
        &self.counts_w
    }

    pub fn rescales(&self) -> u64 {
        self.rescales
    }

    /// Entry `ã_{ij}` of `[A; −A]`.
    pub fn payoff(&self, i: usize, j: usize) -> f64 {
        if i < self.n {
            self.a.get(i, j)
        } else {
            -self.a.get(i - self.n, j)
        }
    }

    /// Plays one round and returns the pure strategies `(i(k), j(k))`.
    pub fn step(&mut self) -> Result<(usize, usize)> {
        let (i, j) = match self.order {
            UpdateOrder::Simultaneous => {
                let j = self.w_b.sample(&mut self.rng)?;
                let i = self.w_a.sample(&mut self.rng)?;
                self.update_column_player(i)?;
                self.update_row_player(j)?;
                (i, j)
            }
            UpdateOrder::Alternating => {
                let j = self.w_b.sample(&mut self.rng)?;
                self.update_row_player(j)?;
                let i = self.w_a.sample(&mut self.rng)?;
                self.update_column_player(i)?;
                (i, j)
            }
        };
        self.counts_x[j] += 1;
        self.counts_w[i] += 1;
        self.loss_sum += self.payoff(i, j);
        self.k += 1;
        Ok((i, j))
    }

    /// B reweights the columns of row `i` of `Ã` by `exp(−η_B ã_{ij})`.
    fn update_column_player(&mut self, i: usize) -> Result<()> {
        let (row, sign) = if i < self.n {
            (i, 1.0)
        } else {
            (i - self.n, -1.0)
        };
        let (cols, vals) = self.a.row(row);
        for (&j, &v) in cols.iter().zip(vals) {
            self.w_b.scale_leaf(j, (-self.eta_b * sign * v).exp())?;
        }
        self.leaf_updates += cols.len() as u64;
        Self::bound_total(
            &mut self.w_b,
            self.rescale_threshold,
            &mut self.rescales,
            &mut self.peak_total,
        )
    }

    /// A reweights rows `r` and `r + n` for every entry `A_{rj}` of column
    /// `j` by `exp(±η_A A_{rj})`.
    fn update_row_player(&mut self, j: usize) -> Result<()> {
        let (rows, vals) = self.a.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            let up = (self.eta_a * v).exp();
            self.w_a.scale_leaf(r, up)?;
            self.w_a.scale_leaf(r + self.n, 1.0 / up)?;
        }
        self.leaf_updates += 2 * rows.len() as u64;
        Self::bound_total(
            &mut self.w_a,
            self.rescale_threshold,
            &mut self.rescales,
            &mut self.peak_total,
        )
    }

    fn bound_total(
        tree: &mut WeightTree,
        threshold: f64,
        rescales: &mut u64,
        peak: &mut f64,
    ) -> Result<()> {
        let total = tree.total();
        if !total.is_finite() {
            return Err(Error::NonFinite(format!("weight total {total}")));
        }
        if total <= 0.0 {
            return Err(Error::ZeroTotal);
        }
        *peak = peak.max(total);
        if total > threshold {
            tree.scale_all(1.0 / total)?;
            *rescales += 1;
        }
        Ok(())
    }

    /// Forces a rescale of both trees to unit total.
    pub fn normalize(&mut self) -> Result<()> {
        let (tb, ta) = (self.w_b.total(), self.w_a.total());
        self.w_b.scale_all(1.0 / tb)?;
        self.w_a.scale_all(1.0 / ta)
    }

    /// `x̄ = counts_x / k`.
    pub fn average_x(&self) -> Vec<f64> {
        let k = self.k.max(1) as f64;
        self.counts_x.iter().map(|&c| c as f64 / k).collect()
    }

    /// `ω̄ = counts_w / k`.
    pub fn average_w(&self) -> Vec<f64> {
        let k = self.k.max(1) as f64;
        self.counts_w.iter().map(|&c| c as f64 / k).collect()
    }

    /// `(1/k) Σ ã_{i(k) j(k)}`.
    pub fn average_loss(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.loss_sum / self.k as f64
        }
    }

    /// `Ãᵀω̄`, the expected loss of each pure column against the row
    /// player's empirical mix.
    pub fn column_losses(&self) -> Result<Vec<f64>> {
        let w = self.average_w();
        let y: Vec<f64> = (0..self.n).map(|r| w[r] - w[r + self.n]).collect();
        self.a.mul_vec_transposed(&y)
    }

    /// Column player's empirical regret against the best fixed column.
    pub fn regret(&self) -> Result<f64> {
        let best = self
            .column_losses()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok(self.average_loss() - best)
    }

    fn trace_row(&self) -> Result<GkTraceRow> {
        Ok(GkTraceRow {
            iter: self.k,
            max_weight_b: max_leaf(&self.w_b),
            max_weight_a: max_leaf(&self.w_a),
            root_b: self.w_b.total(),
            root_a: self.w_a.total(),
            entropy_b: entropy(&self.w_b),
            entropy_a: entropy(&self.w_a),
            rescales: self.rescales,
            residual_inf: residual_inf(self.a, &self.average_x())?,
        })
    }

    fn tree_metrics(&self) -> TreeUpdateMetrics {
        let height = self.w_a.height();
        TreeUpdateMetrics {
            updates: self.leaf_updates,
            total_levels_climbed: self.leaf_updates * height as u64,
            full_height: height,
        }
    }
}

fn max_leaf(t: &WeightTree) -> f64 {
    t.weights().iter().copied().fold(0.0, f64::max)
}

fn entropy(t: &WeightTree) -> f64 {
    let total = t.total();
    -t.weights()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Plays the configured number of rounds and reports `x̄`.
pub fn solve(a: &DualSparseMatrix, cfg: &GkConfig) -> Result<SolveOutcome> {
    let mut state = GkState::new(a, cfg)?;
    let rounds = cfg.rounds.unwrap_or(state.horizon);
    let mut schedule = TraceSchedule::new(cfg.trace_per_doubling);
    let mut trace = Vec::new();
    let mut gk_trace = Vec::new();

    let mut clock = LoopClock::start();
    while state.k < rounds {
        state.step()?;
        if cfg.trace_per_doubling > 0 && schedule.due(state.k) {
            clock.pause();
            let row = state.trace_row()?;
            trace.push(TraceRow {
                iter: state.k,
                elapsed_ns: clock.elapsed_ns(),
                f_value: row.residual_inf,
            });
            gk_trace.push(row);
            clock.resume();
        }
    }
    clock.pause();
    let wall_time_ns = clock.elapsed_ns();
    if trace.last().map(|r| r.iter) != Some(state.k) {
        let row = state.trace_row()?;
        trace.push(TraceRow {
            iter: state.k,
            elapsed_ns: wall_time_ns,
            f_value: row.residual_inf,
        });
        gk_trace.push(row);
    }

    let x = state.average_x();
    let final_residual_inf = residual_inf(a, &x)?;
    let best_response = state
        .column_losses()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let diagnostics = GkDiagnostics {
        horizon: state.horizon,
        eta_b: state.eta_b,
        eta_a: state.eta_a,
        rescale_threshold: cfg.rescale_threshold,
        rescale_count: state.rescales,
        peak_total: state.peak_total,
        average_loss_b: state.average_loss(),
        best_response_loss_b: best_response,
        regret_b: state.average_loss() - best_response,
        regret_bound_b: regret_bound(state.n, state.horizon, cfg.sigma),
        duality_gap: final_residual_inf - best_response,
        trace: gk_trace,
    };
    let report = SolveReport {
        method: Method::Gk,
        problem: ProblemSummary::of_operator(a),
        epsilon: cfg.epsilon,
        iterations: state.k,
        wall_time_ns,
        tracked_f: final_residual_inf,
        final_residual_two: residual_two(a, &x)?,
        final_residual_inf,
        min_component: x.iter().copied().fold(f64::INFINITY, f64::min),
        success: final_residual_inf <= cfg.epsilon,
        gamma: None,
        seed: Some(cfg.seed),
        rng: Some(RNG_NAME.to_string()),
        tree_metrics: state.tree_metrics(),
        gk_diagnostics: Some(diagnostics),
        trace,
    };
    Ok(SolveOutcome { x, report })
}
