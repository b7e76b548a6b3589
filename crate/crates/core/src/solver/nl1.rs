//! Gradient method in the 1-norm on the hyperplane `⟨x, e⟩ = 1`.
//!
//! Minimizes `½‖Ax‖² + (γ/2) Σ (−xᵢ)₊²`. The 1-norm step moves exactly two
//! coordinates: `+δ` at the smallest gradient component and `−δ` at the
//! largest, with `δ = (g_max − g_min) / 8`. Two tournament trees keep both
//! extremes available, and `b = Ax`, `Aᵀb` and `½‖b‖²` are patched in place,
//! so one step costs `O(s² log n)`.

use serde::{Deserialize, Serialize};

use super::{
    half_norm_sq, require_square, scaled_inf_distance, Consistency, RowSupport, TouchSet,
    CONSISTENCY_TOL,
};
use crate::error::{Error, Result};
use crate::report::{
    relative_agreement, LoopClock, Method, ProblemSummary, SolveOutcome, SolveReport, TraceRow,
    TraceSchedule,
};
use crate::sparse::{residual_inf, residual_two, DualSparseMatrix};
use crate::trees::{ArgExtremeTree, Direction, TreeUpdateMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nl1Config {
    pub epsilon: f64,
    /// Weight of the negativity penalty.
    pub gamma: f64,
    /// The step is `(g_max − g_min) / step_denominator`.
    pub step_denominator: f64,
    pub max_iters: u64,
    pub start_vertex: usize,
    /// Compare tracked quantities with a fresh recomputation every this many
    /// iterations.
    pub check_stride: Option<u64>,
    /// Re-sum `½‖b‖²` from the tracked `b` whenever the incrementally
    /// updated objective has fallen below this fraction of its value at the
    /// previous re-sum. Keeps the objective accurate relative to its own
    /// size once it is many orders of magnitude below its starting value.
    pub refresh_ratio: Option<f64>,
}

impl Default for Nl1Config {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            gamma: 1.0,
            step_denominator: 8.0,
            max_iters: 1_000_000_000,
            start_vertex: 0,
            check_stride: None,
            refresh_ratio: Some(super::DEFAULT_REFRESH_RATIO),
        }
    }
}

impl Nl1Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {}",
                self.epsilon
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        if !(self.step_denominator > 0.0 && self.step_denominator.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step denominator = {}",
                self.step_denominator
            )));
        }
        if let Some(r) = self.refresh_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter(format!("refresh ratio = {r}")));
            }
        }
        if self.check_stride == Some(0) {
            return Err(Error::InvalidParameter(
                "check stride must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Nl1State<'a> {
    a: &'a DualSparseMatrix,
    gamma: f64,
    step_denominator: f64,
    refresh_ratio: Option<f64>,
    x: Vec<f64>,
    b: Vec<f64>,
    /// `Aᵀb`, without the penalty term.
    g_resid: Vec<f64>,
    min_tree: ArgExtremeTree,
    max_tree: ArgExtremeTree,
    /// `½‖b‖²`.
    f_resid: f64,
    f_at_refresh: f64,
    iter: u64,
    refreshes: u64,
    retired_metrics: TreeUpdateMetrics,
    touched: TouchSet,
    support: RowSupport,
}

impl<'a> Nl1State<'a> {
    /// Starts at the simplex vertex `cfg.start_vertex`: `b` is that column of
    /// `A`, `Aᵀb` takes one pass over the rows it reaches.
    pub fn new(a: &'a DualSparseMatrix, cfg: &Nl1Config) -> Result<Self> {
        cfg.validate()?;
        let n = require_square(a)?;
        if cfg.start_vertex >= n {
            return Err(Error::InvalidParameter(format!(
                "start vertex {} out of range for n = {n}",
                cfg.start_vertex
            )));
        }
        let mut x = vec![0.0f64; n];
        x[cfg.start_vertex] = 1.0;
        let mut b = vec![0.0; n];
        let (rows, vals) = a.col(cfg.start_vertex);
        let mut support = RowSupport::new(n);
        for (&r, &v) in rows.iter().zip(vals) {
            b[r] = v;
            support.insert(r);
        }
        let g_resid = a.mul_vec_transposed(&b)?;
        let f_resid = half_norm_sq(&b);
        let g: Vec<f64> = (0..n)
            .map(|i| g_resid[i] + cfg.gamma * x[i].min(0.0))
            .collect();
        Ok(Self {
            a,
            gamma: cfg.gamma,
            step_denominator: cfg.step_denominator,
            refresh_ratio: cfg.refresh_ratio,
            min_tree: ArgExtremeTree::new(&g, Direction::Min)?,
            max_tree: ArgExtremeTree::new(&g, Direction::Max)?,
            x,
            b,
            g_resid,
            f_resid,
            f_at_refresh: f_resid,
            iter: 0,
            refreshes: 0,
            retired_metrics: TreeUpdateMetrics::default(),
            touched: TouchSet::new(n),
            support,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn f_resid(&self) -> f64 {
        self.f_resid
    }

    pub fn iterations(&self) -> u64 {
        self.iter
    }

    pub fn refreshes(&self) -> u64 {
        self.refreshes
    }

    /// Full gradient component `(Aᵀb)ᵢ + γ·min(xᵢ, 0)`.
    #[inline]
    pub fn gradient(&self, i: usize) -> f64 {
        self.g_resid[i] + self.gamma * self.x[i].min(0.0)
    }

    /// The tracked gradient as stored in the trees.
    pub fn tree_gradient(&self) -> Vec<f64> {
        (0..self.x.len()).map(|i| self.min_tree.value(i)).collect()
    }

    pub fn tree_metrics(&self) -> TreeUpdateMetrics {
        self.retired_metrics
            .merge(self.min_tree.metrics())
            .merge(self.max_tree.metrics())
    }

    /// One two-coordinate step.
    pub fn step(&mut self) -> Result<()> {
        let lo = self.min_tree.top();
        let hi = self.max_tree.top();
        let delta = (hi.value - lo.value) / self.step_denominator;
        if !delta.is_finite() {
            return Err(Error::NonFinite(format!("step length {delta}")));
        }
        self.iter += 1;
        if delta == 0.0 || lo.index == hi.index {
            return Ok(());
        }
        self.move_coordinate(lo.index, delta);
        self.move_coordinate(hi.index, -delta);

        let touched = self.touched.take();
        for &k in &touched {
            let g = self.gradient(k);
            self.min_tree.update(k, g)?;
            self.max_tree.update(k, g)?;
        }
        self.touched.recycle(touched);

        if let Some(ratio) = self.refresh_ratio {
            if self.f_resid < ratio * self.f_at_refresh {
                self.resum_objective();
            }
        }
        Ok(())
    }

    /// `x_j += dx`, pushed through column `j` into `b`, `½‖b‖²` and, via
    /// the rows reached, into `Aᵀb`.
    #[inline]
    fn move_coordinate(&mut self, j: usize, dx: f64) {
        let a = self.a;
        self.x[j] += dx;
        self.touched.insert(j);
        let (rows, vals) = a.col(j);
        for (&r, &a_rj) in rows.iter().zip(vals) {
            let db = a_rj * dx;
            let b_new = self.b[r] + db;
            self.b[r] = b_new;
            self.support.insert(r);
            self.f_resid += db * (b_new - 0.5 * db);
            let (cols, row_vals) = a.row(r);
            for (&k, &a_rk) in cols.iter().zip(row_vals) {
                self.g_resid[k] += a_rk * db;
                self.touched.insert(k);
            }
        }
    }

    /// Replaces the incrementally accumulated objective by `½‖b‖²` summed
    /// over the rows of `b` written so far.
    fn resum_objective(&mut self) {
        self.f_resid = self.support.half_norm_sq(&self.b);
        self.f_at_refresh = self.f_resid;
        self.refreshes += 1;
    }

    /// Recomputes `b`, `Aᵀb` and `½‖b‖²` from `x` and rebuilds both trees.
    pub fn refresh(&mut self) -> Result<()> {
        self.b = self.a.mul_vec(&self.x)?;
        self.g_resid = self.a.mul_vec_transposed(&self.b)?;
        self.f_resid = half_norm_sq(&self.b);
        self.f_at_refresh = self.f_resid;
        let g: Vec<f64> = (0..self.x.len()).map(|i| self.gradient(i)).collect();
        self.retired_metrics = self.tree_metrics();
        self.min_tree = ArgExtremeTree::new(&g, Direction::Min)?;
        self.max_tree = ArgExtremeTree::new(&g, Direction::Max)?;
        self.refreshes += 1;
        Ok(())
    }

    /// Compares the tracked `b`, `Aᵀb` and objective with values computed
    /// from scratch.
    pub fn consistency(&self) -> Result<Consistency> {
        let b_fresh = self.a.mul_vec(&self.x)?;
        let g_fresh = self.a.mul_vec_transposed(&b_fresh)?;
        Ok(Consistency {
            f_tracked: self.f_resid,
            f_fresh: half_norm_sq(&b_fresh),
            b_error: scaled_inf_distance(&self.b, &b_fresh),
            g_error: scaled_inf_distance(&self.g_resid, &g_fresh),
        })
    }
}

/// Runs NL1 until `½‖Ax‖² ≤ ε²/2` or `max_iters`.
pub fn solve(a: &DualSparseMatrix, cfg: &Nl1Config) -> Result<SolveOutcome> {
    let mut state = Nl1State::new(a, cfg)?;
    let target = 0.5 * cfg.epsilon * cfg.epsilon;
    let mut schedule = TraceSchedule::new(16);
    let mut trace = vec![TraceRow {
        iter: 0,
        elapsed_ns: 0,
        f_value: state.f_resid,
    }];

    let mut clock = LoopClock::start();
    while state.f_resid > target && state.iter < cfg.max_iters {
        state.step()?;
        if let Some(stride) = cfg.check_stride {
            if state.iter % stride == 0 {
                clock.pause();
                state.consistency()?.check(CONSISTENCY_TOL)?;
                clock.resume();
            }
        }
        if schedule.due(state.iter) {
            trace.push(TraceRow {
                iter: state.iter,
                elapsed_ns: clock.elapsed_ns(),
                f_value: state.f_resid,
            });
        }
    }
    clock.pause();
    let wall_time_ns = clock.elapsed_ns();
    if trace.last().map(|r| r.iter) != Some(state.iter) {
        trace.push(TraceRow {
            iter: state.iter,
            elapsed_ns: wall_time_ns,
            f_value: state.f_resid,
        });
    }

    let success = state.f_resid <= target;
    let final_residual_two = residual_two(a, &state.x)?;
    if success && !relative_agreement(state.f_resid, final_residual_two, CONSISTENCY_TOL) {
        return Err(Error::Drift {
            quantity: "objective",
            tracked: state.f_resid,
            fresh: final_residual_two,
        });
    }
    let report = SolveReport {
        method: Method::Nl1,
        problem: ProblemSummary::of_operator(a),
        epsilon: cfg.epsilon,
        iterations: state.iter,
        wall_time_ns,
        tracked_f: state.f_resid,
        final_residual_two,
        final_residual_inf: residual_inf(a, &state.x)?,
        min_component: state.x.iter().copied().fold(f64::INFINITY, f64::min),
        success,
        gamma: Some(cfg.gamma),
        seed: None,
        rng: None,
        tree_metrics: state.tree_metrics(),
        gk_diagnostics: None,
        trace,
    };
    Ok(SolveOutcome { x: state.x, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{gen_diagonal, gen_random_ds};
    use crate::solver::testutil::{cycle3, power_iteration, swap2, zero};
    use crate::sparse::pagerank_operator;

    fn no_refresh() -> Nl1Config {
        Nl1Config {
            refresh_ratio: None,
            ..Nl1Config::default()
        }
    }

    #[test]
    fn init_examples() {
        let z = zero(4);
        let st = Nl1State::new(&z, &Nl1Config::default()).unwrap();
        assert_eq!(st.f_resid(), 0.0);

        let a = swap2();
        let st = Nl1State::new(&a, &Nl1Config::default()).unwrap();
        assert_eq!(st.b(), &[-1.0, 1.0]);
        assert_eq!(st.f_resid(), 1.0);
        assert_eq!(st.x().iter().sum::<f64>(), 1.0);

        let cfg = Nl1Config {
            start_vertex: 2,
            ..Nl1Config::default()
        };
        assert!(Nl1State::new(&a, &cfg).is_err());
        let cfg = Nl1Config {
            epsilon: 0.0,
            ..Nl1Config::default()
        };
        assert!(Nl1State::new(&a, &cfg).is_err());
    }

    #[test]
    fn first_step_on_swap() {
        // b = (-1, 1), Aᵀb = (2, -2): move 0.5 from x₀ to x₁
        let a = swap2();
        let mut st = Nl1State::new(&a, &no_refresh()).unwrap();
        st.step().unwrap();
        assert_eq!(st.x(), &[0.5, 0.5]);
        assert_eq!(st.f_resid(), 0.0);
    }

    #[test]
    fn step_length_follows_gradient_spread() {
        // gradient (0.5, -0.3, 0.1) with the default denominator gives δ = 0.1
        let g = [0.5, -0.3, 0.1];
        let lo = ArgExtremeTree::new(&g, Direction::Min).unwrap().top();
        let hi = ArgExtremeTree::new(&g, Direction::Max).unwrap().top();
        assert_eq!((lo.index, hi.index), (1, 0));
        assert!(((hi.value - lo.value) / 8.0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_is_stationary() {
        let z = zero(3);
        let mut st = Nl1State::new(&z, &Nl1Config::default()).unwrap();
        st.step().unwrap();
        assert_eq!(st.x(), &[1.0, 0.0, 0.0]);
        assert_eq!(st.iterations(), 1);
    }

    #[test]
    fn hyperplane_is_conserved() {
        let p = gen_random_ds(300, 5, 2).unwrap();
        let a = pagerank_operator(&p).unwrap();
        let mut st = Nl1State::new(&a, &Nl1Config::default()).unwrap();
        for _ in 0..20_000 {
            st.step().unwrap();
            assert!((st.x().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tracking_matches_recomputation() {
        let p = gen_random_ds(500, 4, 9).unwrap();
        let a = pagerank_operator(&p).unwrap();
        let mut st = Nl1State::new(&a, &no_refresh()).unwrap();
        for k in 1..=5000 {
            st.step().unwrap();
            if k % 500 == 0 {
                let c = st.consistency().unwrap();
                c.check(1e-8).unwrap();
                let g = st.tree_gradient();
                for (i, gi) in g.iter().enumerate() {
                    assert_eq!(*gi, st.gradient(i));
                }
            }
        }
    }

    #[test]
    fn zero_operator_needs_no_iterations() {
        let out = solve(&zero(5), &Nl1Config::default()).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert!(out.report.success);
    }

    #[test]
    fn cycle_converges_to_uniform() {
        let a = cycle3();
        let cfg = Nl1Config {
            epsilon: 1e-4,
            check_stride: Some(7),
            ..Nl1Config::default()
        };
        let out = solve(&a, &cfg).unwrap();
        assert!(out.report.success);
        assert!(out.report.final_residual_two <= 0.5e-8);
        let p = crate::sparse::DualSparseMatrix::from_triplets(
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            3,
            3,
        )
        .unwrap();
        let oracle = power_iteration(&p, 1e-14);
        for (xi, oi) in out.x.iter().zip(&oracle) {
            assert!((xi - oi).abs() < 1e-2);
        }
    }

    #[test]
    fn max_iters_is_reported_not_fatal() {
        let a = pagerank_operator(&gen_diagonal(200, 3, 0, false).unwrap()).unwrap();
        let cfg = Nl1Config {
            max_iters: 10,
            ..Nl1Config::default()
        };
        let out = solve(&a, &cfg).unwrap();
        assert!(!out.report.success);
        assert_eq!(out.report.iterations, 10);
        assert_eq!(out.report.trace.last().unwrap().iter, 10);
    }

    #[test]
    fn progress_on_diagonal_family() {
        let a = pagerank_operator(&gen_diagonal(1000, 3, 0, false).unwrap()).unwrap();
        let mut st = Nl1State::new(&a, &Nl1Config::default()).unwrap();
        let mut last = st.f_resid();
        for _ in 0..5 {
            for _ in 0..10_000 {
                st.step().unwrap();
            }
            assert!(st.f_resid() < last);
            last = st.f_resid();
        }
    }
}
