//! Solver outcomes, convergence traces and benchmark rows.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::problem::ProblemSpec;
use crate::sparse::DualSparseMatrix;
use crate::trees::TreeUpdateMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nl1,
    Fw,
    Gk,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nl1 => "nl1",
            Method::Fw => "fw",
            Method::Gk => "gk",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nl1" => Ok(Method::Nl1),
            "fw" => Ok(Method::Fw),
            "gk" => Ok(Method::Gk),
            other => Err(format!("unknown method {other:?} (expected nl1, fw or gk)")),
        }
    }
}

/// What was solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub label: String,
    pub n: usize,
    pub nnz: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProblemSpec>,
}

impl ProblemSummary {
    pub fn of_operator(a: &DualSparseMatrix) -> Self {
        Self {
            label: "matrix".to_string(),
            n: a.n_cols(),
            nnz: a.nnz(),
            spec: None,
        }
    }

    pub fn with_spec(mut self, spec: &ProblemSpec) -> Self {
        self.label = spec.to_string();
        self.spec = Some(spec.clone());
        self
    }
}

/// One convergence sample. `f_value` is `½‖Ax‖²` for NL1 and FW and
/// `‖Ax̄‖_∞` of the running average for GK.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: u64,
    pub elapsed_ns: u64,
    pub f_value: f64,
}

/// One sample of the weight dynamics of GK.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkTraceRow {
    pub iter: u64,
    /// Largest leaf weight of each player's tree.
    pub max_weight_b: f64,
    pub max_weight_a: f64,
    pub root_b: f64,
    pub root_a: f64,
    /// Shannon entropy (nats) of each player's normalized distribution.
    pub entropy_b: f64,
    pub entropy_a: f64,
    pub rescales: u64,
    pub residual_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkDiagnostics {
    pub horizon: u64,
    pub eta_b: f64,
    pub eta_a: f64,
    pub rescale_threshold: f64,
    pub rescale_count: u64,
    /// Largest tree total seen, before any rescale.
    pub peak_total: f64,
    /// `(1/N) Σ ã_{i(k) j(k)}`: average realized loss of the column player.
    pub average_loss_b: f64,
    /// `min_j (ω̄ᵀÃ)_j`.
    pub best_response_loss_b: f64,
    pub regret_b: f64,
    /// High-probability regret bound `√(2/N)(√ln n + 2√(2 ln σ⁻¹))`.
    pub regret_bound_b: f64,
    /// `max_ω ⟨ω, Ãx̄⟩ − min_x ⟨ω̄, Ãx⟩`.
    pub duality_gap: f64,
    pub trace: Vec<GkTraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub problem: ProblemSummary,
    pub epsilon: f64,
    pub iterations: u64,
    /// Time spent in the iteration loop only.
    pub wall_time_ns: u64,
    /// Objective as tracked incrementally at termination.
    pub tracked_f: f64,
    pub final_residual_two: f64,
    pub final_residual_inf: f64,
    /// Smallest component of the returned vector.
    pub min_component: f64,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    pub tree_metrics: TreeUpdateMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gk_diagnostics: Option<GkDiagnostics>,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn wall_time_s(&self) -> f64 {
        self.wall_time_ns as f64 * 1e-9
    }
}

/// A finished solve: the solution vector and its report.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

/// One line of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub param: Option<usize>,
    pub method: Method,
    pub time_s: f64,
    pub iterations: u64,
}

impl BenchRow {
    pub fn from_report(report: &SolveReport, family: &str, param: Option<usize>) -> Self {
        Self {
            family: family.to_string(),
            n: report.problem.n,
            param,
            method: report.method,
            time_s: report.wall_time_s(),
            iterations: report.iterations,
        }
    }
}

/// Stopwatch that can be paused around bookkeeping that should not count
/// as solver time.
#[derive(Debug)]
pub(crate) struct LoopClock {
    accumulated: Duration,
    running_since: Option<Instant>,
}

impl LoopClock {
    pub(crate) fn start() -> Self {
        Self {
            accumulated: Duration::ZERO,
            running_since: Some(Instant::now()),
        }
    }

    pub(crate) fn pause(&mut self) {
        if let Some(t) = self.running_since.take() {
            self.accumulated += t.elapsed();
        }
    }

    pub(crate) fn resume(&mut self) {
        if self.running_since.is_none() {
            self.running_since = Some(Instant::now());
        }
    }

    pub(crate) fn elapsed_ns(&self) -> u64 {
        let running = self.running_since.map_or(Duration::ZERO, |t| t.elapsed());
        (self.accumulated + running).as_nanos() as u64
    }
}

/// Log-spaced sampling points: roughly `per_doubling` samples each time the
/// iteration count doubles.
#[derive(Debug, Clone)]
pub(crate) struct TraceSchedule {
    next: u64,
    per_doubling: u64,
}

impl TraceSchedule {
    pub(crate) fn new(per_doubling: u64) -> Self {
        Self {
            next: 1,
            per_doubling: per_doubling.max(1),
        }
    }

    #[inline]
    pub(crate) fn due(&mut self, iter: u64) -> bool {
        if iter < self.next {
            return false;
        }
        self.next = iter + (iter / self.per_doubling).max(1);
        true
    }
}

/// `|tracked − fresh| ≤ tol · max(|tracked|, |fresh|)`.
pub(crate) fn relative_agreement(tracked: f64, fresh: f64, tol: f64) -> bool {
    (tracked - fresh).abs() <= tol * tracked.abs().max(fresh.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_is_log_spaced() {
        let mut s = TraceSchedule::new(16);
        let hits: Vec<u64> = (0..100_000).filter(|&k| s.due(k)).collect();
        assert_eq!(&hits[..5], &[1, 2, 3, 4, 5]);
        assert!(hits.len() < 250, "{}", hits.len());
        assert!(hits.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("FW".parse::<Method>().unwrap(), Method::Fw);
        assert!("sgd".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::Nl1).unwrap(), "\"nl1\"");
    }

    #[test]
    fn agreement() {
        assert!(relative_agreement(0.0, 0.0, 1e-8));
        assert!(relative_agreement(1.0, 1.0 + 1e-9, 1e-8));
        assert!(!relative_agreement(1.0, 1.0 + 1e-7, 1e-8));
    }
}
