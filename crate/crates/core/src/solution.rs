//! Search results and the JSON run report.

use serde::{Deserialize, Serialize};

use crate::astar::{BudgetLedger, CostMode};
use crate::error::Result;
use crate::heads::{Geometry, HeadIndex, PruneMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Astar,
    Local,
    Global,
    Random,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Astar => "astar",
            Strategy::Local => "local",
            Strategy::Global => "global",
            Strategy::Random => "random",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "astar" => Ok(Strategy::Astar),
            "local" => Ok(Strategy::Local),
            "global" => Ok(Strategy::Global),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// A head removed by the search. Heads removed together by one global
/// move share the move's iteration and cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedHead {
    pub head: HeadIndex,
    pub iteration: usize,
    pub raw_cost: f64,
    pub clamped_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminatedHead {
    pub head: HeadIndex,
    pub iteration: usize,
    /// Cost observed in the iteration that eliminated the head.
    pub cost: f64,
}

/// Most recent cost observed for a head during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadCost {
    pub head: HeadIndex,
    pub cost: f64,
}

/// One committed pruning move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// One-based.
    pub iteration: usize,
    pub pruned: Vec<HeadIndex>,
    pub raw_cost: f64,
    pub clamped_cost: f64,
    /// Accuracy with every head pruned so far, this move included.
    pub accuracy_after: f64,
    pub charged_cumulative: f64,
    /// Heads still eligible after this iteration's eliminations.
    pub live_count: usize,
    /// Oracle invocations (cache misses) during the iteration.
    pub evaluations: u64,
    /// Candidate evaluations requested during the iteration.
    pub candidates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    /// Remaining budget reached zero.
    BudgetExhausted,
    /// Every head was pruned or eliminated.
    SearchSpaceEmpty,
    /// The cheapest candidate did not fit in the remaining budget.
    OverBudget {
        iteration: usize,
        candidate: Vec<HeadIndex>,
        raw_cost: f64,
        clamped_cost: f64,
        evaluations: u64,
        candidates: u64,
    },
    /// The oracle failed; the solution holds the completed iterations.
    Aborted { message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationStats {
    pub requested: u64,
    /// Distinct masks evaluated: the "# Search" figure.
    pub computed: u64,
    /// Candidate evaluations issued by the strategy, excluding reference
    /// accuracy lookups.
    pub candidates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSolution {
    pub strategy: Strategy,
    pub geometry: Geometry,
    pub cost_mode: CostMode,
    pub baseline_accuracy: f64,
    pub final_accuracy: f64,
    pub budget: BudgetLedger,
    /// In prune order.
    pub pruned: Vec<PrunedHead>,
    pub eliminated: Vec<EliminatedHead>,
    pub trace: Vec<TraceRow>,
    /// Canonical head order; heads never evaluated are absent.
    pub observed_costs: Vec<HeadCost>,
    pub stop: StopReason,
    pub evaluations: EvaluationStats,
}

/// Table-3-style summary of the prefix of the solution that cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroBudgetSummary {
    pub heads_at_zero: usize,
    pub accuracy_at_zero: f64,
    /// Percent of all heads.
    pub compression_at_zero: f64,
}

impl PruneSolution {
    pub fn pruned_heads(&self) -> Vec<HeadIndex> {
        self.pruned.iter().map(|p| p.head).collect()
    }

    pub fn mask(&self) -> PruneMask {
        PruneMask::empty().with_all(self.pruned.iter().map(|p| &p.head))
    }

    pub fn compression(&self) -> f64 {
        100.0 * self.pruned.len() as f64 / self.geometry.total_heads() as f64
    }

    pub fn zero_budget_summary(&self) -> ZeroBudgetSummary {
        zero_budget_summary(&self.trace, self.baseline_accuracy, self.geometry)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Length of the longest prefix of committed moves charged nothing, the
/// accuracy after it, and the share of heads it removes.
pub fn zero_budget_summary(trace: &[TraceRow], baseline: f64, geometry: Geometry) -> ZeroBudgetSummary {
    let mut heads = 0;
    let mut accuracy = baseline;
    for row in trace.iter().take_while(|r| r.clamped_cost == 0.0) {
        heads += row.pruned.len();
        accuracy = row.accuracy_after;
    }
    ZeroBudgetSummary {
        heads_at_zero: heads,
        accuracy_at_zero: accuracy,
        compression_at_zero: 100.0 * heads as f64 / geometry.total_heads() as f64,
    }
}
