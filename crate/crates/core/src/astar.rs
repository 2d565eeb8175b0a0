//! Budgeted best-first pruning with heuristic elimination.
//!
//! Every iteration measures the cost of pruning each live head on top of the
//! heads already pruned, commits the cheapest one if it fits in the budget,
//! and then walks the remaining heads in ascending cost. A head's cost next
//! iteration is estimated by its cost now; heads whose estimated contribution
//! no longer fits in the remaining budget are eliminated for good, so later
//! iterations evaluate fewer candidates.

// Negated float comparisons below are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::{all_heads, HeadIndex, PruneMask};
use crate::oracle::Evaluator;
use crate::solution::{
    EliminatedHead, EvaluationStats, HeadCost, PruneSolution, PrunedHead, StopReason, Strategy, TraceRow,
};

/// Which accuracy a candidate's cost is measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Against the accuracy of the model with the already-pruned heads
    /// removed. Charges then add up to the true total drop.
    #[default]
    Incremental,
    /// Against the unpruned baseline accuracy.
    Baseline,
}

impl std::str::FromStr for CostMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "incremental" => Ok(CostMode::Incremental),
            "baseline" => Ok(CostMode::Baseline),
            other => Err(format!("unknown cost mode {other:?}")),
        }
    }
}

/// Accuracy budget in percentage points. `given` may be infinite for
/// unbounded runs; it serializes as `null` then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetLedger {
    given: f64,
    charged: f64,
}

impl BudgetLedger {
    pub fn new(given: f64) -> Result<Self> {
        if given.is_nan() || given < 0.0 {
            return Err(Error::Config(vec![format!("budget must be non-negative, got {given}")]));
        }
        Ok(BudgetLedger { given, charged: 0.0 })
    }

    pub fn unbounded() -> Self {
        BudgetLedger {
            given: f64::INFINITY,
            charged: 0.0,
        }
    }

    pub fn given(&self) -> f64 {
        self.given
    }

    pub fn charged(&self) -> f64 {
        self.charged
    }

    pub fn remaining(&self) -> f64 {
        self.given - self.charged
    }

    pub fn charge(&mut self, amount: f64) -> Result<()> {
        if !(amount >= 0.0) {
            return Err(Error::Invariant(format!("negative charge {amount}")));
        }
        self.charged += amount;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LedgerRepr {
    given: Option<f64>,
    charged: f64,
    remaining: Option<f64>,
}

impl Serialize for BudgetLedger {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let finite = |v: f64| v.is_finite().then_some(v);
        LedgerRepr {
            given: finite(self.given),
            charged: self.charged,
            remaining: finite(self.remaining()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BudgetLedger {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = LedgerRepr::deserialize(deserializer)?;
        Ok(BudgetLedger {
            given: repr.given.unwrap_or(f64::INFINITY),
            charged: repr.charged,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostEntry {
    pub head: HeadIndex,
    pub post_accuracy: f64,
    pub cost: f64,
}

/// Costs of every live candidate in one iteration, in canonical head order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub iteration: usize,
    pub reference_accuracy: f64,
    pub entries: Vec<CostEntry>,
}

impl CostTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, head: HeadIndex) -> Option<&CostEntry> {
        self.entries
            .binary_search_by(|e| e.head.cmp(&head))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Entries by ascending cost, ties by head.
    pub fn sorted_by_cost(&self) -> Vec<&CostEntry> {
        let mut v: Vec<&CostEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.head.cmp(&b.head)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Victim {
    pub head: HeadIndex,
    pub post_accuracy: f64,
    pub raw_cost: f64,
    pub clamped_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Kept,
    Eliminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationRecord {
    pub head: HeadIndex,
    /// Next-iteration cost estimate, clamped at zero.
    pub estimate: f64,
    /// `estimate` minus the cost just charged.
    pub contribution: f64,
    /// Sum of contributions admitted so far, this head included if kept.
    pub running_total: f64,
    pub outcome: Outcome,
}

/// Evaluates candidate masks, serially or on a fixed-size pool. Results come
/// back in input order either way.
pub(crate) enum Fanout {
    Serial,
    Pool(rayon::ThreadPool),
}

impl Fanout {
    pub(crate) fn new(workers: usize) -> Result<Self> {
        if workers <= 1 {
            return Ok(Fanout::Serial);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(Fanout::Pool)
            .map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))
    }

    pub(crate) fn map<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> Result<U> + Sync + Send,
    {
        match self {
            Fanout::Serial => items.iter().map(f).collect(),
            Fanout::Pool(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

/// A candidate pruning move: a single head, or a whole head column for
/// global pruning. `key` orders ties and labels the move in cost tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Move {
    pub key: HeadIndex,
    pub heads: Vec<HeadIndex>,
}

fn reference_accuracy(evaluator: &Evaluator, pruned: &PruneMask, mode: CostMode) -> Result<f64> {
    match mode {
        CostMode::Incremental => evaluator.evaluate(pruned),
        CostMode::Baseline => Ok(evaluator.baseline()),
    }
}

fn move_costs(
    moves: &[Move],
    pruned: &PruneMask,
    evaluator: &Evaluator,
    mode: CostMode,
    fanout: &Fanout,
) -> Result<CostTable> {
    let reference = reference_accuracy(evaluator, pruned, mode)?;
    let accuracies = fanout.map(moves, |m| evaluator.evaluate(&pruned.with_all(&m.heads)))?;
    let mut entries: Vec<CostEntry> = moves
        .iter()
        .zip(accuracies)
        .map(|(m, post_accuracy)| CostEntry {
            head: m.key,
            post_accuracy,
            cost: reference - post_accuracy,
        })
        .collect();
    entries.sort_by_key(|e| e.head);
    Ok(CostTable {
        iteration: 0,
        reference_accuracy: reference,
        entries,
    })
}

/// Cost of pruning each live head on top of `pruned`. Performs one
/// evaluation per live head plus, in incremental mode, one for the
/// reference accuracy (normally a cache hit after the first iteration).
pub fn compute_costs(
    live: &[HeadIndex],
    pruned: &PruneMask,
    evaluator: &Evaluator,
    mode: CostMode,
) -> Result<CostTable> {
    let moves: Vec<Move> = live.iter().map(|&h| Move { key: h, heads: vec![h] }).collect();
    move_costs(&moves, pruned, evaluator, mode, &Fanout::Serial)
}

/// Cheapest entry, ties broken by head order. Negative costs are clamped to
/// zero in `clamped_cost`.
pub fn select_victim(costs: &CostTable) -> Option<Victim> {
    costs
        .entries
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.head.cmp(&b.head)))
        .map(|e| Victim {
            head: e.head,
            post_accuracy: e.post_accuracy,
            raw_cost: e.cost,
            clamped_cost: e.cost.max(0.0),
        })
}

/// Walks `survivors` (ascending cost) admitting each head's estimated
/// contribution into a running total; the first head that would push the
/// total past `remaining_budget` is eliminated together with every costlier
/// head.
pub fn eliminate_candidates(
    survivors: &[(HeadIndex, f64)],
    victim_clamped_cost: f64,
    remaining_budget: f64,
) -> Vec<EliminationRecord> {
    let mut total = 0.0;
    let mut cut = false;
    survivors
        .iter()
        .map(|&(head, cost)| {
            let estimate = cost.max(0.0);
            let contribution = estimate - victim_clamped_cost;
            if !cut && total + contribution <= remaining_budget {
                total += contribution;
                EliminationRecord {
                    head,
                    estimate,
                    contribution,
                    running_total: total,
                    outcome: Outcome::Kept,
                }
            } else {
                cut = true;
                EliminationRecord {
                    head,
                    estimate,
                    contribution,
                    running_total: total,
                    outcome: Outcome::Eliminated,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub mode: CostMode,
    /// Parallel candidate evaluations; 1 keeps everything on the caller's
    /// thread. Results are identical for any value.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: CostMode::Incremental,
            workers: 1,
        }
    }
}

impl From<CostMode> for SearchOptions {
    fn from(mode: CostMode) -> Self {
        SearchOptions { mode, workers: 1 }
    }
}

/// Runs A* pruning against `evaluator` with budget `budget` (percentage
/// points; `f64::INFINITY` for unbounded).
pub fn astar_prune(evaluator: &Evaluator, budget: f64, options: impl Into<SearchOptions>) -> Result<PruneSolution> {
    astar_prune_observed(evaluator, budget, options, |_| {})
}

/// Like [`astar_prune`], handing every iteration's cost table to `observe`.
pub fn astar_prune_observed(
    evaluator: &Evaluator,
    budget: f64,
    options: impl Into<SearchOptions>,
    observe: impl FnMut(&CostTable),
) -> Result<PruneSolution> {
    let moves = all_heads(evaluator.geometry())
        .into_iter()
        .map(|h| Move { key: h, heads: vec![h] })
        .collect();
    Search {
        strategy: Strategy::Astar,
        eliminate: true,
    }
    .run(evaluator, budget, options.into(), moves, observe)
}

/// The shared greedy loop behind A*, local and global pruning.
pub(crate) struct Search {
    pub strategy: Strategy,
    pub eliminate: bool,
}

struct State {
    live: Vec<Move>,
    pruned_mask: PruneMask,
    pruned: Vec<PrunedHead>,
    eliminated: Vec<EliminatedHead>,
    trace: Vec<TraceRow>,
    observed: BTreeMap<HeadIndex, f64>,
    ledger: BudgetLedger,
    accuracy: f64,
    candidates: u64,
}

impl Search {
    pub(crate) fn run(
        &self,
        evaluator: &Evaluator,
        budget: f64,
        options: SearchOptions,
        moves: Vec<Move>,
        mut observe: impl FnMut(&CostTable),
    ) -> Result<PruneSolution> {
        let ledger = BudgetLedger::new(budget)?;
        let fanout = Fanout::new(options.workers)?;
        let start = evaluator.counter();
        let cap = evaluator.geometry().total_heads() + 1;
        let mut st = State {
            live: moves,
            pruned_mask: PruneMask::empty(),
            pruned: Vec::new(),
            eliminated: Vec::new(),
            trace: Vec::new(),
            observed: BTreeMap::new(),
            ledger,
            accuracy: evaluator.baseline(),
            candidates: 0,
        };
        let mut iteration = 0;
        let stop = loop {
            if !(st.ledger.remaining() > 0.0) {
                break StopReason::BudgetExhausted;
            }
            if st.live.is_empty() {
                break StopReason::SearchSpaceEmpty;
            }
            iteration += 1;
            if iteration > cap {
                return Err(Error::Invariant(format!(
                    "search exceeded {cap} iterations without emptying the search space"
                )));
            }
            let before = evaluator.counter();
            let mut table = match move_costs(&st.live, &st.pruned_mask, evaluator, options.mode, &fanout) {
                Ok(t) => t,
                Err(e) => {
                    let message = e.to_string();
                    let partial = self.finish(evaluator, options.mode, start, st, StopReason::Aborted { message });
                    return Err(Error::Aborted {
                        source: Box::new(e),
                        partial: Box::new(partial),
                    });
                }
            };
            table.iteration = iteration;
            observe(&table);
            st.candidates += table.len() as u64;
            for e in &table.entries {
                for h in &self.heads_of(&st.live, e.head) {
                    st.observed.insert(*h, e.cost);
                }
            }
            let victim = select_victim(&table).expect("live set is non-empty");
            let spent = evaluator.counter().since(before);
            if !(victim.clamped_cost < st.ledger.remaining()) {
                break StopReason::OverBudget {
                    iteration,
                    candidate: self.heads_of(&st.live, victim.head),
                    raw_cost: victim.raw_cost,
                    clamped_cost: victim.clamped_cost,
                    evaluations: spent.computed,
                    candidates: table.len() as u64,
                };
            }

            st.ledger.charge(victim.clamped_cost)?;
            let pos = st
                .live
                .iter()
                .position(|m| m.key == victim.head)
                .expect("victim is live");
            let taken = st.live.remove(pos);
            for &h in &taken.heads {
                st.pruned_mask.insert(h);
                st.pruned.push(PrunedHead {
                    head: h,
                    iteration,
                    raw_cost: victim.raw_cost,
                    clamped_cost: victim.clamped_cost,
                });
            }
            st.accuracy = victim.post_accuracy;

            if self.eliminate && !st.live.is_empty() {
                let survivors: Vec<(HeadIndex, f64)> = table
                    .sorted_by_cost()
                    .into_iter()
                    .filter(|e| e.head != victim.head)
                    .map(|e| (e.head, e.cost))
                    .collect();
                let records = eliminate_candidates(&survivors, victim.clamped_cost, st.ledger.remaining());
                for r in records.iter().filter(|r| r.outcome == Outcome::Eliminated) {
                    let pos = st.live.iter().position(|m| m.key == r.head).expect("survivor is live");
                    for h in st.live.remove(pos).heads {
                        st.eliminated.push(EliminatedHead {
                            head: h,
                            iteration,
                            cost: table.get(r.head).expect("survivor has a cost").cost,
                        });
                    }
                }
            }

            let live_count = st.live.iter().map(|m| m.heads.len()).sum();
            if let Some(prev) = st.trace.last() {
                if live_count >= prev.live_count {
                    return Err(Error::Invariant(format!(
                        "search space did not shrink in iteration {iteration}"
                    )));
                }
            }
            st.trace.push(TraceRow {
                iteration,
                pruned: taken.heads,
                raw_cost: victim.raw_cost,
                clamped_cost: victim.clamped_cost,
                accuracy_after: victim.post_accuracy,
                charged_cumulative: st.ledger.charged(),
                live_count,
                evaluations: spent.computed,
                candidates: table.len() as u64,
            });
        };
        Ok(self.finish(evaluator, options.mode, start, st, stop))
    }

    fn heads_of(&self, live: &[Move], key: HeadIndex) -> Vec<HeadIndex> {
        live.iter()
            .find(|m| m.key == key)
            .map(|m| m.heads.clone())
            .unwrap_or_else(|| vec![key])
    }

    fn finish(
        &self,
        evaluator: &Evaluator,
        mode: CostMode,
        start: crate::oracle::EvalCounter,
        st: State,
        stop: StopReason,
    ) -> PruneSolution {
        let spent = evaluator.counter().since(start);
        PruneSolution {
            strategy: self.strategy,
            geometry: evaluator.geometry(),
            cost_mode: mode,
            baseline_accuracy: evaluator.baseline(),
            final_accuracy: st.accuracy,
            budget: st.ledger,
            pruned: st.pruned,
            eliminated: st.eliminated,
            trace: st.trace,
            observed_costs: st
                .observed
                .into_iter()
                .map(|(head, cost)| HeadCost { head, cost })
                .collect(),
            stop,
            evaluations: EvaluationStats {
                requested: spent.requested,
                computed: spent.computed,
                candidates: st.candidates,
            },
        }
    }
}
