//! Comparison strategies: local (one head per round, no elimination),
//! global (one head column per round) and random-order pruning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::astar::{Fanout, Move, Search, SearchOptions};
use crate::error::{Error, Result};
use crate::heads::{all_heads, HeadIndex, PruneMask};
use crate::oracle::Evaluator;
use crate::solution::{PruneSolution, Strategy};

/// Re-evaluates every remaining head each round and prunes the cheapest,
/// with the same clamping, tie-break and ledger as A* but no elimination.
/// An unbounded run over `m` heads issues `m(m+1)/2` candidate evaluations.
pub fn local_prune(evaluator: &Evaluator, budget: f64, options: impl Into<SearchOptions>) -> Result<PruneSolution> {
    let moves = all_heads(evaluator.geometry())
        .into_iter()
        .map(|h| Move { key: h, heads: vec![h] })
        .collect();
    Search {
        strategy: Strategy::Local,
        eliminate: false,
    }
    .run(evaluator, budget, options.into(), moves, |_| {})
}

/// Prunes head `j` from every layer at once. Each round evaluates the
/// remaining columns; a column counts as one move and one ledger charge.
pub fn global_prune(evaluator: &Evaluator, budget: f64, options: impl Into<SearchOptions>) -> Result<PruneSolution> {
    let g = evaluator.geometry();
    let moves = (0..g.heads_per_layer())
        .map(|j| Move {
            key: HeadIndex::new(0, j),
            heads: (0..g.layers()).map(|i| HeadIndex::new(i, j)).collect(),
        })
        .collect();
    Search {
        strategy: Strategy::Global,
        eliminate: false,
    }
    .run(evaluator, budget, options.into(), moves, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub pruned_count: usize,
    /// Baseline minus final accuracy; negative when the prefix helped.
    pub budget_used: f64,
    pub final_accuracy: f64,
}

/// The head order a trial with `seed` visits.
pub fn random_order(evaluator: &Evaluator, seed: u64) -> Vec<HeadIndex> {
    let mut order = all_heads(evaluator.geometry());
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Prunes heads in a seeded random order and stops right before the first
/// head that would take the total drop from baseline above `budget`.
pub fn random_trial(evaluator: &Evaluator, budget: f64, seed: u64) -> Result<TrialResult> {
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::Config(vec![format!(
            "budget must be non-negative, got {budget}"
        )]));
    }
    let baseline = evaluator.baseline();
    let mut mask = PruneMask::empty();
    let mut accuracy = baseline;
    for head in random_order(evaluator, seed) {
        let next = mask.with(head);
        let a = evaluator.evaluate(&next)?;
        if baseline - a > budget {
            break;
        }
        mask = next;
        accuracy = a;
    }
    Ok(TrialResult {
        seed,
        pruned_count: mask.len(),
        budget_used: baseline - accuracy,
        final_accuracy: accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub budget: f64,
    pub base_seed: u64,
    pub trials: usize,
    pub total_heads: usize,
    /// `pruned_histogram[k]` counts trials that pruned exactly `k` heads.
    pub pruned_histogram: Vec<usize>,
    pub pruned_min: usize,
    pub pruned_median: f64,
    pub pruned_max: usize,
    /// Nearest-rank 95th percentile.
    pub pruned_p95: usize,
    pub budget_bin_width: f64,
    pub budget_histogram: Vec<HistogramBin>,
    pub results: Vec<TrialResult>,
}

pub const BUDGET_BIN_WIDTH: f64 = 0.1;

impl DistributionSummary {
    pub fn from_results(budget: f64, base_seed: u64, total_heads: usize, results: Vec<TrialResult>) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::Config(vec!["trials must be at least 1".into()]));
        }
        let n = results.len();
        let mut counts: Vec<usize> = results.iter().map(|r| r.pruned_count).collect();
        counts.sort_unstable();
        let mut pruned_histogram = vec![0; total_heads + 1];
        for &c in &counts {
            pruned_histogram[c] += 1;
        }
        let pruned_median = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        let rank = (0.95 * n as f64).ceil() as usize;
        let pruned_p95 = counts[rank.clamp(1, n) - 1];

        let bin = |u: f64| (u / BUDGET_BIN_WIDTH).floor() as i64;
        let lo = results.iter().map(|r| bin(r.budget_used)).min().unwrap();
        let hi = results.iter().map(|r| bin(r.budget_used)).max().unwrap();
        let mut budget_histogram: Vec<HistogramBin> = (lo..=hi)
            .map(|i| HistogramBin {
                lower: i as f64 * BUDGET_BIN_WIDTH,
                upper: (i + 1) as f64 * BUDGET_BIN_WIDTH,
                count: 0,
            })
            .collect();
        for r in &results {
            budget_histogram[(bin(r.budget_used) - lo) as usize].count += 1;
        }

        Ok(DistributionSummary {
            budget,
            base_seed,
            trials: n,
            total_heads,
            pruned_histogram,
            pruned_min: counts[0],
            pruned_median,
            pruned_max: counts[n - 1],
            pruned_p95,
            budget_bin_width: BUDGET_BIN_WIDTH,
            budget_histogram,
            results,
        })
    }

    /// Most frequent pruned count (smallest on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (k, &c) in self.pruned_histogram.iter().enumerate() {
            if c > self.pruned_histogram[best] {
                best = k;
            }
        }
        best
    }
}

/// Runs `trials` random trials with seeds `base_seed, base_seed + 1, ...`
/// and aggregates them. Trials run on `workers` threads sharing the
/// evaluator's cache; the summary does not depend on the worker count.
pub fn random_experiment(
    evaluator: &Evaluator,
    budget: f64,
    trials: usize,
    base_seed: u64,
    workers: usize,
) -> Result<DistributionSummary> {
    if trials == 0 {
        return Err(Error::Config(vec!["trials must be at least 1".into()]));
    }
    let seeds: Vec<u64> = (0..trials as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let results = Fanout::new(workers)?.map(&seeds, |&s| random_trial(evaluator, budget, s))?;
    DistributionSummary::from_results(budget, base_seed, evaluator.geometry().total_heads(), results)
}
