//! Plot-ready CSV exports.

use std::collections::HashMap;
use std::io::Write;

use crate::baselines::DistributionSummary;
use crate::error::Result;
use crate::heads::{all_heads, HeadIndex};
use crate::solution::PruneSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadLabel {
    Pruned,
    Eliminated,
    Kept,
}

impl HeadLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeadLabel::Pruned => "pruned",
            HeadLabel::Eliminated => "eliminated",
            HeadLabel::Kept => "kept",
        }
    }
}

pub fn head_labels(solution: &PruneSolution) -> HashMap<HeadIndex, HeadLabel> {
    let mut labels: HashMap<HeadIndex, HeadLabel> = all_heads(solution.geometry)
        .into_iter()
        .map(|h| (h, HeadLabel::Kept))
        .collect();
    for e in &solution.eliminated {
        labels.insert(e.head, HeadLabel::Eliminated);
    }
    for p in &solution.pruned {
        labels.insert(p.head, HeadLabel::Pruned);
    }
    labels
}

fn join_heads(heads: &[HeadIndex]) -> String {
    heads
        .iter()
        .map(|h| format!("{}:{}", h.layer, h.head))
        .collect::<Vec<_>>()
        .join(";")
}

/// `layers` lines of `heads_per_layer` comma-separated `pruned`/`kept`
/// labels, no header.
pub fn write_mask_matrix<W: Write>(solution: &PruneSolution, out: W) -> Result<()> {
    let mask = solution.mask();
    let g = solution.geometry;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for layer in 0..g.layers() {
        let row: Vec<&str> = (0..g.heads_per_layer())
            .map(|head| {
                if mask.contains(HeadIndex::new(layer, head)) {
                    "pruned"
                } else {
                    "kept"
                }
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Every head with its last observed cost and final label, by ascending
/// cost. Heads never evaluated come last with an empty cost.
pub fn write_sorted_costs<W: Write>(solution: &PruneSolution, out: W) -> Result<()> {
    let labels = head_labels(solution);
    let observed: HashMap<HeadIndex, f64> = solution.observed_costs.iter().map(|c| (c.head, c.cost)).collect();
    let mut rows: Vec<(HeadIndex, Option<f64>)> = all_heads(solution.geometry)
        .into_iter()
        .map(|h| (h, observed.get(&h).copied()))
        .collect();
    rows.sort_by(|a, b| match (a.1, b.1) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.0.cmp(&b.0)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["layer", "head", "cost", "label"])?;
    for (h, cost) in rows {
        w.write_record([
            h.layer.to_string(),
            h.head.to_string(),
            cost.map(|c| c.to_string()).unwrap_or_default(),
            labels[&h].as_str().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per committed move: accuracy, cumulative budget and search-space
/// size per iteration.
pub fn write_trace<W: Write>(solution: &PruneSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "pruned",
        "raw_cost",
        "clamped_cost",
        "accuracy",
        "budget_used",
        "live_count",
        "evaluations",
        "candidates",
    ])?;
    for r in &solution.trace {
        w.write_record([
            r.iteration.to_string(),
            join_heads(&r.pruned),
            r.raw_cost.to_string(),
            r.clamped_cost.to_string(),
            r.accuracy_after.to_string(),
            r.charged_cumulative.to_string(),
            r.live_count.to_string(),
            r.evaluations.to_string(),
            r.candidates.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per random trial.
pub fn write_trials<W: Write>(summary: &DistributionSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "pruned_count", "budget_used", "final_accuracy"])?;
    for r in &summary.results {
        w.write_record([
            r.seed.to_string(),
            r.pruned_count.to_string(),
            r.budget_used.to_string(),
            r.final_accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Pruned-count histogram: bin, count and empirical probability.
pub fn write_histogram<W: Write>(summary: &DistributionSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pruned_count", "count", "probability"])?;
    for (k, &c) in summary.pruned_histogram.iter().enumerate() {
        w.write_record([
            k.to_string(),
            c.to_string(),
            (c as f64 / summary.trials as f64).to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Budget-used histogram in fixed-width bins.
pub fn write_budget_histogram<W: Write>(summary: &DistributionSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lower", "upper", "count"])?;
    for b in &summary.budget_histogram {
        w.write_record([b.lower.to_string(), b.upper.to_string(), b.count.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
