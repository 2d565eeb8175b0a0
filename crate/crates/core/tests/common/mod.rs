#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Command line launching the mock evaluator with the given JSON config.
pub fn mock_command(dir: &Path, config: &serde_json::Value) -> Vec<String> {
    let path = dir.join("mock.json");
    std::fs::write(&path, serde_json::to_string(config).unwrap()).unwrap();
    vec![
        "python3".into(),
        fixture("mock_evaluator.py").display().to_string(),
        path.display().to_string(),
    ]
}

/// Straightforward greedy reference: at every step evaluate each remaining
/// head on top of the current set, take the cheapest (ties to the smallest
/// index), stop once its clamped cost no longer fits. Written against a
/// plain accuracy closure so it shares nothing with the library's search.
pub struct GreedyResult {
    pub pruned: Vec<(usize, usize)>,
    pub distinct_masks: usize,
}

pub fn reference_greedy(
    layers: usize,
    heads: usize,
    budget: f64,
    accuracy: impl Fn(&[(usize, usize)]) -> f64,
) -> GreedyResult {
    let mut seen = std::collections::BTreeSet::new();
    let mut eval = |set: &[(usize, usize)]| {
        let mut key = set.to_vec();
        key.sort();
        seen.insert(key.clone());
        accuracy(&key)
    };
    let mut pruned: Vec<(usize, usize)> = Vec::new();
    let mut charged = 0.0;
    let mut current = eval(&[]);
    loop {
        let remaining = budget - charged;
        if remaining <= 0.0 {
            break;
        }
        let mut best: Option<((usize, usize), f64, f64)> = None;
        for l in 0..layers {
            for h in 0..heads {
                if pruned.contains(&(l, h)) {
                    continue;
                }
                let mut s = pruned.clone();
                s.push((l, h));
                let acc = eval(&s);
                let cost = current - acc;
                if best.is_none_or(|b| cost < b.1) {
                    best = Some(((l, h), cost, acc));
                }
            }
        }
        let Some((head, cost, acc)) = best else { break };
        let clamped = cost.max(0.0);
        if clamped >= remaining {
            break;
        }
        charged += clamped;
        pruned.push(head);
        current = acc;
    }
    GreedyResult {
        pruned,
        distinct_masks: seen.len(),
    }
}
