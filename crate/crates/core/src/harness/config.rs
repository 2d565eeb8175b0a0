//! Run configuration: one JSON document, overridable from the command line.
//!
//! ```json
//! {
//!   "strategy": "astar",
//!   "budget": 1.0,
//!   "cost_mode": "incremental",
//!   "seed": 0,
//!   "trials": 100,
//!   "workers": 1,
//!   "out": "runs/b1",
//!   "oracle": { "additive": { "baseline": 92.46, "heavy_tailed": { "geometry": [12, 12], "nonpositive": 58, "seed": 1 } } },
//!   "model_dims": { "hidden": 768, "heads": 12, "total_params": 110000000 }
//! }
//! ```
//!
//! Precedence is command-line flags, then the file, then defaults. Relative
//! paths inside the file resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::ModelDims;
use crate::astar::CostMode;
use crate::error::{Error, Result};
use crate::heads::Geometry;
use crate::oracle::{
    heavy_tailed_weights, AdditiveOracle, AdditiveSpec, Evaluator, ExternalOracle, SupermodularOracle,
    SupermodularSpec, TableOracle,
};
use crate::solution::Strategy;

/// Config document as written by the user; every field optional so that
/// validation can report all problems at once.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: Option<Strategy>,
    /// `null` or absent means unbounded for the greedy strategies.
    pub budget: Option<f64>,
    pub cost_mode: Option<CostMode>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub geometry: Option<[usize; 2]>,
    #[serde(default)]
    pub oracle: OracleSection,
    pub model_dims: Option<ModelDims>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub additive: Option<AdditiveConfig>,
    pub supermodular: Option<SupermodularSpec>,
    pub table: Option<TableConfig>,
    pub external: Option<ExternalConfig>,
}

/// Additive oracle with either explicit weights or generated heavy-tailed
/// ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveConfig {
    pub baseline: f64,
    pub weights: Option<Vec<Vec<f64>>>,
    pub heavy_tailed: Option<HeavyTailed>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTailed {
    pub geometry: [usize; 2],
    pub nonpositive: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleSpec {
    Additive(AdditiveSpec),
    Supermodular(SupermodularSpec),
    Table { path: PathBuf },
    External { command: Vec<String> },
}

impl OracleSpec {
    pub fn build(&self) -> Result<Evaluator> {
        Ok(match self {
            OracleSpec::Additive(s) => Evaluator::new(AdditiveOracle::new(s.clone())?),
            OracleSpec::Supermodular(s) => Evaluator::new(SupermodularOracle::new(s.clone())?),
            OracleSpec::Table { path } => Evaluator::new(TableOracle::load(path)?),
            OracleSpec::External { command } => Evaluator::new(ExternalOracle::spawn(command)?),
        })
    }

    /// Content hash. Table oracles hash the file contents, not the path.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        match self {
            OracleSpec::Table { path } => {
                h.update(b"table\0");
                h.update(std::fs::read(path).map_err(|e| Error::io(path, e))?);
            }
            other => h.update(serde_json::to_vec(other)?),
        }
        Ok(hex::encode(h.finalize()))
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub strategy: Strategy,
    /// Infinite when unbounded.
    #[serde(with = "unbounded_as_null")]
    pub budget: f64,
    pub cost_mode: CostMode,
    pub seed: u64,
    pub trials: usize,
    pub workers: usize,
    pub out: PathBuf,
    pub geometry: Option<Geometry>,
    pub oracle: OracleSpec,
    pub model_dims: Option<ModelDims>,
}

mod unbounded_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub const DEFAULT_TRIALS: usize = 100;

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategy: Option<Strategy>,
    pub budget: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cost_mode: Option<CostMode>,
    pub table: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        let mut cfg: ConfigFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(out) = self.out.as_mut() {
            fix(out);
        }
        if let Some(t) = self.oracle.table.as_mut() {
            fix(&mut t.path);
        }
    }

    /// Applies `overrides` and checks every field, collecting all violations.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<RunConfig> {
        if let Some(s) = overrides.strategy {
            self.strategy = Some(s);
        }
        if let Some(b) = overrides.budget {
            self.budget = Some(b);
        }
        if let Some(s) = overrides.seed {
            self.seed = Some(s);
        }
        if let Some(w) = overrides.workers {
            self.workers = Some(w);
        }
        if let Some(o) = &overrides.out {
            self.out = Some(o.clone());
        }
        if let Some(m) = overrides.cost_mode {
            self.cost_mode = Some(m);
        }
        if let Some(t) = &overrides.table {
            self.oracle = OracleSection {
                table: Some(TableConfig { path: t.clone() }),
                ..OracleSection::default()
            };
        }

        let mut errors = Vec::new();
        let strategy = self.strategy.unwrap_or_else(|| {
            errors.push("strategy: missing (give it in the config or on the command line)".to_string());
            Strategy::Astar
        });
        let budget = self.budget.unwrap_or(f64::INFINITY);
        if budget.is_nan() || budget < 0.0 {
            errors.push(format!("budget: must be non-negative, got {budget}"));
        }
        if strategy == Strategy::Random && !budget.is_finite() {
            errors.push("budget: random trials need a finite budget".to_string());
        }
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            errors.push("trials: must be at least 1".to_string());
        }
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            errors.push("workers: must be at least 1".to_string());
        }
        let out = self.out.unwrap_or_else(|| {
            errors.push("out: missing output directory".to_string());
            PathBuf::new()
        });
        let geometry = match self.geometry {
            Some([l, n]) => match Geometry::new(l, n) {
                Ok(g) => Some(g),
                Err(e) => {
                    errors.push(format!("geometry: {e}"));
                    None
                }
            },
            None => None,
        };
        if let Some(d) = &self.model_dims {
            if let Err(Error::Config(mut v)) = d.params_per_head() {
                errors.append(&mut v);
            }
            if let Some(g) = geometry {
                if d.heads != g.heads_per_layer() as u64 {
                    errors.push(format!(
                        "model_dims: {} heads per layer but geometry has {}",
                        d.heads,
                        g.heads_per_layer()
                    ));
                }
            }
        }
        let oracle = resolve_oracle(self.oracle, &mut errors);

        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(RunConfig {
            strategy,
            budget,
            cost_mode: self.cost_mode.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
            trials,
            workers,
            out,
            geometry,
            oracle: oracle.expect("errors are empty"),
            model_dims: self.model_dims,
        })
    }
}

fn resolve_oracle(section: OracleSection, errors: &mut Vec<String>) -> Option<OracleSpec> {
    let present: Vec<&str> = [
        ("additive", section.additive.is_some()),
        ("supermodular", section.supermodular.is_some()),
        ("table", section.table.is_some()),
        ("external", section.external.is_some()),
    ]
    .iter()
    .filter(|(_, p)| *p)
    .map(|(n, _)| *n)
    .collect();
    if present.len() != 1 {
        errors.push(if present.is_empty() {
            "oracle: exactly one of additive, supermodular, table, external is required".to_string()
        } else {
            format!("oracle: exactly one oracle allowed, found {}", present.join(" and "))
        });
        return None;
    }
    if let Some(a) = section.additive {
        let weights = match (a.weights, a.heavy_tailed) {
            (Some(w), None) => w,
            (None, Some(h)) => match Geometry::new(h.geometry[0], h.geometry[1])
                .and_then(|g| heavy_tailed_weights(g, h.nonpositive, h.seed))
            {
                Ok(w) => w,
                Err(e) => {
                    errors.push(format!("oracle.additive.heavy_tailed: {e}"));
                    return None;
                }
            },
            _ => {
                errors.push("oracle.additive: give exactly one of weights, heavy_tailed".to_string());
                return None;
            }
        };
        return Some(OracleSpec::Additive(AdditiveSpec {
            baseline: a.baseline,
            weights,
            noise_sigma: a.noise_sigma,
            seed: a.seed,
        }));
    }
    if let Some(s) = section.supermodular {
        return Some(OracleSpec::Supermodular(s));
    }
    if let Some(t) = section.table {
        return Some(OracleSpec::Table { path: t.path });
    }
    let e = section.external.expect("one oracle is present");
    if e.command.is_empty() {
        errors.push("oracle.external.command: must name a program".to_string());
        return None;
    }
    Some(OracleSpec::External { command: e.command })
}

impl RunConfig {
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ConfigFile {
        serde_json::from_str(text).unwrap()
    }

    const ADDITIVE: &str = r#"{"additive":{"baseline":90,"weights":[[-0.5,0.2],[0.4,1.0]]}}"#;

    #[test]
    fn minimal_config_resolves() {
        let c = parse(&format!(
            r#"{{"strategy":"astar","budget":0.7,"out":"x","oracle":{ADDITIVE}}}"#
        ))
        .resolve(&Overrides::default())
        .unwrap();
        assert_eq!(c.strategy, Strategy::Astar);
        assert_eq!(c.budget, 0.7);
        assert_eq!(c.cost_mode, CostMode::Incremental);
        assert_eq!(c.trials, 100);
        assert_eq!(c.workers, 1);
    }

    #[test]
    fn flags_override_file() {
        let o = Overrides {
            budget: Some(2.0),
            strategy: Some(Strategy::Local),
            seed: Some(9),
            ..Overrides::default()
        };
        let c = parse(&format!(
            r#"{{"strategy":"astar","budget":0.7,"seed":1,"out":"x","oracle":{ADDITIVE}}}"#
        ))
        .resolve(&o)
        .unwrap();
        assert_eq!((c.strategy, c.budget, c.seed), (Strategy::Local, 2.0, 9));
    }

    #[test]
    fn two_oracles_rejected() {
        let text = r#"{"strategy":"astar","budget":1,"out":"x","oracle":{
            "additive":{"baseline":90,"weights":[[0.1]]},
            "table":{"path":"t.json"}}}"#;
        match parse(text).resolve(&Overrides::default()) {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("additive and table"), "{v:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = r#"{"strategy":"random","budget":-1,"trials":0,"workers":0,"oracle":{}}"#;
        match parse(text).resolve(&Overrides::default()) {
            Err(Error::Config(v)) => {
                for field in ["budget", "trials", "workers", "out", "oracle"] {
                    assert!(v.iter().any(|m| m.starts_with(field)), "{field} missing from {v:?}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"budgte":1}"#).is_err());
    }

    #[test]
    fn heavy_tailed_generator_expands() {
        let text = r#"{"strategy":"astar","budget":1,"out":"x","oracle":{"additive":{"baseline":92.46,
            "heavy_tailed":{"geometry":[12,12],"nonpositive":58,"seed":1}}}}"#;
        let c = parse(text).resolve(&Overrides::default()).unwrap();
        match c.oracle {
            OracleSpec::Additive(s) => {
                assert_eq!(s.weights.len(), 12);
                assert_eq!(s.weights.iter().flatten().filter(|&&w| w <= 0.0).count(), 58);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_override_replaces_oracle() {
        let o = Overrides {
            table: Some(PathBuf::from("rec.json")),
            ..Overrides::default()
        };
        let c = parse(&format!(
            r#"{{"strategy":"astar","budget":1,"out":"x","oracle":{ADDITIVE}}}"#
        ))
        .resolve(&o)
        .unwrap();
        assert_eq!(
            c.oracle,
            OracleSpec::Table {
                path: "rec.json".into()
            }
        );
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let base = parse(&format!(
            r#"{{"strategy":"astar","budget":1,"out":"x","oracle":{ADDITIVE}}}"#
        ));
        let a = base.clone().resolve(&Overrides::default()).unwrap();
        let b = base.clone().resolve(&Overrides::default()).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = base
            .resolve(&Overrides {
                budget: Some(2.0),
                ..Overrides::default()
            })
            .unwrap();
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }
}
