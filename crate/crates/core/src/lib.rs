//! Budget-constrained attention-head pruning.
//!
//! A pruning run treats an accuracy evaluator as a black box: every
//! candidate set of pruned heads costs one (memoized) evaluation. The
//! [`astar`] module holds the heuristic search that eliminates heads whose
//! estimated cost can no longer fit in the remaining budget; [`baselines`]
//! holds the local, global and random strategies it is compared against,
//! and [`harness`] wires everything to configuration files and exports.

pub mod astar;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod heads;
pub mod oracle;
pub mod solution;

pub use astar::{astar_prune, BudgetLedger, CostMode, CostTable};
pub use error::{Error, Result};
pub use heads::{all_heads, Geometry, HeadIndex, PruneMask};
pub use oracle::{Evaluator, Oracle, OracleInfo};
pub use solution::{PruneSolution, Strategy, TraceRow};
