//! Multi-label dataset balancing planner.
//!
//! Given a table of records with binary class labels, this crate groups
//! records by their unique label combination, searches for per-group
//! replication counts that minimize per-class imbalance plus a
//! growth-variance penalty inside the box [n0, floor(max_factor * n0)],
//! and expands the result into a deterministic per-record augmentation
//! manifest with before/after distribution reports.

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod objective;
pub mod plan;
pub mod report;
pub mod seeds;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    group_records, BalancingProblem, BalancingSolution, LabelCombination, ObjectiveConfig,
    RecordTable,
};
pub use objective::{class_totals, growth_variance_term, imbalance_term, objective, ClassTotals};
pub use plan::{expand_plan, verify_plan, AugmentationPlan, AugmentationRecipe};
pub use report::{write_report, DistributionReport, ReportFormat};
pub use solver::{
    annealing_solve, brute_force_solve, feasible_box, local_search_solve, solve, SolverMode,
    SolverSettings,
};
