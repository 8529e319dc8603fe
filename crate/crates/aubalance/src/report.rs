//! Before/after distribution reports: per-class totals as rows, a record
//! totals footer, and an imbalance/objective metrics block.

use std::io::Write;

use crate::error::Result;
use crate::model::{BalancingProblem, BalancingSolution};
use crate::objective::{class_totals, imbalance_term, objective, ClassTotals};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub name: String,
    pub before: u64,
    pub after: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub classes: Vec<ClassRow>,
    pub total_before: u64,
    pub total_after: u64,
    pub imbalance_before: f64,
    pub imbalance_after: f64,
    /// Growth-ratio variance at the solution, when one was computed.
    pub variance_term: Option<f64>,
    pub objective_before: Option<f64>,
    pub objective_after: Option<f64>,
    pub growth_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl DistributionReport {
    /// Report for a solved problem; metrics come from the objective at
    /// the base counts and at the solution.
    pub fn from_solution(
        class_names: &[String],
        problem: &BalancingProblem,
        solution: &BalancingSolution,
    ) -> Result<Self> {
        let before = class_totals(problem, problem.base_counts())?;
        let after = class_totals(problem, &solution.counts)?;
        let base = objective(problem, problem.base_counts())?;
        let classes = class_names
            .iter()
            .zip(before.totals().iter().zip(after.totals()))
            .map(|(name, (&b, &a))| ClassRow {
                name: name.clone(),
                before: b,
                after: a,
            })
            .collect();
        let total_before: u64 = problem.base_counts().iter().sum();
        let total_after: u64 = solution.counts.iter().sum();
        Ok(Self {
            classes,
            total_before,
            total_after,
            imbalance_before: base.imbalance_term,
            imbalance_after: solution.imbalance_term,
            variance_term: Some(solution.variance_term),
            objective_before: Some(base.objective_value),
            objective_after: Some(solution.objective_value),
            growth_ratio: total_after as f64 / total_before as f64,
        })
    }

    /// Report over given per-class total vectors, e.g. published
    /// distribution columns that did not come from a solver run.
    pub fn from_totals(
        class_names: &[String],
        before: &[u64],
        after: &[u64],
        total_before: u64,
        total_after: u64,
    ) -> Self {
        let classes = class_names
            .iter()
            .zip(before.iter().zip(after))
            .map(|(name, (&b, &a))| ClassRow {
                name: name.clone(),
                before: b,
                after: a,
            })
            .collect();
        Self {
            classes,
            total_before,
            total_after,
            imbalance_before: imbalance_term(&ClassTotals::new(before.to_vec())),
            imbalance_after: imbalance_term(&ClassTotals::new(after.to_vec())),
            variance_term: None,
            objective_before: None,
            objective_after: None,
            growth_ratio: total_after as f64 / total_before as f64,
        }
    }
}

pub fn write_report<W: Write>(
    report: &DistributionReport,
    w: &mut W,
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Text => write_text(report, w),
        ReportFormat::Csv => write_csv(report, w),
    }
}

fn write_text<W: Write>(report: &DistributionReport, w: &mut W) -> Result<()> {
    let name_width = report
        .classes
        .iter()
        .map(|c| c.name.len())
        .chain(["total".len()])
        .max()
        .unwrap_or(5);
    writeln!(w, "{:<name_width$}  {:>12}  {:>12}", "class", "before", "after")?;
    for row in &report.classes {
        writeln!(
            w,
            "{:<name_width$}  {:>12}  {:>12}",
            row.name, row.before, row.after
        )?;
    }
    writeln!(
        w,
        "{:<name_width$}  {:>12}  {:>12}",
        "total", report.total_before, report.total_after
    )?;
    writeln!(w)?;
    writeln!(w, "metrics:")?;
    writeln!(w, "  imbalance before   {}", report.imbalance_before)?;
    writeln!(w, "  imbalance after    {}", report.imbalance_after)?;
    if let Some(v) = report.variance_term {
        writeln!(w, "  variance term      {v}")?;
    }
    if let Some(v) = report.objective_before {
        writeln!(w, "  objective before   {v}")?;
    }
    if let Some(v) = report.objective_after {
        writeln!(w, "  objective after    {v}")?;
    }
    writeln!(w, "  growth ratio       {}", report.growth_ratio)?;
    Ok(())
}

fn write_csv<W: Write>(report: &DistributionReport, w: &mut W) -> Result<()> {
    writeln!(w, "class,before,after")?;
    for row in &report.classes {
        writeln!(w, "{},{},{}", row.name, row.before, row.after)?;
    }
    writeln!(w, "__total__,{},{}", report.total_before, report.total_after)?;
    writeln!(w, "metric,value")?;
    writeln!(w, "imbalance_before,{}", report.imbalance_before)?;
    writeln!(w, "imbalance_after,{}", report.imbalance_after)?;
    if let Some(v) = report.variance_term {
        writeln!(w, "variance_term,{v}")?;
    }
    if let Some(v) = report.objective_before {
        writeln!(w, "objective_before,{v}")?;
    }
    if let Some(v) = report.objective_after {
        writeln!(w, "objective_after,{v}")?;
    }
    writeln!(w, "growth_ratio,{}", report.growth_ratio)?;
    Ok(())
}
