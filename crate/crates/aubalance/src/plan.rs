//! Expansion of a group-level solution into a per-record augmentation
//! manifest. Extra copies spread round-robin within each group so no
//! single record soaks up the augmentation budget, and recipes cycle
//! through a per-group seeded shuffle of the op-subset pool.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{group_records, BalancingProblem, BalancingSolution, RecordTable};
use crate::objective::class_totals;
use crate::seeds::derive_seed;

/// The augmentation operations available to the executing tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AugOp {
    Flip,
    GaussianBlur,
    LinearContrast,
    AdditiveGaussianNoise,
    Multiply,
    PerspectiveTransform,
}

pub const ALL_OPS: [AugOp; 6] = [
    AugOp::Flip,
    AugOp::GaussianBlur,
    AugOp::LinearContrast,
    AugOp::AdditiveGaussianNoise,
    AugOp::Multiply,
    AugOp::PerspectiveTransform,
];

impl AugOp {
    pub fn name(self) -> &'static str {
        match self {
            AugOp::Flip => "flip",
            AugOp::GaussianBlur => "gaussian_blur",
            AugOp::LinearContrast => "linear_contrast",
            AugOp::AdditiveGaussianNoise => "additive_gaussian_noise",
            AugOp::Multiply => "multiply",
            AugOp::PerspectiveTransform => "perspective_transform",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ALL_OPS
            .into_iter()
            .find(|op| op.name() == name)
            .ok_or_else(|| Error::Format(format!("unknown augmentation op '{name}'")))
    }
}

/// A non-empty ordered subset of ops plus a variant index separating
/// repeated recipes on the same record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentationRecipe {
    pub ops: Vec<AugOp>,
    pub variant_index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanEntry {
    pub record_id: String,
    /// 1-based index of this extra copy of the record.
    pub copy_index: u64,
    pub recipe: AugmentationRecipe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPlan {
    pub entries: Vec<PlanEntry>,
    pub solution: BalancingSolution,
    pub seed: u64,
}

/// All 63 non-empty op subsets, ordered by size and then by position in
/// the fixed op order. Stable across versions.
pub fn op_subsets() -> Vec<Vec<AugOp>> {
    let mut subsets: Vec<Vec<AugOp>> = (1u32..64)
        .map(|mask| {
            (0..6)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ALL_OPS[i])
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Distribute the extra copies of each group over its records and assign
/// recipes. Deterministic for a fixed (table, solution, seed).
pub fn expand_plan(
    table: &RecordTable,
    problem: &BalancingProblem,
    solution: &BalancingSolution,
    seed: u64,
) -> Result<AugmentationPlan> {
    let regrouped = group_records(table, *problem.config())?;
    if regrouped.combinations() != problem.combinations()
        || regrouped.base_counts() != problem.base_counts()
    {
        return Err(Error::Consistency(
            "record table does not reproduce the problem's groups".into(),
        ));
    }
    if solution.counts.len() != problem.group_count() {
        return Err(Error::Consistency(
            "solution count vector does not match the problem".into(),
        ));
    }
    for (r, (&n, &n0)) in solution.counts.iter().zip(problem.base_counts()).enumerate() {
        if n < n0 {
            return Err(Error::Consistency(format!(
                "solution counts[{r}] = {n} below base count {n0}"
            )));
        }
    }

    // Sorted record ids per group, keyed by position in the problem's
    // lexicographic group order.
    let group_index: HashMap<&[u8], usize> = problem
        .combinations()
        .iter()
        .enumerate()
        .map(|(r, combo)| (combo.bits(), r))
        .collect();
    let mut members: Vec<Vec<&str>> = vec![Vec::new(); problem.group_count()];
    for (id, labels) in table.rows() {
        members[group_index[labels.bits()]].push(id);
    }
    for ids in &mut members {
        ids.sort_unstable();
    }

    let pool = op_subsets();
    let mut entries = Vec::new();
    for (r, ids) in members.iter().enumerate() {
        let extra = solution.counts[r] - problem.base_counts()[r];
        if extra == 0 {
            continue;
        }
        let mut shuffled = pool.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("plan-group-{r}")));
        shuffled.shuffle(&mut rng);
        let mut variant_seen: HashMap<(usize, usize), u32> = HashMap::new();
        for j in 0..extra {
            let slot = (j % ids.len() as u64) as usize;
            let copy_index = j / ids.len() as u64 + 1;
            let subset_idx = (j % shuffled.len() as u64) as usize;
            let variant = variant_seen.entry((slot, subset_idx)).or_insert(0);
            entries.push(PlanEntry {
                record_id: ids[slot].to_string(),
                copy_index,
                recipe: AugmentationRecipe {
                    ops: shuffled[subset_idx].clone(),
                    variant_index: *variant,
                },
            });
            *variant += 1;
        }
    }
    entries.sort_by(|a, b| (&a.record_id, a.copy_index).cmp(&(&b.record_id, b.copy_index)));
    Ok(AugmentationPlan {
        entries,
        solution: solution.clone(),
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name,
            passed,
            detail,
        });
    }
}

/// Recount the manifest against the table and problem. Never fails;
/// every violated invariant becomes a failing report line.
pub fn verify_plan(
    plan: &AugmentationPlan,
    table: &RecordTable,
    problem: &BalancingProblem,
) -> VerificationReport {
    let mut report = VerificationReport::default();

    let label_of: HashMap<&str, &[u8]> = table
        .rows()
        .iter()
        .map(|(id, labels)| (id.as_str(), labels.bits()))
        .collect();
    let group_index: HashMap<&[u8], usize> = problem
        .combinations()
        .iter()
        .enumerate()
        .map(|(r, combo)| (combo.bits(), r))
        .collect();

    let mut unknown_records = 0usize;
    let mut group_extra = vec![0u64; problem.group_count()];
    let mut per_record_extra: HashMap<&str, u64> = HashMap::new();
    let mut pair_seen = std::collections::HashSet::new();
    let mut duplicate_pairs = 0usize;
    for entry in &plan.entries {
        match label_of.get(entry.record_id.as_str()) {
            Some(bits) => {
                group_extra[group_index[bits]] += 1;
                *per_record_extra.entry(entry.record_id.as_str()).or_insert(0) += 1;
            }
            None => unknown_records += 1,
        }
        if !pair_seen.insert((entry.record_id.as_str(), entry.copy_index)) {
            duplicate_pairs += 1;
        }
    }
    report.push(
        "records-exist",
        unknown_records == 0,
        format!("{unknown_records} manifest entries reference unknown records"),
    );
    report.push(
        "copy-indices-unique",
        duplicate_pairs == 0,
        format!("{duplicate_pairs} duplicate (record_id, copy_index) pairs"),
    );

    let mut bad_groups = Vec::new();
    for (r, &extra) in group_extra.iter().enumerate() {
        let expected = plan.solution.counts[r].saturating_sub(problem.base_counts()[r]);
        if extra != expected {
            bad_groups.push(r);
        }
    }
    report.push(
        "group-counts",
        bad_groups.is_empty(),
        if bad_groups.is_empty() {
            "every group has exactly counts - base extra copies".into()
        } else {
            format!("groups with wrong extra-copy totals: {bad_groups:?}")
        },
    );

    // Even spread: within a group, per-record extra copies differ by <= 1.
    let mut uneven_groups = Vec::new();
    let mut group_members: Vec<Vec<&str>> = vec![Vec::new(); problem.group_count()];
    for (id, labels) in table.rows() {
        group_members[group_index[labels.bits()]].push(id);
    }
    for (r, ids) in group_members.iter().enumerate() {
        let copies: Vec<u64> = ids
            .iter()
            .map(|id| per_record_extra.get(*id).copied().unwrap_or(0))
            .collect();
        let min = copies.iter().min().copied().unwrap_or(0);
        let max = copies.iter().max().copied().unwrap_or(0);
        if max - min > 1 {
            uneven_groups.push(r);
        }
    }
    report.push(
        "even-spread",
        uneven_groups.is_empty(),
        if uneven_groups.is_empty() {
            "per-record extra copies differ by at most 1 in every group".into()
        } else {
            format!("groups with uneven spread: {uneven_groups:?}")
        },
    );

    // Implied per-class totals must equal the solution's class totals.
    let implied = {
        let mut totals = vec![0u64; problem.class_count()];
        for (_, labels) in table.rows() {
            for (c, &bit) in labels.bits().iter().enumerate() {
                totals[c] += bit as u64;
            }
        }
        for entry in &plan.entries {
            if let Some(bits) = label_of.get(entry.record_id.as_str()) {
                for (c, &bit) in bits.iter().enumerate() {
                    totals[c] += bit as u64;
                }
            }
        }
        totals
    };
    match class_totals(problem, &plan.solution.counts) {
        Ok(expected) => {
            let ok = implied == expected.totals();
            report.push(
                "class-totals",
                ok,
                format!("implied {implied:?} vs expected {:?}", expected.totals()),
            );
        }
        Err(e) => report.push("class-totals", false, format!("cannot recompute: {e}")),
    }

    report
}
