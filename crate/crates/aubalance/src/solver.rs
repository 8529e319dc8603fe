//! Integer count-vector solvers over the feasible box: an exhaustive
//! enumerator for tiny instances and seeded derivative-free searches for
//! realistic ones. All solvers are deterministic for a fixed
//! (problem, settings) pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BalancingProblem, BalancingSolution};
use crate::objective::{imbalance_term, population_variance, ClassTotals};
use crate::seeds::derive_seed;

const BRUTE_FORCE_GUARD: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    LocalSearch,
    Annealing,
    BruteForce,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub seed: u64,
    pub restarts: u32,
    /// Objective-evaluation budget per restart.
    pub max_iterations: u64,
    /// Strictly decreasing step sizes ending at 1. None derives powers of
    /// two from the largest per-group slack.
    pub step_schedule: Option<Vec<u64>>,
    pub mode: SolverMode,
    /// Optional cap on the total record count; moves that would exceed it
    /// are rejected.
    pub budget: Option<u64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            max_iterations: 10_000,
            step_schedule: None,
            mode: SolverMode::LocalSearch,
            budget: None,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be positive".into()));
        }
        if let Some(schedule) = &self.step_schedule {
            let decreasing = schedule.windows(2).all(|w| w[0] > w[1]);
            if schedule.is_empty() || !decreasing || *schedule.last().unwrap() != 1 {
                return Err(Error::Domain(
                    "step schedule must be strictly decreasing and end at 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// The inclusive box [n0, floor(max_factor * n0)].
pub fn feasible_box(problem: &BalancingProblem) -> (Vec<u64>, Vec<u64>) {
    let lower = problem.base_counts().to_vec();
    let factor = problem.config().max_factor;
    let upper = lower
        .iter()
        .map(|&n| (factor * n as f64).floor() as u64)
        .collect();
    (lower, upper)
}

/// Powers of two descending from the largest power <= max group slack.
pub fn default_step_schedule(problem: &BalancingProblem) -> Vec<u64> {
    let (lower, upper) = feasible_box(problem);
    let max_slack = lower
        .iter()
        .zip(&upper)
        .map(|(&l, &u)| u - l)
        .max()
        .unwrap_or(0);
    if max_slack == 0 {
        return vec![1];
    }
    let mut step = 1u64 << (63 - max_slack.leading_zeros());
    let mut schedule = Vec::new();
    while step >= 1 {
        schedule.push(step);
        if step == 1 {
            break;
        }
        step /= 2;
    }
    schedule
}

/// Incremental objective state under single-coordinate count moves.
/// Class totals stay exact integers; the growth-ratio vector is updated
/// in place and the variance recomputed by the shared helper, so every
/// evaluation is bit-identical to a full recomputation.
pub(crate) struct Evaluator<'a> {
    problem: &'a BalancingProblem,
    counts: Vec<u64>,
    totals: Vec<u64>,
    ratios: Vec<f64>,
    total_records: u64,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(problem: &'a BalancingProblem, counts: Vec<u64>) -> Self {
        let mut totals = vec![0u64; problem.class_count()];
        for (combo, &n) in problem.combinations().iter().zip(&counts) {
            for (c, &bit) in combo.bits().iter().enumerate() {
                totals[c] += n * bit as u64;
            }
        }
        let ratios = counts
            .iter()
            .zip(problem.base_counts())
            .map(|(&n, &n0)| n as f64 / n0 as f64)
            .collect();
        let total_records = counts.iter().sum();
        Self {
            problem,
            counts,
            totals,
            ratios,
            total_records,
        }
    }

    pub(crate) fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub(crate) fn total_records(&self) -> u64 {
        self.total_records
    }

    pub(crate) fn set(&mut self, group: usize, value: u64) {
        let old = self.counts[group];
        if value == old {
            return;
        }
        for (c, &bit) in self.problem.combinations()[group].bits().iter().enumerate() {
            if bit == 1 {
                self.totals[c] = self.totals[c] + value - old;
            }
        }
        self.total_records = self.total_records + value - old;
        self.counts[group] = value;
        self.ratios[group] = value as f64 / self.problem.base_counts()[group] as f64;
    }

    pub(crate) fn objective(&self) -> f64 {
        let imbalance = imbalance_term(&ClassTotals::new(self.totals.clone()));
        imbalance + self.problem.config().lambda_weight * population_variance(&self.ratios)
    }
}

/// Candidate ordering: objective first, then lexicographically smallest
/// counts. Ties beyond that keep the earlier candidate (lower restart).
fn is_better(f: f64, counts: &[u64], best_f: f64, best_counts: &[u64]) -> bool {
    f < best_f || (f == best_f && counts < best_counts)
}

/// Exhaustive enumeration over the box. Refuses when the point count
/// exceeds the guard.
pub fn brute_force_solve(problem: &BalancingProblem) -> Result<BalancingSolution> {
    brute_force_with_budget(problem, None)
}

pub(crate) fn brute_force_with_budget(
    problem: &BalancingProblem,
    budget: Option<u64>,
) -> Result<BalancingSolution> {
    let (lower, upper) = feasible_box(problem);
    check_budget(&lower, budget)?;
    let size: u128 = lower
        .iter()
        .zip(&upper)
        .map(|(&l, &u)| (u - l + 1) as u128)
        .product();
    if size > BRUTE_FORCE_GUARD {
        return Err(Error::SearchSpace(format!(
            "{size} feasible points exceed the enumeration guard of {BRUTE_FORCE_GUARD}"
        )));
    }
    let g = lower.len();
    let mut ev = Evaluator::new(problem, lower.clone());
    let mut best: Option<(f64, Vec<u64>)> = None;
    // Odometer with the last coordinate fastest enumerates the box in
    // lexicographic order, so keeping the first strict improvement makes
    // ties resolve to the lexicographically smallest vector.
    loop {
        let within_budget = budget.is_none_or(|b| ev.total_records() <= b);
        if within_budget {
            let f = ev.objective();
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, ev.counts().to_vec()));
            }
        }
        let mut r = g;
        loop {
            if r == 0 {
                let (_, counts) =
                    best.ok_or_else(|| Error::Infeasible("no point satisfies the budget".into()))?;
                return BalancingSolution::evaluate(problem, counts);
            }
            r -= 1;
            if ev.counts()[r] < upper[r] {
                let v = ev.counts()[r] + 1;
                ev.set(r, v);
                break;
            }
            ev.set(r, lower[r]);
        }
    }
}

/// Coordinate descent over the step schedule. Only strict improvements
/// are accepted. Candidate evaluations draw down `evals_left`; the
/// descent stops when the budget is spent or the schedule is exhausted
/// with no improving unit move.
fn descend(
    ev: &mut Evaluator,
    schedule: &[u64],
    lower: &[u64],
    upper: &[u64],
    budget: Option<u64>,
    evals_left: &mut u64,
    mut trace: Option<&mut Vec<f64>>,
) -> f64 {
    let g = lower.len();
    let mut current = ev.objective();
    for &step in schedule {
        loop {
            let mut accepted = false;
            for r in 0..g {
                let cur = ev.counts()[r];
                let up = cur.saturating_add(step).min(upper[r]);
                let down = cur.saturating_sub(step).max(lower[r]);
                let mut best_move: Option<(u64, f64)> = None;
                for v in [up, down] {
                    if v == cur {
                        continue;
                    }
                    if let Some(b) = budget {
                        if ev.total_records() - cur + v > b {
                            continue;
                        }
                    }
                    if *evals_left == 0 {
                        return current;
                    }
                    *evals_left -= 1;
                    ev.set(r, v);
                    let f = ev.objective();
                    ev.set(r, cur);
                    if f < current && best_move.is_none_or(|(_, bf)| f < bf) {
                        best_move = Some((v, f));
                    }
                }
                if let Some((v, f)) = best_move {
                    ev.set(r, v);
                    current = f;
                    accepted = true;
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(f);
                    }
                }
            }
            if !accepted {
                break;
            }
        }
    }
    current
}

fn sample_point(rng: &mut ChaCha8Rng, lower: &[u64], upper: &[u64]) -> Vec<u64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| rng.gen_range(l..=u))
        .collect()
}

fn check_budget(lower: &[u64], budget: Option<u64>) -> Result<()> {
    if let Some(b) = budget {
        let base_total: u64 = lower.iter().sum();
        if base_total > b {
            return Err(Error::Infeasible(format!(
                "budget {b} is below the base record total {base_total}"
            )));
        }
    }
    Ok(())
}

/// Seeded multi-restart coordinate descent. Restart 0 starts at the
/// lower bound, so the result never scores worse than the base counts;
/// later restarts start at seeded uniform points in the box.
pub fn local_search_solve(
    problem: &BalancingProblem,
    settings: &SolverSettings,
) -> Result<BalancingSolution> {
    settings.validate()?;
    let (lower, upper) = feasible_box(problem);
    check_budget(&lower, settings.budget)?;
    let schedule = settings
        .step_schedule
        .clone()
        .unwrap_or_else(|| default_step_schedule(problem));

    let mut best: Option<(f64, Vec<u64>)> = None;
    for restart in 0..settings.restarts {
        let mut evals_left = settings.max_iterations;
        let start = if restart == 0 {
            lower.clone()
        } else {
            // Evaluating a random start costs one evaluation; the lower
            // bound of restart 0 is the known baseline and is free.
            if evals_left == 0 {
                continue;
            }
            evals_left -= 1;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                settings.seed,
                &format!("local-search-restart-{restart}"),
            ));
            let point = sample_point(&mut rng, &lower, &upper);
            let over_budget = settings
                .budget
                .is_some_and(|b| point.iter().sum::<u64>() > b);
            if over_budget {
                lower.clone()
            } else {
                point
            }
        };
        let mut ev = Evaluator::new(problem, start);
        let f = descend(
            &mut ev,
            &schedule,
            &lower,
            &upper,
            settings.budget,
            &mut evals_left,
            None,
        );
        let better = best
            .as_ref()
            .is_none_or(|(bf, bc)| is_better(f, ev.counts(), *bf, bc));
        if better {
            best = Some((f, ev.counts().to_vec()));
        }
    }
    let (_, counts) = best.expect("restart 0 always produces a candidate");
    BalancingSolution::evaluate(problem, counts)
}

/// Simulated annealing with single-coordinate moves and geometric
/// cooling, polished by a full coordinate descent so the result is
/// coordinate-wise locally optimal.
pub fn annealing_solve(
    problem: &BalancingProblem,
    settings: &SolverSettings,
) -> Result<BalancingSolution> {
    settings.validate()?;
    let (lower, upper) = feasible_box(problem);
    check_budget(&lower, settings.budget)?;
    let schedule = settings
        .step_schedule
        .clone()
        .unwrap_or_else(|| default_step_schedule(problem));
    let g = lower.len();

    let mut best: Option<(f64, Vec<u64>)> = None;
    for restart in 0..settings.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            settings.seed,
            &format!("annealing-restart-{restart}"),
        ));
        let start = if restart == 0 {
            lower.clone()
        } else {
            let point = sample_point(&mut rng, &lower, &upper);
            let over_budget = settings
                .budget
                .is_some_and(|b| point.iter().sum::<u64>() > b);
            if over_budget {
                lower.clone()
            } else {
                point
            }
        };
        let mut ev = Evaluator::new(problem, start);
        let mut current = ev.objective();
        let mut local_best = (current, ev.counts().to_vec());

        let t_start = (current / 10.0).max(1.0);
        let t_end = t_start * 1e-6;
        let steps = settings.max_iterations;
        for it in 0..steps {
            let frac = it as f64 / (steps.max(2) - 1) as f64;
            let temp = t_start * (t_end / t_start).powf(frac);
            let r = rng.gen_range(0..g);
            let step = schedule[rng.gen_range(0..schedule.len())];
            let cur = ev.counts()[r];
            let v = if rng.gen_bool(0.5) {
                cur.saturating_add(step).min(upper[r])
            } else {
                cur.saturating_sub(step).max(lower[r])
            };
            if v == cur {
                continue;
            }
            if let Some(b) = settings.budget {
                if ev.total_records() - cur + v > b {
                    continue;
                }
            }
            ev.set(r, v);
            let f = ev.objective();
            let accept = f < current || rng.gen::<f64>() < (-(f - current) / temp).exp();
            if accept {
                current = f;
                if is_better(f, ev.counts(), local_best.0, &local_best.1) {
                    local_best = (f, ev.counts().to_vec());
                }
            } else {
                ev.set(r, cur);
            }
        }

        // Polish the best state visited; the descent terminates on its
        // own since each acceptance strictly lowers a bounded objective.
        let mut polish = Evaluator::new(problem, local_best.1);
        let mut unlimited = u64::MAX;
        let f = descend(
            &mut polish,
            &schedule,
            &lower,
            &upper,
            settings.budget,
            &mut unlimited,
            None,
        );
        let better = best
            .as_ref()
            .is_none_or(|(bf, bc)| is_better(f, polish.counts(), *bf, bc));
        if better {
            best = Some((f, polish.counts().to_vec()));
        }
    }
    let (_, counts) = best.expect("restart 0 always produces a candidate");
    BalancingSolution::evaluate(problem, counts)
}

/// Dispatch on the configured mode.
pub fn solve(problem: &BalancingProblem, settings: &SolverSettings) -> Result<BalancingSolution> {
    match settings.mode {
        SolverMode::LocalSearch => local_search_solve(problem, settings),
        SolverMode::Annealing => annealing_solve(problem, settings),
        SolverMode::BruteForce => brute_force_with_budget(problem, settings.budget),
    }
}

#[cfg(test)]
pub(crate) fn descend_with_trace(
    problem: &BalancingProblem,
    start: Vec<u64>,
    schedule: &[u64],
    max_evals: u64,
) -> (Vec<u64>, f64, Vec<f64>) {
    let (lower, upper) = feasible_box(problem);
    let mut ev = Evaluator::new(problem, start);
    let mut evals = max_evals;
    let mut trace = Vec::new();
    let f = descend(&mut ev, schedule, &lower, &upper, None, &mut evals, Some(&mut trace));
    (ev.counts().to_vec(), f, trace)
}
