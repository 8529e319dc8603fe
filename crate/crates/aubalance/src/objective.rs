//! The balancing objective: sum of absolute deviations of per-class
//! totals from their mean, plus a lambda-weighted population variance of
//! the per-group growth ratios.

use crate::error::{Error, Result};
use crate::model::BalancingProblem;
use crate::solver::feasible_box;

/// Per-class record totals implied by a count vector. Kept as exact
/// integers; totals in the hundreds of thousands must not drift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTotals {
    totals: Vec<u64>,
}

impl ClassTotals {
    pub fn new(totals: Vec<u64>) -> Self {
        Self { totals }
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn class_count(&self) -> usize {
        self.totals.len()
    }
}

/// Decomposed objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    pub objective_value: f64,
    pub imbalance_term: f64,
    /// Growth-ratio variance before the lambda weight is applied.
    pub variance_term: f64,
}

/// z[c] = sum over groups of counts[r] * combinations[r][c].
pub fn class_totals(problem: &BalancingProblem, counts: &[u64]) -> Result<ClassTotals> {
    check_counts_len(problem, counts)?;
    let mut totals = vec![0u64; problem.class_count()];
    for (combo, &n) in problem.combinations().iter().zip(counts) {
        for (c, &bit) in combo.bits().iter().enumerate() {
            totals[c] += n * bit as u64;
        }
    }
    Ok(ClassTotals::new(totals))
}

/// Sum of absolute deviations of the class totals from their mean.
pub fn imbalance_term(z: &ClassTotals) -> f64 {
    let k = z.class_count() as f64;
    let sum: u64 = z.totals().iter().sum();
    let mean = sum as f64 / k;
    z.totals().iter().map(|&t| (t as f64 - mean).abs()).sum()
}

/// Population variance (divide by G) of the growth ratios counts/base.
/// The lambda weight is not applied here.
pub fn growth_variance_term(problem: &BalancingProblem, counts: &[u64]) -> Result<f64> {
    check_counts_len(problem, counts)?;
    let ratios: Vec<f64> = counts
        .iter()
        .zip(problem.base_counts())
        .map(|(&n, &n0)| n as f64 / n0 as f64)
        .collect();
    Ok(population_variance(&ratios))
}

pub(crate) fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Full objective at a feasible count vector. Callers must clamp to the
/// box first; out-of-box counts are a domain error.
pub fn objective(problem: &BalancingProblem, counts: &[u64]) -> Result<ObjectiveBreakdown> {
    check_counts_len(problem, counts)?;
    let (lower, upper) = feasible_box(problem);
    for (r, &n) in counts.iter().enumerate() {
        if n < lower[r] || n > upper[r] {
            return Err(Error::Domain(format!(
                "counts[{r}] = {n} outside feasible box [{}, {}]",
                lower[r], upper[r]
            )));
        }
    }
    let imbalance = imbalance_term(&class_totals(problem, counts)?);
    let variance = growth_variance_term(problem, counts)?;
    Ok(ObjectiveBreakdown {
        objective_value: imbalance + problem.config().lambda_weight * variance,
        imbalance_term: imbalance,
        variance_term: variance,
    })
}

fn check_counts_len(problem: &BalancingProblem, counts: &[u64]) -> Result<()> {
    if counts.len() != problem.group_count() {
        return Err(Error::Dimension(format!(
            "count vector has length {}, problem has {} groups",
            counts.len(),
            problem.group_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LabelCombination, ObjectiveConfig};
    use proptest::prelude::*;

    fn problem(combos: &[&[u8]], base: &[u64], lambda: f64) -> BalancingProblem {
        let combos: Vec<_> = combos
            .iter()
            .map(|b| LabelCombination::new(b.to_vec()).unwrap())
            .collect();
        let k = combos[0].len();
        BalancingProblem::new(
            combos,
            base.to_vec(),
            k,
            ObjectiveConfig::new(lambda, 10.0).unwrap(),
        )
        .unwrap()
    }

    // Combined AU training-set totals before and after augmentation
    // (AU01, AU02, AU04, AU06, AU12, AU15, AU20, AU25).
    pub(crate) const NON_AUG_TOTALS: [u64; 8] =
        [62180, 12699, 48209, 18455, 33237, 5306, 9600, 28175];
    pub(crate) const AUG1_TOTALS: [u64; 8] =
        [62874, 24754, 48365, 33091, 35417, 17748, 25681, 35416];

    #[test]
    fn class_totals_hand_example() {
        let p = problem(&[&[1, 0], &[1, 1]], &[1, 1], 1.0);
        let z = class_totals(&p, &[2, 1]).unwrap();
        assert_eq!(z.totals(), &[3, 1]);
    }

    #[test]
    fn class_totals_reproduce_au_distribution() {
        // Eight singleton groups, one per AU, with the published counts.
        let combos: Vec<Vec<u8>> = (0..8)
            .map(|c| (0..8).map(|i| (i == c) as u8).collect())
            .collect();
        let combos_ref: Vec<&[u8]> = combos.iter().map(|v| v.as_slice()).collect();
        let p = problem(&combos_ref, &NON_AUG_TOTALS, 1.0);
        let z = class_totals(&p, &NON_AUG_TOTALS).unwrap();
        assert_eq!(z.totals(), &NON_AUG_TOTALS);
    }

    #[test]
    fn class_totals_length_mismatch() {
        let p = problem(&[&[1, 0], &[1, 1]], &[1, 1], 1.0);
        assert!(matches!(
            class_totals(&p, &[1, 2, 3]),
            Err(Error::Dimension(_))
        ));
    }

    // Naive double-loop oracle, independent of class_totals.
    #[test]
    fn class_totals_matches_double_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut combos: Vec<Vec<u8>> = Vec::new();
        while combos.len() < 20 {
            let c: Vec<u8> = (0..6).map(|_| rng.gen_range(0..=1u8)).collect();
            if !combos.contains(&c) {
                combos.push(c);
            }
        }
        let base: Vec<u64> = (0..20).map(|_| rng.gen_range(1..50u64)).collect();
        let counts: Vec<u64> = base.iter().map(|&b| rng.gen_range(b..=b * 3)).collect();
        let mut expected = vec![0u64; 6];
        for c in 0..6 {
            for r in 0..20 {
                expected[c] += counts[r] * combos[r][c] as u64;
            }
        }
        let combos_ref: Vec<&[u8]> = combos.iter().map(|v| v.as_slice()).collect();
        let p = problem(&combos_ref, &base, 1.0);
        assert_eq!(class_totals(&p, &counts).unwrap().totals(), expected);
    }

    #[test]
    fn imbalance_zero_for_equal_totals() {
        assert_eq!(imbalance_term(&ClassTotals::new(vec![5, 5, 5])), 0.0);
    }

    #[test]
    fn imbalance_of_non_aug_distribution() {
        let v = imbalance_term(&ClassTotals::new(NON_AUG_TOTALS.to_vec()));
        assert!((v - 125741.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn imbalance_of_aug1_distribution() {
        let v = imbalance_term(&ClassTotals::new(AUG1_TOTALS.to_vec()));
        assert!((v - 80805.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn variance_zero_at_base_counts() {
        let p = problem(&[&[1, 0], &[1, 1]], &[3, 7], 1.0);
        assert_eq!(growth_variance_term(&p, &[3, 7]).unwrap(), 0.0);
    }

    #[test]
    fn variance_two_point_hand_example() {
        let p = problem(&[&[1, 0], &[1, 1]], &[1, 3], 1.0);
        // ratios [2.0, 1.0], mean 1.5, population variance 0.25
        assert_eq!(growth_variance_term(&p, &[2, 3]).unwrap(), 0.25);
    }

    // Two-pass oracle kept separate from population_variance.
    #[test]
    fn variance_matches_two_pass_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = rng.gen_range(2..30usize);
            let base: Vec<u64> = (0..g).map(|_| rng.gen_range(1..40u64)).collect();
            let counts: Vec<u64> = base.iter().map(|&b| rng.gen_range(b..=b * 5)).collect();
            let ratios: Vec<f64> = counts
                .iter()
                .zip(&base)
                .map(|(&n, &n0)| n as f64 / n0 as f64)
                .collect();
            let mean: f64 = ratios.iter().sum::<f64>() / g as f64;
            let oracle: f64 =
                ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
            let combos: Vec<Vec<u8>> = (0..g)
                .map(|i| (0..6).map(|c| ((i >> c) & 1) as u8).collect())
                .collect();
            let combos_ref: Vec<&[u8]> = combos.iter().map(|v| v.as_slice()).collect();
            let p = problem(&combos_ref, &base, 1.0);
            let got = growth_variance_term(&p, &counts).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }
    }

    #[test]
    fn objective_single_group_is_zero() {
        let p = problem(&[&[1, 1]], &[4], 1.0);
        let b = objective(&p, &[7]).unwrap();
        assert_eq!(b.objective_value, 0.0);
    }

    #[test]
    fn objective_hand_example() {
        let p = problem(&[&[1, 0], &[1, 1]], &[1, 3], 1.0);
        let b = objective(&p, &[1, 3]).unwrap();
        assert_eq!(b.imbalance_term, 1.0); // z=[4,3], mean 3.5
        assert_eq!(b.variance_term, 0.0);
        assert_eq!(b.objective_value, 1.0);
    }

    #[test]
    fn objective_rejects_out_of_box() {
        let p = problem(&[&[1, 0], &[1, 1]], &[1, 3], 1.0);
        assert!(matches!(objective(&p, &[11, 3]), Err(Error::Domain(_))));
        assert!(matches!(objective(&p, &[0, 3]), Err(Error::Dimension(_)) | Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_scaling_gives_zero_variance() {
        let p = problem(&[&[1, 0], &[1, 1]], &[2, 5], 1.0);
        for m in 1..=4u64 {
            let counts: Vec<u64> = p.base_counts().iter().map(|&b| b * m).collect();
            assert_eq!(growth_variance_term(&p, &counts).unwrap(), 0.0);
        }
    }

    #[test]
    fn imbalance_scales_linearly_under_uniform_scaling() {
        let p = problem(&[&[1, 0], &[1, 1]], &[2, 5], 1.0);
        let base_imb = imbalance_term(&class_totals(&p, &[2, 5]).unwrap());
        for m in 2..=4u64 {
            let counts: Vec<u64> = p.base_counts().iter().map(|&b| b * m).collect();
            let imb = imbalance_term(&class_totals(&p, &counts).unwrap());
            assert!((imb - m as f64 * base_imb).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn imbalance_invariant_under_class_permutation(
            mut z in prop::collection::vec(0u64..100_000, 1..10)
        ) {
            let a = imbalance_term(&ClassTotals::new(z.clone()));
            z.reverse();
            let b = imbalance_term(&ClassTotals::new(z));
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }

        #[test]
        fn imbalance_zero_iff_all_equal(z in prop::collection::vec(0u64..1000, 1..8)) {
            let v = imbalance_term(&ClassTotals::new(z.clone()));
            let all_equal = z.iter().all(|&t| t == z[0]);
            if all_equal {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn decomposition_identity_holds(
            base in prop::collection::vec(1u64..20, 1..6),
            lambda in 0.0f64..10.0,
            frac in prop::collection::vec(0.0f64..1.0, 6),
        ) {
            let g = base.len();
            let combos: Vec<Vec<u8>> = (0..g)
                .map(|i| (0..4).map(|c| (((i + 1) >> c) & 1) as u8).collect())
                .collect();
            let combos: Vec<_> = combos.into_iter()
                .map(|b| LabelCombination::new(b).unwrap()).collect();
            let p = BalancingProblem::new(
                combos, base.clone(), 4,
                ObjectiveConfig::new(lambda, 10.0).unwrap(),
            ).unwrap();
            let counts: Vec<u64> = base.iter().enumerate()
                .map(|(i, &b)| b + (frac[i % 6] * (9 * b) as f64) as u64)
                .collect();
            let b = objective(&p, &counts).unwrap();
            let recomputed = b.imbalance_term + lambda * b.variance_term;
            prop_assert!(
                (b.objective_value - recomputed).abs()
                    <= 1e-9 * b.objective_value.abs().max(1.0)
            );
        }
    }
}
