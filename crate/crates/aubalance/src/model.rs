//! Problem and solution data types, plus the grouping step that turns a
//! raw record table into unique-combination form.
//!
//! Augmenting one record replicates its whole label pattern, so the
//! optimization variable is the count per distinct binary label
//! combination, not per class.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::objective;

/// One binary label pattern over K classes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelCombination {
    bits: Vec<u8>,
}

impl LabelCombination {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Input("label combination must have K >= 1".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Format(format!(
                "label entries must be 0 or 1, got {b}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Objective weights and box-constraint factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    /// Weight on the growth-variance penalty.
    pub lambda_weight: f64,
    /// Upper bound factor: counts may grow to floor(max_factor * base).
    pub max_factor: f64,
}

impl ObjectiveConfig {
    pub fn new(lambda_weight: f64, max_factor: f64) -> Result<Self> {
        if lambda_weight.is_nan() || lambda_weight < 0.0 {
            return Err(Error::Domain(format!(
                "lambda_weight must be >= 0, got {lambda_weight}"
            )));
        }
        if max_factor.is_nan() || max_factor <= 1.0 {
            return Err(Error::Domain(format!(
                "max_factor must be > 1, got {max_factor}"
            )));
        }
        Ok(Self {
            lambda_weight,
            max_factor,
        })
    }
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            lambda_weight: 1.0,
            max_factor: 10.0,
        }
    }
}

/// Raw annotation input: one row per record, identifier plus labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordTable {
    class_names: Vec<String>,
    rows: Vec<(String, LabelCombination)>,
}

impl RecordTable {
    pub fn new(class_names: Vec<String>, rows: Vec<(String, LabelCombination)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("record table is empty".into()));
        }
        let k = class_names.len();
        if k == 0 {
            return Err(Error::Input("record table needs at least one class".into()));
        }
        let mut seen = std::collections::HashMap::with_capacity(rows.len());
        for (i, (id, labels)) in rows.iter().enumerate() {
            if labels.len() != k {
                return Err(Error::Format(format!(
                    "record '{id}' has {} labels, expected {k}",
                    labels.len()
                )));
            }
            if let Some(prev) = seen.insert(id.clone(), i) {
                return Err(Error::Format(format!(
                    "duplicate record_id '{id}' (rows {} and {})",
                    prev + 1,
                    i + 1
                )));
            }
        }
        Ok(Self { class_names, rows })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn rows(&self) -> &[(String, LabelCombination)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// The balancing instance in unique-combination form.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingProblem {
    combinations: Vec<LabelCombination>,
    base_counts: Vec<u64>,
    class_count: usize,
    config: ObjectiveConfig,
}

impl BalancingProblem {
    pub fn new(
        combinations: Vec<LabelCombination>,
        base_counts: Vec<u64>,
        class_count: usize,
        config: ObjectiveConfig,
    ) -> Result<Self> {
        if combinations.is_empty() {
            return Err(Error::Input("problem needs at least one group".into()));
        }
        if class_count == 0 {
            return Err(Error::Input("problem needs at least one class".into()));
        }
        if combinations.len() != base_counts.len() {
            return Err(Error::Dimension(format!(
                "{} combinations vs {} base counts",
                combinations.len(),
                base_counts.len()
            )));
        }
        for combo in &combinations {
            if combo.len() != class_count {
                return Err(Error::Dimension(format!(
                    "combination width {} != class count {class_count}",
                    combo.len()
                )));
            }
        }
        let mut distinct: Vec<_> = combinations.iter().collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() != combinations.len() {
            return Err(Error::Input("combinations must be pairwise distinct".into()));
        }
        if base_counts.contains(&0) {
            return Err(Error::Input(
                "base counts must be strictly positive".into(),
            ));
        }
        Ok(Self {
            combinations,
            base_counts,
            class_count,
            config,
        })
    }

    pub fn combinations(&self) -> &[LabelCombination] {
        &self.combinations
    }

    pub fn base_counts(&self) -> &[u64] {
        &self.base_counts
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn group_count(&self) -> usize {
        self.combinations.len()
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }
}

/// An optimized count vector plus its objective decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingSolution {
    pub counts: Vec<u64>,
    pub objective_value: f64,
    pub imbalance_term: f64,
    pub variance_term: f64,
}

impl BalancingSolution {
    /// Build a solution from a feasible count vector, computing the
    /// objective decomposition. The single construction path keeps the
    /// decomposition identity true by definition.
    pub fn evaluate(problem: &BalancingProblem, counts: Vec<u64>) -> Result<Self> {
        let breakdown = objective::objective(problem, &counts)?;
        Ok(Self {
            counts,
            objective_value: breakdown.objective_value,
            imbalance_term: breakdown.imbalance_term,
            variance_term: breakdown.variance_term,
        })
    }
}

/// Collapse a record table into one group per distinct label combination.
///
/// Groups come out in lexicographic order of the bit sequence, so every
/// downstream artifact is deterministic regardless of input row order.
pub fn group_records(table: &RecordTable, config: ObjectiveConfig) -> Result<BalancingProblem> {
    let mut counts: BTreeMap<&LabelCombination, u64> = BTreeMap::new();
    for (_, labels) in table.rows() {
        *counts.entry(labels).or_insert(0) += 1;
    }
    let (combinations, base_counts): (Vec<_>, Vec<_>) = counts
        .into_iter()
        .map(|(combo, n)| (combo.clone(), n))
        .unzip();
    BalancingProblem::new(combinations, base_counts, table.class_count(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn combo(bits: &[u8]) -> LabelCombination {
        LabelCombination::new(bits.to_vec()).unwrap()
    }

    fn table(rows: &[(&str, &[u8])]) -> RecordTable {
        let k = rows[0].1.len();
        let names = (0..k).map(|i| format!("C{i}")).collect();
        RecordTable::new(
            names,
            rows.iter()
                .map(|(id, bits)| (id.to_string(), combo(bits)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn grouping_counts_distinct_combinations() {
        let t = table(&[("a", &[1, 0]), ("b", &[1, 0]), ("c", &[1, 1])]);
        let p = group_records(&t, ObjectiveConfig::default()).unwrap();
        assert_eq!(p.group_count(), 2);
        assert_eq!(p.combinations(), &[combo(&[1, 0]), combo(&[1, 1])]);
        assert_eq!(p.base_counts(), &[2, 1]);
    }

    #[test]
    fn all_zero_labels_form_a_group() {
        let t = table(&[("a", &[0, 0]), ("b", &[1, 0])]);
        let p = group_records(&t, ObjectiveConfig::default()).unwrap();
        assert_eq!(p.combinations()[0], combo(&[0, 0]));
        assert_eq!(p.base_counts(), &[1, 1]);
    }

    #[test]
    fn empty_table_rejected() {
        let err = RecordTable::new(vec!["C0".into()], vec![]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn inconsistent_width_rejected() {
        let err = RecordTable::new(
            vec!["C0".into(), "C1".into()],
            vec![("a".into(), combo(&[1, 0])), ("b".into(), combo(&[1]))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn duplicate_record_id_rejected() {
        let err = RecordTable::new(
            vec!["C0".into()],
            vec![("a".into(), combo(&[1])), ("a".into(), combo(&[0]))],
        )
        .unwrap_err();
        match err {
            Error::Format(msg) => assert!(msg.contains("rows 1 and 2"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_binary_labels_rejected() {
        assert!(matches!(
            LabelCombination::new(vec![0, 2]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn zero_base_count_rejected() {
        let err = BalancingProblem::new(
            vec![combo(&[1])],
            vec![0],
            1,
            ObjectiveConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn duplicate_combinations_rejected() {
        let err = BalancingProblem::new(
            vec![combo(&[1, 0]), combo(&[1, 0])],
            vec![1, 1],
            2,
            ObjectiveConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    // Independent recount oracle: tally combinations into a hash map
    // without going through group_records.
    #[test]
    fn synthetic_table_matches_hashmap_recount() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool: Vec<Vec<u8>> = (0..12)
            .map(|_| (0..5).map(|_| rng.gen_range(0..=1u8)).collect())
            .collect();
        let rows: Vec<(String, LabelCombination)> = (0..1000)
            .map(|i| {
                let bits = pool[rng.gen_range(0..pool.len())].clone();
                (format!("rec{i:04}"), LabelCombination::new(bits).unwrap())
            })
            .collect();
        let mut oracle: std::collections::HashMap<Vec<u8>, u64> = Default::default();
        for (_, c) in &rows {
            *oracle.entry(c.bits().to_vec()).or_insert(0) += 1;
        }
        let names = (0..5).map(|i| format!("C{i}")).collect();
        let t = RecordTable::new(names, rows).unwrap();
        let p = group_records(&t, ObjectiveConfig::default()).unwrap();
        assert_eq!(p.group_count(), oracle.len());
        for (combo, &n) in p.combinations().iter().zip(p.base_counts()) {
            assert_eq!(oracle[combo.bits()], n);
        }
    }

    proptest! {
        #[test]
        fn grouping_is_a_partition(rows in prop::collection::vec(
            prop::collection::vec(0u8..=1, 3), 1..60)) {
            let names = vec!["A".into(), "B".into(), "C".into()];
            let rows: Vec<_> = rows.into_iter().enumerate()
                .map(|(i, bits)| (format!("r{i}"), LabelCombination::new(bits).unwrap()))
                .collect();
            let n = rows.len() as u64;
            let t = RecordTable::new(names, rows).unwrap();
            let p = group_records(&t, ObjectiveConfig::default()).unwrap();
            prop_assert_eq!(p.base_counts().iter().sum::<u64>(), n);
        }

        #[test]
        fn grouping_is_order_canonical(
            rows in prop::collection::vec(prop::collection::vec(0u8..=1, 3), 1..40),
            swaps in prop::collection::vec((0usize..40, 0usize..40), 0..20),
        ) {
            let names: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
            let mut rows: Vec<_> = rows.into_iter().enumerate()
                .map(|(i, bits)| (format!("r{i}"), LabelCombination::new(bits).unwrap()))
                .collect();
            let t1 = RecordTable::new(names.clone(), rows.clone()).unwrap();
            let p1 = group_records(&t1, ObjectiveConfig::default()).unwrap();
            let n = rows.len();
            for (a, b) in swaps {
                rows.swap(a % n, b % n);
            }
            let t2 = RecordTable::new(names, rows).unwrap();
            let p2 = group_records(&t2, ObjectiveConfig::default()).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
