//! Removal of rows whose label contradicts their academic profile.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::table::{Cell, DataTable};
use crate::error::{Error, Result};

pub const STRONG_PROFILE_REJECTED: &str = "strong_profile_rejected";
pub const WEAK_PROFILE_ADMITTED: &str = "weak_profile_admitted";

/// Thresholds describing a strong profile that was rejected and a weak
/// profile that was admitted. Both comparisons are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningRule {
    pub gre_column: String,
    pub cgpa_column: String,
    pub label_column: String,
    pub gre_min: f64,
    pub cgpa_min: f64,
    pub gre_max: f64,
    pub cgpa_max: f64,
}

impl Default for CleaningRule {
    fn default() -> Self {
        CleaningRule {
            gre_column: "GRE".into(),
            cgpa_column: "CGPA".into(),
            label_column: crate::features::LABEL_COLUMN.into(),
            gre_min: 320.0,
            cgpa_min: 9.5,
            gre_max: 300.0,
            cgpa_max: 8.0,
        }
    }
}

impl CleaningRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.gre_min > self.gre_max) {
            return Err(Error::Config(format!(
                "cleaning rule needs gre_min > gre_max (got {} and {})",
                self.gre_min, self.gre_max
            )));
        }
        if !(self.cgpa_min > self.cgpa_max) {
            return Err(Error::Config(format!(
                "cleaning rule needs cgpa_min > cgpa_max (got {} and {})",
                self.cgpa_min, self.cgpa_max
            )));
        }
        Ok(())
    }

    /// Which sub-rule, if any, flags a row with these values.
    pub fn classify(&self, gre: f64, cgpa: f64, label: f64) -> Option<&'static str> {
        if gre >= self.gre_min && cgpa >= self.cgpa_min && label == 0.0 {
            Some(STRONG_PROFILE_REJECTED)
        } else if gre <= self.gre_max && cgpa <= self.cgpa_max && label == 1.0 {
            Some(WEAK_PROFILE_ADMITTED)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningLog {
    pub rows_before: usize,
    pub rows_after: usize,
    pub removed_row_ids: Vec<u64>,
    pub rule_hits: BTreeMap<String, usize>,
}

/// Drops rows matched by either sub-rule of `rule`. Rows with a missing
/// GRE, CGPA or label never match.
pub fn clean_anomalies(table: &DataTable, rule: &CleaningRule) -> Result<(DataTable, CleaningLog)> {
    rule.validate()?;
    let gre = table.require_column(&rule.gre_column)?;
    let cgpa = table.require_column(&rule.cgpa_column)?;
    let label = table.require_column(&rule.label_column)?;

    let mut rule_hits = BTreeMap::from([
        (STRONG_PROFILE_REJECTED.to_string(), 0usize),
        (WEAK_PROFILE_ADMITTED.to_string(), 0usize),
    ]);
    let mut removed_row_ids = Vec::new();
    let mut keep = Vec::with_capacity(table.n_rows());
    for (i, row) in table.rows().iter().enumerate() {
        let hit = match (&row[gre], &row[cgpa], &row[label]) {
            (Cell::Number(g), Cell::Number(c), Cell::Number(y)) => rule.classify(*g, *c, *y),
            _ => None,
        };
        match hit {
            Some(name) => {
                *rule_hits.get_mut(name).expect("known rule") += 1;
                removed_row_ids.push(table.row_ids()[i]);
            }
            None => keep.push(i),
        }
    }
    let cleaned = table.select_rows(&keep);
    let log = CleaningLog {
        rows_before: table.n_rows(),
        rows_after: cleaned.n_rows(),
        removed_row_ids,
        rule_hits,
    };
    Ok((cleaned, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::table::Column;
    use proptest::prelude::*;

    fn table(rows: &[(f64, f64, f64)]) -> DataTable {
        let mut t = DataTable::new(vec![
            Column::numeric("GRE"),
            Column::numeric("CGPA"),
            Column::numeric("Admission_Status"),
        ])
        .unwrap();
        for (i, (g, c, y)) in rows.iter().enumerate() {
            t.push_row(
                i as u64,
                vec![Cell::Number(*g), Cell::Number(*c), Cell::Number(*y)],
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn strong_rejected_row_removed() {
        let (t, log) = clean_anomalies(&table(&[(330.0, 9.7, 0.0)]), &CleaningRule::default()).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(log.removed_row_ids, [0]);
        assert_eq!(log.rule_hits[STRONG_PROFILE_REJECTED], 1);
    }

    #[test]
    fn ordinary_rejected_row_kept() {
        let (t, log) = clean_anomalies(&table(&[(310.0, 8.5, 0.0)]), &CleaningRule::default()).unwrap();
        assert_eq!(t.n_rows(), 1);
        assert!(log.removed_row_ids.is_empty());
    }

    #[test]
    fn weak_admitted_row_removed_and_bounds_inclusive() {
        let (t, log) = clean_anomalies(
            &table(&[(300.0, 8.0, 1.0), (320.0, 9.5, 0.0), (301.0, 8.0, 1.0)]),
            &CleaningRule::default(),
        )
        .unwrap();
        assert_eq!(t.row_ids(), &[2]);
        assert_eq!(log.rule_hits[WEAK_PROFILE_ADMITTED], 1);
        assert_eq!(log.rule_hits[STRONG_PROFILE_REJECTED], 1);
    }

    #[test]
    fn missing_columns_error() {
        let t = DataTable::new(vec![Column::numeric("GRE")]).unwrap();
        assert!(matches!(
            clean_anomalies(&t, &CleaningRule::default()),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn inverted_thresholds_rejected() {
        let rule = CleaningRule {
            gre_max: 330.0,
            ..CleaningRule::default()
        };
        assert!(rule.validate().is_err());
    }

    proptest! {
        #[test]
        fn removes_exactly_the_matching_rows(
            rows in prop::collection::vec((280.0f64..340.0, 6.5f64..10.0, 0u8..2), 0..60)
        ) {
            let rows: Vec<(f64, f64, f64)> = rows.into_iter().map(|(g, c, y)| (g, c, f64::from(y))).collect();
            let t = table(&rows);
            let (out, log) = clean_anomalies(&t, &CleaningRule::default()).unwrap();
            // independent scan
            let expected: Vec<u64> = rows
                .iter()
                .enumerate()
                .filter(|(_, (g, c, y))| {
                    (*g >= 320.0 && *c >= 9.5 && *y == 0.0) || (*g <= 300.0 && *c <= 8.0 && *y == 1.0)
                })
                .map(|(i, _)| i as u64)
                .collect();
            prop_assert_eq!(&log.removed_row_ids, &expected);
            prop_assert_eq!(log.rows_before - log.rows_after, log.removed_row_ids.len());
            prop_assert_eq!(out.n_rows(), log.rows_after);
            prop_assert_eq!(log.rule_hits.values().sum::<usize>(), expected.len());
        }
    }
}
