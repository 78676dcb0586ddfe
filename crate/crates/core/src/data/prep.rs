//! Harmonization and missing-value handling.

use std::collections::BTreeMap;

use super::table::{Cell, Column, ColumnKind, DataTable};
use crate::error::{Error, Result};

pub const CONTEXT_COLUMN: &str = "context";

/// Stacks tables into one, taking the union of their columns and adding a
/// categorical `context` column that records which source each row came
/// from. Rows are concatenated; no key matching is attempted.
pub fn merge_outer(tables: &[(DataTable, &str)]) -> Result<DataTable> {
    if tables.is_empty() {
        return Err(Error::Empty("merge needs at least one table".into()));
    }
    for (i, (_, flag)) in tables.iter().enumerate() {
        if tables[..i].iter().any(|(_, f)| f == flag) {
            return Err(Error::Config(format!("context flag `{flag}` used twice")));
        }
    }

    let mut columns: Vec<Column> = Vec::new();
    for (table, _) in tables {
        for col in table.columns() {
            if col.name == CONTEXT_COLUMN {
                return Err(Error::Config(format!(
                    "input already has a `{CONTEXT_COLUMN}` column"
                )));
            }
            match columns.iter().find(|c| c.name == col.name) {
                Some(existing) if existing.kind != col.kind => {
                    return Err(Error::Harmonization {
                        column: col.name.clone(),
                        first: existing.kind.as_str(),
                        second: col.kind.as_str(),
                    })
                }
                Some(_) => {}
                None => columns.push(col.clone()),
            }
        }
    }

    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (table, flag) in tables {
        let mapping: Vec<Option<usize>> = columns
            .iter()
            .map(|c| table.column_index(&c.name))
            .collect();
        for row in table.rows() {
            let mut cells: Vec<Cell> = mapping
                .iter()
                .map(|m| m.map_or(Cell::Missing, |j| row[j].clone()))
                .collect();
            cells.push(Cell::Category((*flag).to_string()));
            rows.push(cells);
            ids.push(ids.len() as u64);
        }
    }
    columns.push(Column::categorical(CONTEXT_COLUMN));
    Ok(DataTable::from_parts(columns, rows, ids))
}

/// Most frequent category; ties go to the lexicographically smallest name.
fn mode<'a>(values: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (k, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((k, n));
        }
    }
    best.map(|(k, _)| k.to_string())
}

/// Fills missing numeric cells with the column mean and missing
/// categorical cells with the column mode.
pub fn impute(table: &DataTable) -> Result<DataTable> {
    let mut out = table.clone();
    for (j, col) in table.columns().iter().enumerate() {
        if table.missing_count(j) == 0 {
            continue;
        }
        let fill = match col.kind {
            ColumnKind::Numeric => {
                let observed: Vec<f64> = table.column_cells(j).filter_map(Cell::as_number).collect();
                if observed.is_empty() {
                    return Err(Error::AllMissing(col.name.clone()));
                }
                Cell::Number(observed.iter().sum::<f64>() / observed.len() as f64)
            }
            ColumnKind::Categorical => {
                let m = mode(table.column_cells(j).filter_map(Cell::as_category))
                    .ok_or_else(|| Error::AllMissing(col.name.clone()))?;
                Cell::Category(m)
            }
        };
        let cells = table
            .column_cells(j)
            .map(|c| if c.is_missing() { fill.clone() } else { c.clone() })
            .collect();
        out.set_column(j, cells);
    }
    Ok(out)
}

/// Removes columns whose missing fraction strictly exceeds `threshold`.
/// Columns listed in `exempt` (label, sensitive attributes) are always kept.
pub fn drop_high_missingness(
    table: &DataTable,
    threshold: f64,
    exempt: &[String],
) -> (DataTable, Vec<String>) {
    let n = table.n_rows();
    if n == 0 {
        return (table.clone(), Vec::new());
    }
    let dropped: Vec<String> = table
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| !exempt.contains(&c.name))
        .filter(|(j, _)| table.missing_count(*j) as f64 / n as f64 > threshold)
        .map(|(_, c)| c.name.clone())
        .collect();
    (table.drop_columns(&dropped), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num_table(name: &str, values: &[Option<f64>]) -> DataTable {
        let mut t = DataTable::new(vec![Column::numeric(name)]).unwrap();
        for (i, v) in values.iter().enumerate() {
            t.push_row(i as u64, vec![v.map_or(Cell::Missing, Cell::Number)])
                .unwrap();
        }
        t
    }

    fn cat_table(name: &str, values: &[Option<&str>]) -> DataTable {
        let mut t = DataTable::new(vec![Column::categorical(name)]).unwrap();
        for (i, v) in values.iter().enumerate() {
            t.push_row(
                i as u64,
                vec![v.map_or(Cell::Missing, |s| Cell::Category(s.into()))],
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn merge_unions_columns_and_adds_context() {
        let a = num_table("GRE", &[Some(320.0), Some(300.0)]);
        let b = num_table("SAT", &[Some(1200.0), Some(1300.0), None]);
        let m = merge_outer(&[(a, "grad"), (b, "ug")]).unwrap();
        assert_eq!(m.n_rows(), 5);
        let names: Vec<&str> = m.column_names().collect();
        assert_eq!(names, ["GRE", "SAT", "context"]);
        assert_eq!(m.row(0)[1], Cell::Missing);
        assert_eq!(m.row(3)[0], Cell::Missing);
        assert_eq!(m.row(4)[2], Cell::Category("ug".into()));
    }

    #[test]
    fn merge_single_table_adds_constant_flag() {
        let a = num_table("GRE", &[Some(320.0), Some(300.0)]);
        let m = merge_outer(&[(a.clone(), "grad")]).unwrap();
        assert_eq!(m.n_rows(), 2);
        for r in m.rows() {
            assert_eq!(r[1], Cell::Category("grad".into()));
            assert_ne!(r[0], Cell::Missing);
        }
    }

    #[test]
    fn merge_shared_column_introduces_no_missing() {
        let a = num_table("GPA", &[Some(3.1), Some(3.5)]);
        let b = num_table("GPA", &[Some(2.9)]);
        let m = merge_outer(&[(a, "hs"), (b, "sec")]).unwrap();
        assert_eq!(m.missing_count(0), 0);
    }

    #[test]
    fn merge_conflicting_kinds_fails() {
        let a = num_table("GPA", &[Some(3.1)]);
        let b = cat_table("GPA", &[Some("A")]);
        assert!(matches!(
            merge_outer(&[(a, "x"), (b, "y")]),
            Err(Error::Harmonization { .. })
        ));
    }

    #[test]
    fn merge_rejects_duplicate_flags() {
        let a = num_table("GPA", &[Some(3.1)]);
        assert!(merge_outer(&[(a.clone(), "x"), (a, "x")]).is_err());
    }

    #[test]
    fn impute_numeric_mean() {
        let t = impute(&num_table("x", &[Some(1.0), None, Some(3.0)])).unwrap();
        let col: Vec<_> = t.numeric_column("x").unwrap();
        assert_eq!(col, [Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn impute_categorical_mode() {
        let t = impute(&cat_table("g", &[Some("A"), Some("A"), None, Some("B")])).unwrap();
        assert_eq!(t.row(2)[0], Cell::Category("A".into()));
    }

    #[test]
    fn impute_mode_tie_is_lexicographic() {
        let t = impute(&cat_table("g", &[Some("B"), Some("A"), None])).unwrap();
        assert_eq!(t.row(2)[0], Cell::Category("A".into()));
    }

    #[test]
    fn impute_all_missing_names_column() {
        let err = impute(&num_table("essay", &[None, None])).unwrap_err();
        assert!(err.to_string().contains("essay"));
    }

    fn missing_table(missing: usize) -> DataTable {
        let values: Vec<Option<f64>> = (0..100)
            .map(|i| if i < missing { None } else { Some(i as f64) })
            .collect();
        num_table("x", &values)
    }

    #[test]
    fn missingness_threshold_is_strict() {
        let (_, dropped) = drop_high_missingness(&missing_table(31), 0.30, &[]);
        assert_eq!(dropped, ["x"]);
        let (_, dropped) = drop_high_missingness(&missing_table(30), 0.30, &[]);
        assert!(dropped.is_empty());
        let (_, dropped) = drop_high_missingness(&missing_table(0), 0.30, &[]);
        assert!(dropped.is_empty());
    }

    #[test]
    fn missingness_exempts_label() {
        let (t, dropped) = drop_high_missingness(&missing_table(90), 0.30, &["x".to_string()]);
        assert!(dropped.is_empty());
        assert_eq!(t.n_cols(), 1);
    }

    proptest! {
        #[test]
        fn impute_is_idempotent(
            nums in prop::collection::vec(prop::option::weighted(0.7, -100.0f64..100.0), 1..20),
            cats in prop::collection::vec(prop::option::weighted(0.7, "[a-c]"), 1..20),
        ) {
            prop_assume!(nums.iter().any(Option::is_some));
            prop_assume!(cats.iter().any(Option::is_some));
            let a = impute(&num_table("x", &nums)).unwrap();
            prop_assert_eq!(impute(&a).unwrap(), a.clone());
            let cats: Vec<Option<&str>> = cats.iter().map(|c| c.as_deref()).collect();
            let b = impute(&cat_table("g", &cats)).unwrap();
            prop_assert_eq!(impute(&b).unwrap(), b.clone());
        }

        #[test]
        fn merge_row_count_is_sum(sizes in prop::collection::vec(0usize..6, 1..4)) {
            let tables: Vec<(DataTable, String)> = sizes
                .iter()
                .enumerate()
                .map(|(i, n)| (num_table(&format!("c{}", i % 2), &vec![Some(1.0); *n]), format!("f{i}")))
                .collect();
            let refs: Vec<(DataTable, &str)> = tables.iter().map(|(t, f)| (t.clone(), f.as_str())).collect();
            let m = merge_outer(&refs).unwrap();
            prop_assert_eq!(m.n_rows(), sizes.iter().sum::<usize>());
            let expected_cols = if sizes.len() > 1 { 3 } else { 2 };
            prop_assert_eq!(m.n_cols(), expected_cols);
        }
    }
}
