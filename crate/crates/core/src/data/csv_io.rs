//! CSV reading and writing for [`DataTable`].

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::table::{Cell, Column, ColumnKind, DataTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Forces the kind of the named columns instead of inferring it.
    pub schema: BTreeMap<String, ColumnKind>,
    /// Field values read as missing. Compared after trimming.
    pub missing_markers: Vec<String>,
    /// Column holding row ids. Rows are numbered from 0 when absent.
    pub id_column: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            schema: BTreeMap::new(),
            missing_markers: vec![String::new(), "NA".to_string()],
            id_column: None,
        }
    }
}

impl ParseOptions {
    pub fn with_id_column(mut self, name: impl Into<String>) -> Self {
        self.id_column = Some(name.into());
        self
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses UTF-8 CSV with a header row into a [`DataTable`].
pub fn parse_csv<R: Read>(source: R, options: &ParseOptions) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::Empty("csv source has no header row".into())),
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().all(String::is_empty) {
        return Err(Error::Empty("csv header is blank".into()));
    }
    let width = names.len();

    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        // Blank lines are skipped by the reader; a lone empty field is a blank line too.
        if record.len() == 1 && width > 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        raw.push(record.iter().map(str::to_string).collect());
    }

    let is_missing = |s: &str| options.missing_markers.iter().any(|m| m == s);

    let id_index = match &options.id_column {
        Some(name) => Some(
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        ),
        None => None,
    };

    let mut kinds = Vec::with_capacity(width);
    for (j, name) in names.iter().enumerate() {
        let kind = match options.schema.get(name) {
            Some(k) => *k,
            None => {
                let numeric = raw
                    .iter()
                    .map(|r| r[j].as_str())
                    .filter(|s| !is_missing(s))
                    .all(|s| parse_number(s).is_some());
                if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            }
        };
        kinds.push(kind);
    }

    let columns: Vec<Column> = names
        .iter()
        .zip(&kinds)
        .enumerate()
        .filter(|(j, _)| Some(*j) != id_index)
        .map(|(_, (name, kind))| Column {
            name: name.clone(),
            kind: *kind,
        })
        .collect();
    let mut table = DataTable::new(columns)?;

    for (i, fields) in raw.iter().enumerate() {
        let id = match id_index {
            Some(k) => fields[k].parse::<u64>().map_err(|_| Error::Parse {
                row: i + 1,
                message: format!("row id `{}` is not a non-negative integer", fields[k]),
            })?,
            None => i as u64,
        };
        let mut cells = Vec::with_capacity(width);
        for (j, field) in fields.iter().enumerate() {
            if Some(j) == id_index {
                continue;
            }
            let cell = if is_missing(field) {
                Cell::Missing
            } else {
                match kinds[j] {
                    ColumnKind::Numeric => match parse_number(field) {
                        Some(v) => Cell::Number(v),
                        None => {
                            return Err(Error::Parse {
                                row: i + 1,
                                message: format!(
                                    "`{field}` in numeric column `{}` is not a number",
                                    names[j]
                                ),
                            })
                        }
                    },
                    ColumnKind::Categorical => Cell::Category(field.clone()),
                }
            };
            cells.push(cell);
        }
        table.push_row(id, cells).map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(table)
}

pub fn read_csv(path: &Path, options: &ParseOptions) -> Result<DataTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(std::io::BufReader::new(file), options)
}

/// Writes the table as CSV. Missing cells become empty fields; when
/// `id_column` is given the row ids are written as a leading column.
pub fn write_csv<W: Write>(table: &DataTable, sink: W, id_column: Option<&str>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = Vec::with_capacity(table.n_cols() + 1);
    if let Some(id) = id_column {
        header.push(id);
    }
    header.extend(table.column_names());
    writer.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (id, row) in table.row_ids().iter().zip(table.rows()) {
        record.clear();
        if id_column.is_some() {
            record.push(id.to_string());
        }
        record.extend(row.iter().map(|c| match c {
            Cell::Number(v) => v.to_string(),
            Cell::Category(s) => s.clone(),
            Cell::Missing => String::new(),
        }));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

pub fn write_csv_file(table: &DataTable, path: &Path, id_column: Option<&str>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file), id_column)
}

pub fn to_csv_string(table: &DataTable, id_column: Option<&str>) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf, id_column)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<DataTable> {
        parse_csv(s.as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn single_numeric_row() {
        let t = parse("GRE,CGPA\n330,9.7\n").unwrap();
        assert_eq!(t.n_rows(), 1);
        assert_eq!(t.kind_of("GRE"), Some(ColumnKind::Numeric));
        assert_eq!(t.kind_of("CGPA"), Some(ColumnKind::Numeric));
        assert_eq!(t.row(0), &[Cell::Number(330.0), Cell::Number(9.7)]);
    }

    #[test]
    fn empty_field_and_na_are_missing() {
        let t = parse("GRE,CGPA\n330,\nNA,9.1\n").unwrap();
        assert_eq!(t.row(0)[1], Cell::Missing);
        assert_eq!(t.row(1)[0], Cell::Missing);
        assert_eq!(t.kind_of("GRE"), Some(ColumnKind::Numeric));
    }

    #[test]
    fn header_only_gives_empty_table() {
        let t = parse("GRE,CGPA\n").unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.n_cols(), 2);
    }

    #[test]
    fn ragged_row_names_the_row() {
        let err = parse("a,b\n1,2\n3\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse(""), Err(Error::Empty(_))));
    }

    #[test]
    fn schema_overrides_inference_and_quoting_works() {
        let mut opts = ParseOptions::default();
        opts.schema.insert("Research".into(), ColumnKind::Categorical);
        let t = parse_csv(
            "Research,note\n1,\"a, b\"\n0,\"say \"\"hi\"\"\"\n".as_bytes(),
            &opts,
        )
        .unwrap();
        assert_eq!(t.kind_of("Research"), Some(ColumnKind::Categorical));
        assert_eq!(t.row(0)[1], Cell::Category("a, b".into()));
        assert_eq!(t.row(1)[1], Cell::Category("say \"hi\"".into()));
    }

    #[test]
    fn headers_are_trimmed() {
        let t = parse("LOR ,Chance of Admit \n4.5,0.92\n").unwrap();
        assert!(t.column_index("LOR").is_some());
        assert!(t.column_index("Chance of Admit").is_some());
    }

    #[test]
    fn id_column_round_trips() {
        let t = parse_csv(
            "row_id,x\n4,1.5\n9,2\n".as_bytes(),
            &ParseOptions::default().with_id_column("row_id"),
        )
        .unwrap();
        assert_eq!(t.row_ids(), &[4, 9]);
        assert_eq!(t.n_cols(), 1);
        let s = to_csv_string(&t, Some("row_id")).unwrap();
        assert_eq!(s, "row_id,x\n4,1.5\n9,2\n");
    }

    fn cell_strategy(kind: ColumnKind) -> BoxedStrategy<Cell> {
        match kind {
            ColumnKind::Numeric => prop_oneof![
                4 => (-1.0e6f64..1.0e6).prop_map(Cell::Number),
                1 => Just(Cell::Missing),
            ]
            .boxed(),
            ColumnKind::Categorical => prop_oneof![
                4 => "[a-zA-Z][a-zA-Z ,\"']{0,8}".prop_map(|s| Cell::Category(s.trim().to_string())),
                1 => Just(Cell::Missing),
            ]
            .prop_map(|c| match c {
                Cell::Category(s) if s.is_empty() || s == "NA" => Cell::Missing,
                other => other,
            })
            .boxed(),
        }
    }

    fn table_strategy() -> impl Strategy<Value = DataTable> {
        prop::collection::vec(
            prop_oneof![Just(ColumnKind::Numeric), Just(ColumnKind::Categorical)],
            1..5,
        )
        .prop_flat_map(|kinds| {
            let row = kinds.iter().map(|k| cell_strategy(*k)).collect::<Vec<_>>();
            (Just(kinds), prop::collection::vec(row, 0..12))
        })
        .prop_map(|(kinds, rows)| {
            let columns = kinds
                .iter()
                .enumerate()
                .map(|(i, k)| Column {
                    name: format!("c{i}"),
                    kind: *k,
                })
                .collect();
            let mut table = DataTable::new(columns).unwrap();
            for (r, cells) in rows.into_iter().enumerate() {
                table.push_row(r as u64 * 3, cells).unwrap();
            }
            table
        })
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(table in table_strategy()) {
            let mut opts = ParseOptions::default().with_id_column("row_id");
            for c in table.columns() {
                opts.schema.insert(c.name.clone(), c.kind);
            }
            let text = to_csv_string(&table, Some("row_id")).unwrap();
            let back = parse_csv(text.as_bytes(), &opts).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
