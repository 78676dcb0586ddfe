//! Turning a cleaned [`DataTable`] into a numeric [`FeatureMatrix`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Column, ColumnKind, DataTable};
use crate::error::{Error, Result};
use crate::fairness::SensitiveSpec;

pub const LABEL_COLUMN: &str = "Admission_Status";
pub const PERFORMANCE_COLUMN: &str = "Performance";

/// Dense row-major feature matrix with labels and the sensitive-attribute
/// groups of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    feature_names: Vec<String>,
    labels: Vec<u8>,
    sensitive: BTreeMap<String, Vec<String>>,
    row_ids: Vec<u64>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        sensitive: BTreeMap<String, Vec<String>>,
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        let n_rows = labels.len();
        if values.len() != n_rows * feature_names.len() {
            return Err(Error::Shape(format!(
                "{} values for {} rows x {} features",
                values.len(),
                n_rows,
                feature_names.len()
            )));
        }
        if row_ids.len() != n_rows {
            return Err(Error::Shape(format!("{} row ids for {n_rows} rows", row_ids.len())));
        }
        if let Some((name, col)) = sensitive.iter().find(|(_, c)| c.len() != n_rows) {
            return Err(Error::Shape(format!(
                "sensitive column `{name}` has {} rows, expected {n_rows}",
                col.len()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Shape("labels must be 0 or 1".into()));
        }
        Ok(FeatureMatrix {
            values,
            n_rows,
            feature_names,
            labels,
            sensitive,
            row_ids,
        })
    }

    /// Matrix from row vectors with sequential row ids and no sensitive columns.
    pub fn from_rows(rows: &[Vec<f64>], feature_names: Vec<String>, labels: Vec<u8>) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::Shape(format!(
                "row {bad} has {} values, expected {}",
                rows[bad].len(),
                feature_names.len()
            )));
        }
        let ids = (0..labels.len() as u64).collect();
        FeatureMatrix::new(rows.concat(), feature_names, labels, BTreeMap::new(), ids)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn sensitive(&self) -> &BTreeMap<String, Vec<String>> {
        &self.sensitive
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_features();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_features().max(1)).take(self.n_rows)
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            n_rows: indices.len(),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sensitive: self
                .sensitive
                .iter()
                .map(|(k, v)| (k.clone(), indices.iter().map(|&i| v[i].clone()).collect()))
                .collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Same rows and labels with a different value matrix of identical shape.
    pub fn with_values(&self, values: Vec<f64>) -> FeatureMatrix {
        assert_eq!(values.len(), self.values.len());
        FeatureMatrix {
            values,
            ..self.clone()
        }
    }

    /// Copy with column `j` replaced.
    pub fn with_column_replaced(&self, j: usize, column: &[f64]) -> FeatureMatrix {
        let mut out = self.clone();
        let w = self.n_features();
        for (i, v) in column.iter().enumerate() {
            out.values[i * w + j] = *v;
        }
        out
    }

    /// Appends a trailing feature column.
    pub fn with_appended_column(&self, name: &str, column: &[f64]) -> Result<FeatureMatrix> {
        if column.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "{} values for {} rows",
                column.len(),
                self.n_rows
            )));
        }
        if self.feature_names.iter().any(|n| n == name) {
            return Err(Error::Config(format!("feature `{name}` already present")));
        }
        let w = self.n_features();
        let mut values = Vec::with_capacity(self.values.len() + self.n_rows);
        for i in 0..self.n_rows {
            values.extend_from_slice(&self.values[i * w..(i + 1) * w]);
            values.push(column[i]);
        }
        let mut feature_names = self.feature_names.clone();
        feature_names.push(name.to_string());
        Ok(FeatureMatrix {
            values,
            feature_names,
            ..self.clone()
        })
    }

    /// Removes the trailing feature column.
    pub fn without_last_column(&self) -> FeatureMatrix {
        let w = self.n_features();
        assert!(w > 0, "no column to drop");
        let values = self
            .rows()
            .flat_map(|r| r[..w - 1].iter().copied())
            .collect();
        let mut feature_names = self.feature_names.clone();
        feature_names.pop();
        FeatureMatrix {
            values,
            feature_names,
            ..self.clone()
        }
    }

    /// Checks that the matrix carries exactly `expected` features in order.
    pub fn check_features(&self, expected: &[String]) -> Result<()> {
        if self.feature_names == expected {
            return Ok(());
        }
        let missing: Vec<&str> = expected
            .iter()
            .filter(|n| !self.feature_names.contains(n))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = self
            .feature_names
            .iter()
            .filter(|n| !expected.contains(n))
            .map(String::as_str)
            .collect();
        let detail = if missing.is_empty() && extra.is_empty() {
            "same features in a different order".to_string()
        } else {
            format!("missing {missing:?}, unexpected {extra:?}")
        };
        Err(Error::FeatureMismatch(detail))
    }
}

/// Label = 1 iff probability >= threshold.
pub fn binarize_label(probabilities: &[f64], row_ids: &[u64], threshold: f64) -> Result<Vec<u8>> {
    probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if !(0.0..=1.0).contains(&p) {
                Err(Error::OutOfRange {
                    row: row_ids.get(i).copied().unwrap_or(i as u64),
                    value: p,
                })
            } else {
                Ok(u8::from(p >= threshold))
            }
        })
        .collect()
}

/// Replaces the probability column of `table` with a 0/1 label column.
pub fn add_binary_label(
    table: &DataTable,
    probability_column: &str,
    label_column: &str,
    threshold: f64,
) -> Result<DataTable> {
    let probs = table.numeric_column(probability_column)?;
    let values: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::MissingField(format!("{probability_column} at row {}", table.row_ids()[i]))))
        .collect::<Result<_>>()?;
    let labels = binarize_label(&values, table.row_ids(), threshold)?;
    let mut out = table.drop_columns(&[probability_column.to_string()]);
    out.add_column(
        Column::numeric(label_column),
        labels.into_iter().map(|y| Cell::Number(f64::from(y))).collect(),
    )?;
    Ok(out)
}

/// Indicator encoding for one categorical column. Categories are sorted;
/// values unseen at fit time encode as all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    pub column: String,
    pub categories: Vec<String>,
}

impl OneHotEncoder {
    pub fn fit(table: &DataTable, column: &str) -> Result<Self> {
        let values = table.categorical_column(column)?;
        let mut categories = Vec::new();
        for v in values {
            let v = v.ok_or_else(|| Error::ColumnKind {
                column: column.to_string(),
                message: "one-hot input must be imputed first".into(),
            })?;
            categories.push(v);
        }
        categories.sort();
        categories.dedup();
        Ok(OneHotEncoder {
            column: column.to_string(),
            categories,
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.categories
            .iter()
            .map(|c| format!("{}={c}", self.column))
            .collect()
    }

    pub fn encode(&self, value: &str) -> Vec<f64> {
        self.categories
            .iter()
            .map(|c| if c == value { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Fits one encoder per named column and returns the expanded names and
/// row-major indicator rows.
pub fn one_hot(table: &DataTable, columns: &[&str]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let encoders: Vec<OneHotEncoder> = columns
        .iter()
        .map(|c| OneHotEncoder::fit(table, c))
        .collect::<Result<_>>()?;
    let names = encoders.iter().flat_map(|e| e.feature_names()).collect();
    let indices: Vec<usize> = columns
        .iter()
        .map(|c| table.require_column(c))
        .collect::<Result<_>>()?;
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            encoders
                .iter()
                .zip(&indices)
                .flat_map(|(e, &j)| e.encode(row[j].as_category().unwrap_or_default()))
                .collect()
        })
        .collect();
    Ok((names, rows))
}

/// Mean of the three subject scores.
pub fn composite_performance(math: Option<f64>, reading: Option<f64>, writing: Option<f64>) -> Result<f64> {
    let m = math.ok_or_else(|| Error::MissingField("math score".into()))?;
    let r = reading.ok_or_else(|| Error::MissingField("reading score".into()))?;
    let w = writing.ok_or_else(|| Error::MissingField("writing score".into()))?;
    if m < 0.0 || r < 0.0 || w < 0.0 {
        return Err(Error::Config("subject scores must be non-negative".into()));
    }
    Ok((m + r + w) / 3.0)
}

/// Adds a `Performance` column averaging three score columns and removes
/// the inputs. Rows where the source columns are all missing (other
/// contexts after a merge) get a missing composite.
pub fn add_composite(table: &DataTable, sources: &[String; 3], name: &str) -> Result<DataTable> {
    let cols: Vec<Vec<Option<f64>>> = sources
        .iter()
        .map(|s| table.numeric_column(s))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(table.n_rows());
    for i in 0..table.n_rows() {
        let (m, r, w) = (cols[0][i], cols[1][i], cols[2][i]);
        cells.push(if m.is_none() && r.is_none() && w.is_none() {
            Cell::Missing
        } else {
            Cell::Number(composite_performance(m, r, w)?)
        });
    }
    let mut out = table.drop_columns(&sources.to_vec());
    out.add_column(Column::numeric(name), cells)?;
    Ok(out)
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl Scaler {
    pub fn identity(width: usize) -> Self {
        Scaler {
            means: vec![0.0; width],
            stddevs: vec![1.0; width],
        }
    }

    pub fn fit(matrix: &FeatureMatrix) -> Scaler {
        let n = matrix.n_rows().max(1) as f64;
        let w = matrix.n_features();
        let mut means = vec![0.0; w];
        for row in matrix.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; w];
        for row in matrix.rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stddevs = vars.into_iter().map(|s| (s / n).sqrt()).collect();
        Scaler { means, stddevs }
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let sd = self.stddevs[j];
        if sd == 0.0 {
            0.0
        } else {
            (v - self.means[j]) / sd
        }
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.n_features() != self.width() {
            return Err(Error::Shape(format!(
                "scaler fit on {} features applied to {}",
                self.width(),
                matrix.n_features()
            )));
        }
        let w = self.width();
        let values = matrix
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| self.transform_value(k % w, v))
            .collect();
        Ok(matrix.with_values(values))
    }
}

pub fn fit_scaler(matrix: &FeatureMatrix) -> Scaler {
    Scaler::fit(matrix)
}

pub fn apply_scaler(scaler: &Scaler, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    scaler.apply(matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    /// CSV with feature names as row and column headers.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Pearson correlations between equally long columns. Pairs involving a
/// zero-variance column are 0; the diagonal is always 1.
pub fn correlation_matrix(names: &[String], columns: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if names.len() != columns.len() {
        return Err(Error::Shape("one name per column required".into()));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Shape("columns differ in length".into()));
    }
    if n < 2 {
        return Err(Error::Shape(format!("correlation needs at least 2 rows, got {n}")));
    }
    let centered: Vec<(Vec<f64>, f64)> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n as f64;
            let d: Vec<f64> = c.iter().map(|v| v - mean).collect();
            let ss = d.iter().map(|v| v * v).sum::<f64>();
            (d, ss)
        })
        .collect();
    let k = columns.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in i + 1..k {
            let (di, si) = &centered[i];
            let (dj, sj) = &centered[j];
            let r = if *si == 0.0 || *sj == 0.0 {
                0.0
            } else {
                let cov: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
                (cov / (si * sj).sqrt()).clamp(-1.0, 1.0)
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        values,
    })
}

/// Fitted recipe that maps a cleaned table onto model features: numeric
/// columns pass through, categorical columns are one-hot encoded, the
/// label and sensitive columns are set aside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub label_column: String,
    pub inputs: Vec<PlanInput>,
    pub sensitive: Vec<SensitiveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanInput {
    Numeric { column: String },
    OneHot(OneHotEncoder),
}

impl FeaturePlan {
    pub fn fit(
        table: &DataTable,
        label_column: &str,
        sensitive: &[SensitiveSpec],
        exclude: &[String],
    ) -> Result<Self> {
        table.require_column(label_column)?;
        for s in sensitive {
            table.require_column(&s.column)?;
        }
        let mut inputs = Vec::new();
        for col in table.columns() {
            let skip = col.name == label_column
                || sensitive.iter().any(|s| s.column == col.name)
                || exclude.contains(&col.name);
            if skip {
                continue;
            }
            inputs.push(match col.kind {
                ColumnKind::Numeric => PlanInput::Numeric {
                    column: col.name.clone(),
                },
                ColumnKind::Categorical => PlanInput::OneHot(OneHotEncoder::fit(table, &col.name)?),
            });
        }
        Ok(FeaturePlan {
            label_column: label_column.to_string(),
            inputs,
            sensitive: sensitive.to_vec(),
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.inputs
            .iter()
            .flat_map(|i| match i {
                PlanInput::Numeric { column } => vec![column.clone()],
                PlanInput::OneHot(e) => e.feature_names(),
            })
            .collect()
    }

    pub fn transform(&self, table: &DataTable) -> Result<FeatureMatrix> {
        let label_idx = table.require_column(&self.label_column)?;
        let mut labels = Vec::with_capacity(table.n_rows());
        for (i, row) in table.rows().iter().enumerate() {
            match row[label_idx] {
                Cell::Number(v) if v == 0.0 || v == 1.0 => labels.push(v as u8),
                _ => {
                    return Err(Error::ColumnKind {
                        column: self.label_column.clone(),
                        message: format!("row {} is not a 0/1 label", table.row_ids()[i]),
                    })
                }
            }
        }

        let indices: Vec<usize> = self
            .inputs
            .iter()
            .map(|i| match i {
                PlanInput::Numeric { column } => {
                    let j = table.require_column(column)?;
                    if table.columns()[j].kind != ColumnKind::Numeric {
                        return Err(Error::ColumnKind {
                            column: column.clone(),
                            message: "expected a numeric column".into(),
                        });
                    }
                    Ok(j)
                }
                PlanInput::OneHot(e) => table.require_column(&e.column),
            })
            .collect::<Result<_>>()?;
        let names = self.feature_names();
        let mut values = Vec::with_capacity(table.n_rows() * names.len());
        for (i, row) in table.rows().iter().enumerate() {
            for (input, &j) in self.inputs.iter().zip(&indices) {
                match input {
                    PlanInput::Numeric { column } => match row[j] {
                        Cell::Number(v) if v.is_finite() => values.push(v),
                        _ => {
                            return Err(Error::NonFinite {
                                feature: column.clone(),
                                row: i,
                            })
                        }
                    },
                    PlanInput::OneHot(e) => {
                        values.extend(e.encode(row[j].as_category().unwrap_or_default()))
                    }
                }
            }
        }

        let mut sensitive = BTreeMap::new();
        for spec in &self.sensitive {
            let j = table.require_column(&spec.column)?;
            let groups = table
                .column_cells(j)
                .map(|c| spec.group_of(c))
                .collect();
            sensitive.insert(spec.attribute.clone(), groups);
        }
        FeatureMatrix::new(values, names, labels, sensitive, table.row_ids().to_vec())
    }
}
