use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Category(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            Cell::Category(s) => Some(s),
            _ => None,
        }
    }

    fn fits(&self, kind: ColumnKind) -> bool {
        match self {
            Cell::Missing => true,
            Cell::Number(_) => kind == ColumnKind::Numeric,
            Cell::Category(_) => kind == ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
        }
    }
}

/// Named, typed columns of numeric, categorical or missing cells.
///
/// Each row carries a stable integer id that survives filtering, so
/// cleaning logs and prediction files can point back at source rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
    row_ids: Vec<u64>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|p| p.name == c.name) {
                return Err(Error::Config(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(DataTable {
            columns,
            rows: Vec::new(),
            row_ids: Vec::new(),
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[Cell] {
        &self.rows[index]
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.column_index(name).map(|i| self.columns[i].kind)
    }

    pub fn push_row(&mut self, id: u64, cells: Vec<Cell>) -> Result<()> {
        if cells.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row {id} has {} cells, table has {} columns",
                cells.len(),
                self.columns.len()
            )));
        }
        for (cell, col) in cells.iter().zip(&self.columns) {
            if !cell.fits(col.kind) {
                return Err(Error::ColumnKind {
                    column: col.name.clone(),
                    message: format!("row {id} holds a value of the wrong kind"),
                });
            }
        }
        if self.row_ids.contains(&id) {
            return Err(Error::Shape(format!("duplicate row id {id}")));
        }
        self.rows.push(cells);
        self.row_ids.push(id);
        Ok(())
    }

    /// Cells of one column in row order.
    pub fn column_cells(&self, index: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[index])
    }

    /// Numeric column as optional values; `None` marks a missing cell.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self.require_column(name)?;
        if self.columns[idx].kind != ColumnKind::Numeric {
            return Err(Error::ColumnKind {
                column: name.to_string(),
                message: "expected a numeric column".into(),
            });
        }
        Ok(self.column_cells(idx).map(Cell::as_number).collect())
    }

    pub fn categorical_column(&self, name: &str) -> Result<Vec<Option<String>>> {
        let idx = self.require_column(name)?;
        if self.columns[idx].kind != ColumnKind::Categorical {
            return Err(Error::ColumnKind {
                column: name.to_string(),
                message: "expected a categorical column".into(),
            });
        }
        Ok(self
            .column_cells(idx)
            .map(|c| c.as_category().map(str::to_string))
            .collect())
    }

    pub fn missing_count(&self, index: usize) -> usize {
        self.column_cells(index).filter(|c| c.is_missing()).count()
    }

    /// New table holding the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DataTable {
        DataTable {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Keeps the rows for which `keep` returns true.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize, &[Cell]) -> bool) -> DataTable {
        let indices: Vec<usize> = (0..self.n_rows())
            .filter(|&i| keep(i, &self.rows[i]))
            .collect();
        self.select_rows(&indices)
    }

    pub fn drop_columns(&self, names: &[String]) -> DataTable {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&i| !names.contains(&self.columns[i].name))
            .collect();
        DataTable {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
                .collect(),
            row_ids: self.row_ids.clone(),
        }
    }

    pub fn rename_column(&mut self, from: &str, to: &str) -> Result<()> {
        let i = self.require_column(from)?;
        if from != to && self.column_index(to).is_some() {
            return Err(Error::Config(format!("duplicate column `{to}`")));
        }
        self.columns[i].name = to.to_string();
        Ok(())
    }

    /// Appends a column; `cells` must have one entry per row.
    pub fn add_column(&mut self, column: Column, cells: Vec<Cell>) -> Result<()> {
        if self.column_index(&column.name).is_some() {
            return Err(Error::Config(format!("duplicate column `{}`", column.name)));
        }
        if cells.len() != self.n_rows() {
            return Err(Error::Shape(format!(
                "column `{}` has {} cells for {} rows",
                column.name,
                cells.len(),
                self.n_rows()
            )));
        }
        if let Some(bad) = cells.iter().position(|c| !c.fits(column.kind)) {
            return Err(Error::ColumnKind {
                column: column.name,
                message: format!("row {} holds a value of the wrong kind", self.row_ids[bad]),
            });
        }
        for (row, cell) in self.rows.iter_mut().zip(cells) {
            row.push(cell);
        }
        self.columns.push(column);
        Ok(())
    }

    /// Replaces every cell of column `index`.
    pub(crate) fn set_column(&mut self, index: usize, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.n_rows());
        for (row, cell) in self.rows.iter_mut().zip(cells) {
            row[index] = cell;
        }
    }

    pub(crate) fn from_parts(
        columns: Vec<Column>,
        rows: Vec<Vec<Cell>>,
        row_ids: Vec<u64>,
    ) -> DataTable {
        debug_assert_eq!(rows.len(), row_ids.len());
        DataTable {
            columns,
            rows,
            row_ids,
        }
    }
}
