use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Raw CSV cells with per-column kinds. Empty cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    kinds: Vec<ColumnKind>,
    rows: Vec<Vec<Option<String>>>,
    label_column: Option<usize>,
    positive_token: String,
}

/// Reads a labeled CSV file with a header row.
pub fn load_csv(path: &Path, label_column: &str, positive_token: &str) -> Result<Table> {
    Table::open(path, Some(label_column), positive_token)
}

impl Table {
    pub fn open(path: &Path, label_column: Option<&str>, positive_token: &str) -> Result<Table> {
        let file = File::open(path).map_err(|source| DevNetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Table::from_reader(file, label_column, positive_token)
    }

    /// Parses RFC 4180 CSV. Column kinds are inferred: a column whose
    /// observed cells all parse as numbers is numeric, otherwise categorical.
    pub fn from_reader<R: Read>(
        reader: R,
        label_column: Option<&str>,
        positive_token: &str,
    ) -> Result<Table> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = csv
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let label_idx = match label_column {
            Some(name) => Some(
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| DevNetError::MissingLabelColumn(name.to_string()))?,
            ),
            None => None,
        };
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(DevNetError::RaggedRow {
                    row: i + 1,
                    expected: header.len(),
                    actual: record.len(),
                });
            }
            rows.push(
                record
                    .iter()
                    .map(|cell| {
                        let cell = cell.trim();
                        (!cell.is_empty()).then(|| cell.to_string())
                    })
                    .collect(),
            );
        }
        let kinds = (0..header.len())
            .map(|c| {
                let numeric = rows
                    .iter()
                    .filter_map(|r: &Vec<Option<String>>| r[c].as_deref())
                    .all(|v| v.parse::<f64>().is_ok());
                if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            })
            .collect();
        Ok(Table {
            header,
            kinds,
            rows,
            label_column: label_idx,
            positive_token: positive_token.to_string(),
        })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn kind(&self, name: &str) -> Option<ColumnKind> {
        self.column_index(name).map(|i| self.kinds[i])
    }

    /// Overrides the inferred kind of one column.
    pub fn set_kind(&mut self, name: &str, kind: ColumnKind) -> Result<()> {
        let i = self
            .column_index(name)
            .ok_or_else(|| DevNetError::SchemaMismatch(format!("no column named {name:?}")))?;
        self.kinds[i] = kind;
        Ok(())
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.map(|i| self.header[i].as_str())
    }

    /// Feature columns (every column except the label) with their kinds.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &str, ColumnKind)> + '_ {
        (0..self.header.len())
            .filter(move |&i| Some(i) != self.label_column)
            .map(move |i| (i, self.header[i].as_str(), self.kinds[i]))
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&str> {
        self.rows[row][col].as_deref()
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<&str>> + '_ {
        self.rows.iter().map(move |r| r[col].as_deref())
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Row labels: a label cell equal to the positive token marks an anomaly.
    pub fn labels(&self) -> Result<Vec<Label>> {
        let c = self
            .label_column
            .ok_or_else(|| DevNetError::SchemaMismatch("table has no label column".into()))?;
        Ok(self
            .column(c)
            .map(|v| Label::from_bool(v == Some(self.positive_token.as_str())))
            .collect())
    }

    /// Distinct raw tokens in the label column.
    pub fn label_tokens(&self) -> HashSet<String> {
        match self.label_column {
            Some(c) => self.column(c).flatten().map(str::to_string).collect(),
            None => HashSet::new(),
        }
    }
}
