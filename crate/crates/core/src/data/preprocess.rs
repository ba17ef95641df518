use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{ColumnKind, Dataset, Table};
use crate::error::{DevNetError, Result};

/// Standard deviations at or below this are treated as constant features.
pub const STD_FLOOR: f64 = 1e-12;

/// How one raw column becomes numeric features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnEncoding {
    /// Missing cells are replaced by `fill`, the mean of observed values.
    Numeric { name: String, fill: f64 },
    /// One indicator column per level; missing or unseen values encode as all zeros.
    Categorical { name: String, levels: Vec<String> },
}

impl ColumnEncoding {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoding::Numeric { name, .. } | ColumnEncoding::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::Categorical { levels, .. } => levels.len(),
        }
    }
}

/// Fitted mean imputation plus one-hot encoding for a table's feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub columns: Vec<ColumnEncoding>,
}

impl Encoder {
    pub fn fit(table: &Table) -> Result<Self> {
        let mut columns = Vec::new();
        for (c, name, kind) in table.feature_columns() {
            match kind {
                ColumnKind::Numeric => {
                    let mut sum = 0.0;
                    let mut n = 0usize;
                    for cell in table.column(c).flatten() {
                        sum += parse_number(name, cell)?;
                        n += 1;
                    }
                    if n == 0 {
                        return Err(DevNetError::EmptyNumericColumn(name.to_string()));
                    }
                    columns.push(ColumnEncoding::Numeric {
                        name: name.to_string(),
                        fill: sum / n as f64,
                    });
                }
                ColumnKind::Categorical => {
                    let levels: BTreeSet<&str> = table.column(c).flatten().collect();
                    columns.push(ColumnEncoding::Categorical {
                        name: name.to_string(),
                        levels: levels.into_iter().map(str::to_string).collect(),
                    });
                }
            }
        }
        Ok(Encoder { columns })
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for col in &self.columns {
            match col {
                ColumnEncoding::Numeric { name, .. } => names.push(name.clone()),
                ColumnEncoding::Categorical { name, levels } => {
                    names.extend(levels.iter().map(|l| format!("{name}={l}")))
                }
            }
        }
        names
    }

    /// Encodes a table's cells; the table must contain every fitted column.
    pub fn transform_features(&self, table: &Table) -> Result<Array2<f64>> {
        let missing: Vec<&str> = self
            .columns
            .iter()
            .map(ColumnEncoding::name)
            .filter(|n| table.column_index(n).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(DevNetError::SchemaMismatch(format!(
                "input lacks column(s) the model was trained on: {}",
                missing.join(", ")
            )));
        }
        let mut out = Array2::zeros((table.n_rows(), self.width()));
        let mut offset = 0;
        for col in &self.columns {
            let c = table.column_index(col.name()).expect("checked above");
            match col {
                ColumnEncoding::Numeric { name, fill } => {
                    for (r, cell) in table.column(c).enumerate() {
                        out[[r, offset]] = match cell {
                            Some(v) => parse_number(name, v)?,
                            None => *fill,
                        };
                    }
                }
                ColumnEncoding::Categorical { levels, .. } => {
                    for (r, cell) in table.column(c).enumerate() {
                        if let Some(pos) = cell.and_then(|v| levels.iter().position(|l| l == v)) {
                            out[[r, offset + pos]] = 1.0;
                        }
                    }
                }
            }
            offset += col.width();
        }
        Ok(out)
    }

    pub fn transform(&self, table: &Table) -> Result<Dataset> {
        let features = self.transform_features(table)?;
        Dataset::new(features, table.labels()?, self.feature_names())
    }
}

fn parse_number(column: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| {
        DevNetError::SchemaMismatch(format!("column {column:?} is numeric but holds {cell:?}"))
    })
}

/// Mean imputation and one-hot encoding fitted on the table itself.
pub fn preprocess(table: &Table) -> Result<Dataset> {
    Encoder::fit(table)?.transform(table)
}

/// Per-feature centering and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; features at or below [`STD_FLOOR`] are only centered.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: ArrayView2<'_, f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(DevNetError::DegenerateInput(
                "cannot standardize an empty split",
            ));
        }
        let mean = features.mean_axis(Axis(0)).expect("non-empty");
        let std = features.std_axis(Axis(0), 0.0);
        Ok(Standardizer {
            mean: mean.to_vec(),
            std: std.to_vec(),
        })
    }

    pub fn transform(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.mean.len() {
            return Err(DevNetError::shape(
                "standardizer columns",
                self.mean.len(),
                features.ncols(),
            ));
        }
        let mut out = features.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            if s > STD_FLOOR {
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.mapv_inplace(|v| v - m);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        Ok(Dataset {
            features: self.transform(ds.features.view())?,
            labels: ds.labels.clone(),
            feature_names: ds.feature_names.clone(),
        })
    }
}

/// Fits a standardizer on `train` only and applies it to `train` and every other split.
pub fn standardize_fit_apply(
    train: &Dataset,
    others: &[&Dataset],
) -> Result<(Dataset, Vec<Dataset>, Standardizer)> {
    let scaler = Standardizer::fit(train.features.view())?;
    let train_out = scaler.apply(train)?;
    let others_out = others
        .iter()
        .map(|ds| scaler.apply(ds))
        .collect::<Result<Vec<_>>>()?;
    Ok((train_out, others_out, scaler))
}
