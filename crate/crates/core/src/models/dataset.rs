use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::ProblemShape;

pub const DATASET_VERSION: u32 = 1;

/// Features, labels and realized expert costs, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetDoc", into = "DatasetDoc")]
pub struct LabeledDataset {
    shape: ProblemShape,
    input_dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    costs: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(
        shape: ProblemShape,
        input_dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        costs: Vec<f64>,
    ) -> Result<Self> {
        shape.validate()?;
        let m = labels.len();
        if input_dim == 0 {
            return Err(Error::InvalidShape("input_dim must be positive".into()));
        }
        if features.len() != m * input_dim {
            return Err(Error::InvalidShape(format!(
                "{} feature values for {m} rows of width {input_dim}",
                features.len()
            )));
        }
        if costs.len() != m * shape.n_e {
            return Err(Error::InvalidShape(format!(
                "{} cost values for {m} rows of {} experts",
                costs.len(),
                shape.n_e
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= shape.n) {
            return Err(Error::LabelOutOfRange { label: y, n: shape.n });
        }
        if let Some(c) = costs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidCosts(format!("cost {c} outside [0, 1]")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("non-finite feature".into()));
        }
        Ok(Self { shape, input_dim, features, labels, costs })
    }

    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn costs(&self, i: usize) -> &[f64] {
        let n_e = self.shape.n_e;
        &self.costs[i * n_e..(i + 1) * n_e]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copy with features mapped to `(x − mean)/std`.
    pub(crate) fn standardized(&self, mean: &[f64], std: &[f64]) -> Self {
        let mut out = self.clone();
        for row in out.features.chunks_mut(self.input_dim) {
            for ((v, m), s) in row.iter_mut().zip(mean).zip(std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    /// Per-feature mean and population standard deviation; constant features
    /// get unit scale.
    pub fn feature_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.input_dim;
        let m = self.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in self.features.chunks(d) {
            for (a, v) in mean.iter_mut().zip(row) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m);
        let mut var = vec![0.0; d];
        for row in self.features.chunks(d) {
            for ((a, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                *a += (v - mu) * (v - mu);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / m).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        (mean, std)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetDoc {
    version: u32,
    shape: ProblemShape,
    input_dim: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    costs: Vec<Vec<f64>>,
}

impl From<LabeledDataset> for DatasetDoc {
    fn from(d: LabeledDataset) -> Self {
        DatasetDoc {
            version: DATASET_VERSION,
            shape: d.shape,
            input_dim: d.input_dim,
            features: d.features.chunks(d.input_dim).map(<[f64]>::to_vec).collect(),
            labels: d.labels,
            costs: d.costs.chunks(d.shape.n_e).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<DatasetDoc> for LabeledDataset {
    type Error = Error;

    fn try_from(doc: DatasetDoc) -> Result<Self> {
        if doc.version != DATASET_VERSION {
            return Err(Error::Serialization(format!("unsupported dataset version {}", doc.version)));
        }
        if doc.features.iter().any(|r| r.len() != doc.input_dim)
            || doc.costs.iter().any(|r| r.len() != doc.shape.n_e)
        {
            return Err(Error::InvalidShape("ragged feature or cost rows".into()));
        }
        LabeledDataset::new(
            doc.shape,
            doc.input_dim,
            doc.features.concat(),
            doc.labels,
            doc.costs.concat(),
        )
    }
}
