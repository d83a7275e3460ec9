//! Datasets, preprocessing, fold plans, metrics and synthetic data.

mod folds;
mod io;
mod metrics;
mod preprocess;
mod synth;

pub use folds::{make_folds, FoldPlan};
pub use io::{load_dataset, load_features, read_dataset, write_dataset, DataFormat, TargetColumn};
pub use metrics::{evaluate, mean_functional_margin, Metrics};
pub use preprocess::{
    apply_minmax, apply_pca, fit_minmax, fit_pca, NormalizationMap, PcaTransform, Preprocessor,
};
pub use synth::{synth_two_lines, LineGroup, TwoLines, TwoLinesParams};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Dense regression data: `n` rows of `d` features plus one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub targets: Vec<f64>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, targets: Vec<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::invalid("dataset must contain at least one row"));
        }
        if targets.len() != features.nrows() {
            return Err(Error::dims(features.nrows(), targets.len()));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Dataset {
            features,
            targets,
            feature_names: None,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::dims(d, bad.len()));
        }
        let features = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(features, targets)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::dims(self.n_features(), names.len()));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// All rows copied into contiguous vectors.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_samples()).map(|i| self.row(i)).collect()
    }

    /// The sub-dataset made of the given row indices, in order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select_rows(indices);
        let targets = indices.iter().map(|&i| self.targets[i]).collect();
        Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
        }
    }
}
