//! Kernel evaluation and the bias-augmented Gram matrix.
//!
//! Every kernel value used for training or prediction is `K(a, b) + 1`: the
//! extra constant is the inner product of the appended bias coordinates, so
//! models carry no separate intercept.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `exp(-gamma * ||a - b||²)`, `gamma > 0`.
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(KernelSpec::Rbf { gamma })
        } else {
            Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")))
        }
    }

    /// RBF with `gamma = 1 / d`, the usual default after preprocessing.
    pub fn rbf_default(d: usize) -> Self {
        KernelSpec::Rbf { gamma: 1.0 / d.max(1) as f64 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf {gamma}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `linear` or `rbf <gamma>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some("linear"), None, None) => Ok(KernelSpec::Linear),
            (Some("rbf"), Some(g), None) => {
                let gamma = g.parse().map_err(|_| Error::invalid(format!("bad gamma `{g}`")))?;
                KernelSpec::rbf(gamma)
            }
            _ => Err(Error::invalid(format!("unknown kernel `{s}`"))),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    Ok(raw_kernel(spec, a, b))
}

#[inline]
fn raw_kernel(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match *spec {
        KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        KernelSpec::Rbf { gamma } => {
            let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * sq).exp()
        }
    }
}

/// Augmented Gram matrix `G[i][j] = K(x_i, x_j) + 1` over the rows of
/// `features`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub spec: KernelSpec,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

pub fn gram_augmented(spec: &KernelSpec, features: &DMatrix<f64>) -> GramMatrix {
    let n = features.nrows();
    let rows: Vec<Vec<f64>> = features.row_iter().map(|r| r.iter().copied().collect()).collect();
    // upper triangle row by row, mirrored afterwards so the result is exactly symmetric
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| raw_kernel(spec, &rows[i], &rows[j]) + 1.0).collect())
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            values[(i, i + off)] = v;
            values[(i + off, i)] = v;
        }
    }
    GramMatrix { values, spec: *spec }
}

/// `K(x_i, query) + 1` for every row `x_i` of `support_points`.
pub fn kernel_row(spec: &KernelSpec, support_points: &DMatrix<f64>, query: &[f64]) -> Result<Vec<f64>> {
    if support_points.nrows() == 0 {
        return Ok(Vec::new());
    }
    if support_points.ncols() != query.len() {
        return Err(Error::dims(support_points.ncols(), query.len()));
    }
    let mut row = vec![0.0; support_points.ncols()];
    Ok((0..support_points.nrows())
        .map(|i| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = support_points[(i, j)];
            }
            raw_kernel(spec, &row, query) + 1.0
        })
        .collect())
}
