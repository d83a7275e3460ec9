//! Min-max normalization and variance-threshold PCA.
//!
//! Both transforms are fit on a training split and then applied unchanged to
//! any other split. Out-of-range values are extrapolated affinely, never
//! clipped.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Dataset;
use crate::{Error, Result};

/// Per-feature and target `(min, max)` ranges seen during fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationMap {
    pub features: Vec<(f64, f64)>,
    pub target: (f64, f64),
}

fn range_of(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

// constant ranges map everything to 0
fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

fn unscale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        v * (hi - lo) + lo
    } else {
        lo
    }
}

pub fn fit_minmax(train: &Dataset) -> NormalizationMap {
    let features = (0..train.n_features())
        .map(|j| range_of(train.features.column(j).iter().copied()))
        .collect();
    NormalizationMap {
        features,
        target: range_of(train.targets.iter().copied()),
    }
}

pub fn apply_minmax(map: &NormalizationMap, data: &Dataset) -> Result<Dataset> {
    if data.n_features() != map.features.len() {
        return Err(Error::dims(map.features.len(), data.n_features()));
    }
    let features = DMatrix::from_fn(data.n_samples(), data.n_features(), |i, j| {
        scale(data.features[(i, j)], map.features[j])
    });
    let targets = data.targets.iter().map(|&y| scale(y, map.target)).collect();
    Ok(Dataset {
        features,
        targets,
        feature_names: data.feature_names.clone(),
    })
}

impl NormalizationMap {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.features).map(|(&v, &r)| scale(v, r)).collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.features).map(|(&v, &r)| unscale(v, r)).collect()
    }

    pub fn transform_target(&self, y: f64) -> f64 {
        scale(y, self.target)
    }

    pub fn inverse_target(&self, v: f64) -> f64 {
        unscale(v, self.target)
    }
}

/// Projection onto the leading principal axes of the training features.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform {
    pub mean: DVector<f64>,
    /// `d x k`, orthonormal columns ordered by decreasing variance.
    pub components: DMatrix<f64>,
    pub retained_variance_fraction: f64,
}

/// Keeps the smallest number of components whose cumulative explained
/// variance reaches `variance_threshold` (a fraction in `(0, 1]`).
pub fn fit_pca(train: &Dataset, variance_threshold: f64) -> Result<PcaTransform> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "variance threshold must lie in (0, 1], got {variance_threshold}"
        )));
    }
    let (n, d) = (train.n_samples(), train.n_features());
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two samples"));
    }
    if d == 0 {
        return Err(Error::ZeroVariance);
    }
    let mean = train.features.row_mean().transpose();
    let mut centered = train.features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let variances: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    let scale_ref = train.features.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if total <= f64::EPSILON * scale_ref * scale_ref {
        return Err(Error::ZeroVariance);
    }

    let mut cumulative = 0.0;
    let mut k = d;
    for (i, v) in variances.iter().enumerate() {
        cumulative += v;
        if cumulative >= variance_threshold * total {
            k = i + 1;
            break;
        }
    }
    let retained: f64 = variances[..k].iter().sum::<f64>() / total;

    let mut components = DMatrix::zeros(d, k);
    for (c, &i) in order[..k].iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // sign convention: largest-magnitude entry positive
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            v = -v;
        }
        components.set_column(c, &v);
    }
    Ok(PcaTransform {
        mean,
        components,
        retained_variance_fraction: retained.min(1.0),
    })
}

pub fn apply_pca(t: &PcaTransform, data: &Dataset) -> Result<Dataset> {
    if data.n_features() != t.mean.len() {
        return Err(Error::dims(t.mean.len(), data.n_features()));
    }
    let mut centered = data.features.clone();
    for mut row in centered.row_iter_mut() {
        row -= t.mean.transpose();
    }
    let features = centered * &t.components;
    let names = (1..=t.n_components()).map(|j| format!("pc{j}")).collect();
    Dataset {
        features,
        targets: data.targets.clone(),
        feature_names: None,
    }
    .with_feature_names(names)
}

impl PcaTransform {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let centered = DVector::from_iterator(row.len(), row.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        (self.components.transpose() * centered).iter().copied().collect()
    }
}

/// Training-split preprocessing: min-max normalization of features and
/// target, optionally followed by PCA on the normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub normalization: NormalizationMap,
    pub pca: Option<PcaTransform>,
}

impl Preprocessor {
    pub fn fit(train: &Dataset, pca_variance: Option<f64>) -> Result<Self> {
        let normalization = fit_minmax(train);
        let pca = match pca_variance {
            Some(threshold) => Some(fit_pca(&apply_minmax(&normalization, train)?, threshold)?),
            None => None,
        };
        Ok(Preprocessor { normalization, pca })
    }

    pub fn n_input_features(&self) -> usize {
        self.normalization.n_features()
    }

    pub fn n_output_features(&self) -> usize {
        self.pca
            .as_ref()
            .map_or(self.n_input_features(), PcaTransform::n_components)
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let normalized = apply_minmax(&self.normalization, data)?;
        match &self.pca {
            Some(pca) => apply_pca(pca, &normalized),
            None => Ok(normalized),
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_input_features() {
            return Err(Error::dims(self.n_input_features(), row.len()));
        }
        let normalized = self.normalization.transform_row(row);
        Ok(match &self.pca {
            Some(pca) => pca.transform_row(&normalized),
            None => normalized,
        })
    }

    pub fn inverse_target(&self, v: f64) -> f64 {
        self.normalization.inverse_target(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(&rows, values.to_vec()).unwrap()
    }

    #[test]
    fn minmax_basic() {
        let ds = column(&[2.0, 4.0, 6.0]);
        let map = fit_minmax(&ds);
        let out = apply_minmax(&map, &ds).unwrap();
        assert_eq!(out.features.as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(out.targets, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn minmax_constant_column_maps_to_zero() {
        let ds = column(&[7.0, 7.0, 7.0]);
        let out = apply_minmax(&fit_minmax(&ds), &ds).unwrap();
        assert_eq!(out.features.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(fit_minmax(&ds).inverse_target(0.0), 7.0);
    }

    #[test]
    fn minmax_extrapolates_without_clipping() {
        let map = fit_minmax(&column(&[2.0, 4.0, 6.0]));
        assert_eq!(map.transform_row(&[8.0]), vec![1.5]);
        assert_eq!(map.transform_target(8.0), 1.5);
    }

    #[test]
    fn pca_rank_one() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]], vec![0.0; 3]).unwrap();
        let t = fit_pca(&ds, 0.95).unwrap();
        assert_eq!(t.n_components(), 1);
        assert_abs_diff_eq!(t.retained_variance_fraction, 1.0, epsilon = 1e-12);
        let projected = apply_pca(&t, &ds).unwrap();
        assert_eq!(projected.n_features(), 1);
        assert_abs_diff_eq!(projected.features[(0, 0)], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pca_full_retention() {
        let ds = Dataset::from_rows(
            &[vec![1.0, 0.3, 2.0], vec![0.2, 1.0, 0.1], vec![0.5, 0.5, 0.9], vec![0.0, 0.1, 0.4]],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(fit_pca(&ds, 1.0).unwrap().n_components(), 3);
    }

    #[test]
    fn pca_errors() {
        let same = Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], vec![0.0; 2]).unwrap();
        assert!(matches!(fit_pca(&same, 0.95), Err(Error::ZeroVariance)));
        let one = Dataset::from_rows(&[vec![1.0, 2.0]], vec![0.0]).unwrap();
        assert!(fit_pca(&one, 0.95).is_err());
        let ds = column(&[1.0, 2.0]);
        assert!(fit_pca(&ds, 0.0).is_err());
        assert!(fit_pca(&ds, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn minmax_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 2..20)) {
            let targets = rows.iter().map(|r| r[0] - r[2]).collect();
            let ds = Dataset::from_rows(&rows, targets).unwrap();
            let map = fit_minmax(&ds);
            let out = apply_minmax(&map, &ds).unwrap();
            for i in 0..ds.n_samples() {
                let back = map.inverse_row(&out.row(i));
                for (a, b) in back.iter().zip(ds.row(i)) {
                    prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
                let y = map.inverse_target(out.targets[i]);
                prop_assert!((y - ds.targets[i]).abs() <= 1e-12 * ds.targets[i].abs().max(1.0));
                for j in 0..ds.n_features() {
                    let v = out.features[(i, j)];
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn pca_components_orthonormal(
            rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 6..30),
            threshold in 0.3..1.0f64,
        ) {
            let ds = Dataset::from_rows(&rows, vec![0.0; rows.len()]).unwrap();
            let t = fit_pca(&ds, threshold).unwrap();
            let gram = t.components.transpose() * &t.components;
            let k = t.n_components();
            prop_assert!(k <= 4);
            prop_assert!(t.retained_variance_fraction >= threshold - 1e-12);
            for a in 0..k {
                for b in 0..k {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((gram[(a, b)] - expect).abs() < 1e-10);
                }
            }
        }
    }
}
