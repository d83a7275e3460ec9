//! Two parallel lines plus gross outliers.
//!
//! Most points lie on line A (`y = x`), a minority on the parallel line B
//! (`y = x + offset`), and a few outliers sit far above the lines for
//! `x >= 0.5` and far below for `x < 0.5`, which tilts a least-squares fit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineGroup {
    A,
    B,
    Outlier,
}

impl LineGroup {
    pub fn label(self) -> &'static str {
        match self {
            LineGroup::A => "A",
            LineGroup::B => "B",
            LineGroup::Outlier => "outlier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLinesParams {
    pub n: usize,
    pub frac_a: f64,
    pub frac_b: f64,
    pub frac_outlier: f64,
    pub offset: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for TwoLinesParams {
    fn default() -> Self {
        TwoLinesParams {
            n: 1000,
            frac_a: 0.826,
            frac_b: 0.165,
            frac_outlier: 0.008,
            offset: 0.2,
            noise_sd: 0.01,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoLines {
    pub dataset: Dataset,
    pub groups: Vec<LineGroup>,
}

impl TwoLines {
    pub fn count(&self, group: LineGroup) -> usize {
        self.groups.iter().filter(|&&g| g == group).count()
    }

    pub fn indices(&self, group: LineGroup) -> Vec<usize> {
        (0..self.groups.len()).filter(|&i| self.groups[i] == group).collect()
    }
}

/// Generates the two-line scenario. Counts for B and the outliers are the
/// rounded fractions of `n`; every remaining point goes to line A.
pub fn synth_two_lines(p: &TwoLinesParams) -> Result<TwoLines> {
    let fracs = [p.frac_a, p.frac_b, p.frac_outlier];
    if fracs.iter().any(|f| !(*f >= 0.0)) || fracs.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::invalid("fractions must be nonnegative and sum to at most 1"));
    }
    if p.n == 0 || !(p.noise_sd >= 0.0) || !p.offset.is_finite() {
        return Err(Error::invalid("need n >= 1, finite offset and nonnegative noise"));
    }
    let n_b = (p.frac_b * p.n as f64).round() as usize;
    let n_out = (p.frac_outlier * p.n as f64).round() as usize;
    let n_a = p.n.saturating_sub(n_b + n_out);
    if n_a + n_b + n_out != p.n {
        return Err(Error::invalid("fractions exceed the sample count"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut groups = Vec::with_capacity(p.n);
    groups.extend(std::iter::repeat_n(LineGroup::A, n_a));
    groups.extend(std::iter::repeat_n(LineGroup::B, n_b));
    groups.extend(std::iter::repeat_n(LineGroup::Outlier, n_out));

    let mut xs = Vec::with_capacity(p.n);
    let mut ys = Vec::with_capacity(p.n);
    for &g in &groups {
        let x: f64 = rng.random();
        let z: f64 = StandardNormal.sample(&mut rng);
        let noise = p.noise_sd * z;
        let y = match g {
            LineGroup::A => x + noise,
            LineGroup::B => x + p.offset + noise,
            LineGroup::Outlier => {
                let u: f64 = rng.random();
                let side = if x >= 0.5 { 1.0 } else { -1.0 };
                x + side * (5.0 + 5.0 * u)
            }
        };
        xs.push(x);
        ys.push(y);
    }
    let dataset = Dataset::new(DMatrix::from_column_slice(p.n, 1, &xs), ys)?
        .with_feature_names(vec!["x".into()])?;
    Ok(TwoLines { dataset, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_proportions() {
        let data = synth_two_lines(&TwoLinesParams::default()).unwrap();
        assert_eq!(data.count(LineGroup::B), 165);
        assert_eq!(data.count(LineGroup::Outlier), 8);
        // 826 from the fraction plus the single leftover point
        assert_eq!(data.count(LineGroup::A), 827);
    }

    #[test]
    fn degenerate_collapse() {
        let p = TwoLinesParams {
            n: 50,
            frac_a: 0.5,
            frac_b: 0.5,
            frac_outlier: 0.0,
            offset: 0.0,
            noise_sd: 0.0,
            seed: 1,
        };
        let data = synth_two_lines(&p).unwrap();
        for i in 0..50 {
            assert_eq!(data.dataset.features[(i, 0)], data.dataset.targets[i]);
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_two_lines(&TwoLinesParams::default()).unwrap();
        let b = synth_two_lines(&TwoLinesParams::default()).unwrap();
        let bits = |d: &Dataset| d.features.iter().chain(&d.targets).map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.dataset), bits(&b.dataset));
        assert_eq!(a.groups, b.groups);
    }

    #[test]
    fn rejects_bad_fractions() {
        let p = TwoLinesParams { frac_b: 0.6, frac_a: 0.6, ..Default::default() };
        assert!(synth_two_lines(&p).is_err());
        let p = TwoLinesParams { frac_outlier: -0.1, ..Default::default() };
        assert!(synth_two_lines(&p).is_err());
    }
}
