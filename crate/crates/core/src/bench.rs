//! Repeated k-fold cross-validation over several methods.
//!
//! Preprocessing (min-max and optional PCA) is refit on every training
//! split. Metrics are computed on raw targets. Jobs run in parallel and are
//! merged back in a fixed order, so reports do not depend on scheduling.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{evaluate, make_folds, Dataset};
use crate::pipeline::{fit_method, FitOptions, KernelChoice, Method};
use crate::{Error, Result};

/// A named method configuration, e.g. `cd-rbf`.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub options: FitOptions,
}

/// Parses a comma-separated list such as `cd-rbf,esvr-rbf,ols`. A bare
/// `cd` or `esvr` keeps the kernel of `base`.
pub fn parse_method_list(list: &str, base: &FitOptions) -> Result<Vec<MethodSpec>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|label| {
            let (method, kernel) = match label.split_once('-') {
                None => (label.parse::<Method>()?, None),
                Some((m, k)) => {
                    let method = m.parse::<Method>()?;
                    if !method.is_kernelized() {
                        return Err(Error::invalid(format!("method `{m}` takes no kernel suffix")));
                    }
                    let kernel = match k {
                        "linear" => KernelChoice::Linear,
                        "rbf" => match base.kernel {
                            rbf @ KernelChoice::Rbf { .. } => rbf,
                            KernelChoice::Linear => KernelChoice::Rbf { gamma: None },
                        },
                        other => return Err(Error::invalid(format!("unknown kernel suffix `{other}`"))),
                    };
                    (method, Some(kernel))
                }
            };
            let kernel = match (method, kernel) {
                (Method::Asgd | Method::Ols, _) => KernelChoice::Linear,
                (_, Some(k)) => k,
                (_, None) => base.kernel,
            };
            Ok(MethodSpec {
                label: label.to_string(),
                options: FitOptions { method, kernel, ..base.clone() },
            })
        })
        .collect()
}

/// Candidate hyperparameters; every combination is tried on an inner
/// validation split of each training fold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid {
    pub c_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub lambda1_values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `C=0.1,1;epsilon=0.05;gamma=0.5,2;lambda1=1`. Every key is
    /// optional; an omitted key keeps the base value.
    fn from_str(s: &str) -> Result<Self> {
        let mut grid = Grid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("grid entry `{part}` is not key=values")))?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad grid value `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            let slot = match key.trim() {
                "C" | "c" => &mut grid.c_values,
                "epsilon" | "eps" => &mut grid.epsilon_values,
                "gamma" => &mut grid.gamma_values,
                "lambda1" => &mut grid.lambda1_values,
                other => return Err(Error::invalid(format!("unknown grid key `{other}`"))),
            };
            *slot = values;
        }
        Ok(grid)
    }
}

impl Grid {
    fn candidates(&self, base: &FitOptions) -> Vec<FitOptions> {
        let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
        let cs = or_base(&self.c_values, base.c_upper);
        let es = or_base(&self.epsilon_values, base.epsilon);
        let ls = if base.method == Method::Cd || base.method == Method::Asgd {
            or_base(&self.lambda1_values, base.lambda1)
        } else {
            vec![base.lambda1]
        };
        let gs: Vec<KernelChoice> = match base.kernel {
            KernelChoice::Rbf { .. } if !self.gamma_values.is_empty() => {
                self.gamma_values.iter().map(|&g| KernelChoice::Rbf { gamma: Some(g) }).collect()
            }
            k => vec![k],
        };
        let mut out = Vec::new();
        for &c_upper in &cs {
            for &epsilon in &es {
                for &kernel in &gs {
                    for &lambda1 in &ls {
                        out.push(FitOptions { c_upper, epsilon, kernel, lambda1, ..base.clone() });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub grid: Option<Grid>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, repeats: 30, seed: 0, grid: None }
    }
}

/// Mean, sample standard deviation and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let count = values.len();
        if count == 0 {
            return Stats { mean: f64::NAN, sd: f64::NAN, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stats { mean, sd, count }
    }
}

/// Per-fold outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub mse: f64,
    pub r2: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: String,
    pub folds: Vec<FoldResult>,
    pub mse: Stats,
    pub r2: Stats,
    pub seconds: Stats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub summaries: Vec<MethodSummary>,
}

fn fit_and_score(train: &Dataset, test: &Dataset, opts: &FitOptions) -> Result<(f64, Option<f64>)> {
    let model = fit_method(train, opts)?;
    let m = evaluate(&model.predict_all(test)?, &test.targets)?;
    Ok((m.mse, m.r2))
}

/// Picks the grid candidate with the lowest MSE on a held-out fifth of
/// `train` (ties go to the earliest candidate).
fn select_by_grid(train: &Dataset, grid: &Grid, base: &FitOptions, seed: u64) -> Result<FitOptions> {
    let candidates = grid.candidates(base);
    if candidates.len() == 1 || train.n_samples() < 5 {
        return Ok(candidates.into_iter().next().unwrap_or_else(|| base.clone()));
    }
    let plan = make_folds(train.n_samples(), 5, seed)?;
    let inner_train = train.select(&plan.train_indices(0));
    let valid = train.select(&plan.test_indices(0));
    let mut best: Option<(f64, FitOptions)> = None;
    for cand in candidates {
        let mse = fit_and_score(&inner_train, &valid, &cand)?.0;
        if best.as_ref().is_none_or(|(b, _)| mse < *b) {
            best = Some((mse, cand));
        }
    }
    Ok(best.map(|(_, o)| o).unwrap_or_else(|| base.clone()))
}

/// Runs `repeats` independent `folds`-fold splits (seeds `seed + r`) for
/// every method.
pub fn cross_validate(data: &Dataset, dataset: &str, methods: &[MethodSpec], cfg: &CvConfig) -> Result<BenchReport> {
    if cfg.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let plans = (0..cfg.repeats)
        .map(|r| make_folds(data.n_samples(), cfg.folds, cfg.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..cfg.repeats).flat_map(move |r| (0..cfg.folds).map(move |f| (m, r, f))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(m, r, f)| -> Result<FoldResult> {
            let plan = &plans[r];
            let train = data.select(&plan.train_indices(f));
            let test = data.select(&plan.test_indices(f));
            let start = Instant::now();
            let opts = match &cfg.grid {
                Some(grid) => select_by_grid(&train, grid, &methods[m].options, plan.seed ^ (f as u64 + 1))?,
                None => methods[m].options.clone(),
            };
            let (mse, r2) = fit_and_score(&train, &test, &opts)?;
            Ok(FoldResult { repeat: r, fold: f, mse, r2, seconds: start.elapsed().as_secs_f64() })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_method = cfg.repeats * cfg.folds;
    let summaries = methods
        .iter()
        .zip(results.chunks(per_method))
        .map(|(spec, folds)| {
            let mse: Vec<f64> = folds.iter().map(|r| r.mse).collect();
            let r2: Vec<f64> = folds.iter().filter_map(|r| r.r2).collect();
            let secs: Vec<f64> = folds.iter().map(|r| r.seconds).collect();
            MethodSummary {
                dataset: dataset.to_string(),
                method: spec.label.clone(),
                mse: Stats::of(&mse),
                r2: Stats::of(&r2),
                seconds: Stats::of(&secs),
                folds: folds.to_vec(),
            }
        })
        .collect();
    Ok(BenchReport { summaries })
}

impl BenchReport {
    /// CSV with one record per (dataset, method, metric). Timing rows are
    /// only written when `timing` is set, which keeps the rest reproducible.
    pub fn write_csv(&self, mut out: impl Write, timing: bool) -> Result<()> {
        writeln!(out, "dataset,method,metric,mean,sd,count")?;
        for s in &self.summaries {
            let mut rows = vec![("mse", s.mse), ("r2", s.r2)];
            if timing {
                rows.push(("seconds", s.seconds));
            }
            for (metric, st) in rows {
                writeln!(out, "{},{},{},{:?},{:?},{}", s.dataset, s.method, metric, st.mean, st.sd, st.count)?;
            }
        }
        Ok(())
    }

    /// Human-readable table.
    pub fn write_table(&self, mut out: impl Write, timing: bool) -> Result<()> {
        writeln!(out, "{:<12} {:<12} {:>24} {:>24}", "dataset", "method", "MSE (mean ± sd)", "R2 (mean ± sd)")?;
        for s in &self.summaries {
            write!(
                out,
                "{:<12} {:<12} {:>11.6} ± {:<10.6} {:>11.4} ± {:<10.4}",
                s.dataset, s.method, s.mse.mean, s.mse.sd, s.r2.mean, s.r2.sd
            )?;
            if timing {
                write!(out, " {:.3}s/fold", s.seconds.mean)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i) / 40.0, (f64::from(i) * 0.37).sin()]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] - r[1] + 0.5).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn stats_match_hand_computation() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.count, 4);
        assert_eq!(Stats::of(&[7.0]).sd, 0.0);
    }

    #[test]
    fn method_list_parsing() {
        let base = FitOptions::default();
        let specs = parse_method_list("cd-linear, esvr-rbf,asgd,ols,cd", &base).unwrap();
        assert_eq!(specs.len(), 5);
        assert_eq!(specs[0].options.kernel, KernelChoice::Linear);
        assert_eq!(specs[1].options.method, Method::Esvr);
        assert_eq!(specs[2].options.kernel, KernelChoice::Linear);
        assert_eq!(specs[4].options.kernel, base.kernel);
        assert!(parse_method_list("ols-rbf", &base).is_err());
        assert!(parse_method_list("cd-poly", &base).is_err());
    }

    #[test]
    fn report_is_deterministic_and_complete() {
        let base = FitOptions::default();
        let methods = parse_method_list("ols,cd-linear", &base).unwrap();
        let cfg = CvConfig { folds: 4, repeats: 3, seed: 11, grid: None };
        let a = cross_validate(&data(), "toy", &methods, &cfg).unwrap();
        let b = cross_validate(&data(), "toy", &methods, &cfg).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca, false).unwrap();
        b.write_csv(&mut cb, false).unwrap();
        assert_eq!(ca, cb);
        let text = String::from_utf8(ca).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2);
        assert!(!text.contains("seconds"));
        assert_eq!(a.summaries[0].mse.count, 12);
        // OLS is exact on noise-free linear data.
        assert!(a.summaries[0].mse.mean < 1e-12);
    }

    #[test]
    fn grid_selection_runs() {
        let base = FitOptions::default();
        let methods = parse_method_list("cd-linear", &base).unwrap();
        let grid: Grid = "C=0.1,10; epsilon=0,0.2".parse().unwrap();
        assert_eq!(grid.c_values, vec![0.1, 10.0]);
        assert!("C=abc".parse::<Grid>().is_err());
        assert!("nu=1".parse::<Grid>().is_err());
        let cfg = CvConfig { folds: 3, repeats: 1, seed: 1, grid: Some(grid) };
        let r = cross_validate(&data(), "toy", &methods, &cfg).unwrap();
        assert!(r.summaries[0].mse.mean.is_finite());
    }
}
