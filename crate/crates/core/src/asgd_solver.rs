//! Linear distance-weighted SVR by averaged stochastic gradient descent.
//!
//! Objective over the bias-augmented weight vector `w` (inputs carry a
//! trailing 1):
//!
//! ```text
//! g(w) = ½‖w‖² + (λ₁/n) (Σ (w·x_i)² - 2 Σ y_i w·x_i)
//!        + C Σ max(0, y_i - w·x_i - ε, w·x_i - y_i - ε)
//! ```
//!
//! The single-sample gradient
//! `2λ₁ x_i (x_i·w) + w - 2λ₁ y_i x_i + nC s_i(w)` averages to `∇g(w)` over a
//! uniformly drawn `i`, so plain SGD on it is unbiased. The returned model is
//! the running average of the iterates after step `t0`.
//!
//! Sampling is with replacement. The generator is ChaCha8 seeded with
//! `seed_from_u64(seed)`; each index is `(next_u64() * n) >> 64` computed in
//! 128-bit arithmetic ([`SAMPLER_ID`]).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Preprocessor};
use crate::{Error, Result};

/// Identifies the index sampler so runs can be reproduced elsewhere.
pub const SAMPLER_ID: &str = "chacha8-seed_from_u64/mulshift64";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsgdConfig {
    pub lambda1: f64,
    pub c_upper: f64,
    pub epsilon: f64,
    /// Number of passes `T`; the solver takes `T * n` steps.
    pub passes: usize,
    /// Step after which averaging starts; `None` means one full pass (`n`).
    pub t0: Option<u64>,
    /// Initial learning rate `φ₀`.
    pub eta0: f64,
    pub a: f64,
    /// Decay exponent `c` of the learning rate.
    pub c_exp: f64,
    pub seed: u64,
}

impl Default for AsgdConfig {
    fn default() -> Self {
        AsgdConfig {
            lambda1: 1.0,
            c_upper: 1.0,
            epsilon: 0.1,
            passes: 5,
            t0: None,
            eta0: 0.1,
            a: 1.0,
            c_exp: 0.75,
            seed: 0,
        }
    }
}

impl AsgdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda1 >= 0.0
            && self.c_upper >= 0.0
            && self.epsilon >= 0.0
            && self.passes >= 1
            && self.eta0 > 0.0
            && self.a >= 0.0
            && self.c_exp > 0.0
            && self.c_exp <= 1.0
            && [self.lambda1, self.c_upper, self.epsilon, self.eta0, self.a]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid ASGD config {self:?}")))
        }
    }
}

/// Linear predictor `f(x) = w_aug · (x, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w_aug: Vec<f64>,
    pub preprocessing: Option<Preprocessor>,
}

impl LinearModel {
    pub fn new(w_aug: Vec<f64>) -> Self {
        LinearModel {
            w_aug,
            preprocessing: None,
        }
    }

    pub fn with_preprocessing(mut self, preprocessing: Preprocessor) -> Self {
        self.preprocessing = Some(preprocessing);
        self
    }

    pub fn n_features(&self) -> usize {
        self.w_aug.len() - 1
    }

    /// Output for a preprocessed query, in normalized target units.
    pub fn decision(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.n_features() {
            return Err(Error::dims(self.n_features(), query.len()));
        }
        Ok(dot_augmented(&self.w_aug, query))
    }

    /// Prediction for a raw query in raw target units.
    pub fn predict(&self, query: &[f64]) -> Result<f64> {
        match &self.preprocessing {
            Some(pre) => {
                let q = pre.transform_row(query)?;
                Ok(pre.inverse_target(self.decision(&q)?))
            }
            None => self.decision(query),
        }
    }
}

pub fn predict_linear(model: &LinearModel, query: &[f64]) -> Result<f64> {
    model.decision(query)
}

// w · (x, 1) where x lacks the trailing 1
fn dot_augmented(w_aug: &[f64], x: &[f64]) -> f64 {
    let (bias, w) = w_aug.split_last().expect("augmented weights are never empty");
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rows of `data` with a trailing 1 appended.
pub fn augmented_rows(data: &Dataset) -> Vec<Vec<f64>> {
    (0..data.n_samples())
        .map(|i| {
            let mut r = data.row(i);
            r.push(1.0);
            r
        })
        .collect()
}

/// Subgradient of `max(0, y - w·x - ε, w·x - y - ε)` with respect to `w`:
/// `-x` above the tube, `+x` below it, zero inside and on its boundary.
pub fn subgradient_s(w_aug: &[f64], x_aug: &[f64], y: f64, epsilon: f64) -> Vec<f64> {
    let mut out = vec![0.0; x_aug.len()];
    let sign = hinge_sign(w_aug, x_aug, y, epsilon);
    if sign != 0.0 {
        for (o, x) in out.iter_mut().zip(x_aug) {
            *o = sign * x;
        }
    }
    out
}

#[inline]
fn hinge_sign(w_aug: &[f64], x_aug: &[f64], y: f64, epsilon: f64) -> f64 {
    let residual = y - dot(w_aug, x_aug);
    if residual > epsilon {
        -1.0
    } else if -residual > epsilon {
        1.0
    } else {
        0.0
    }
}

/// Single-sample gradient estimate `2λ₁ x (x·w) + w - 2λ₁ y x + nC s(w)`.
pub fn stochastic_gradient(w_aug: &[f64], x_aug: &[f64], y: f64, n: usize, cfg: &AsgdConfig) -> Vec<f64> {
    let mut out = vec![0.0; w_aug.len()];
    stochastic_gradient_into(&mut out, w_aug, x_aug, y, n, cfg);
    out
}

fn stochastic_gradient_into(out: &mut [f64], w_aug: &[f64], x_aug: &[f64], y: f64, n: usize, cfg: &AsgdConfig) {
    let fitted = dot(w_aug, x_aug);
    let residual = y - fitted;
    let sign = if residual > cfg.epsilon {
        -1.0
    } else if -residual > cfg.epsilon {
        1.0
    } else {
        0.0
    };
    let data_coef = 2.0 * cfg.lambda1 * (fitted - y) + n as f64 * cfg.c_upper * sign;
    for ((o, w), x) in out.iter_mut().zip(w_aug).zip(x_aug) {
        *o = w + data_coef * x;
    }
}

fn check_dims(w_aug: &[f64], data: &Dataset) -> Result<()> {
    if w_aug.len() != data.n_features() + 1 {
        return Err(Error::dims(data.n_features() + 1, w_aug.len()));
    }
    Ok(())
}

/// `∇g(w) = w + (2λ₁/n) Σ x_i (x_i·w) - (2λ₁/n) Σ y_i x_i + C Σ s_i(w)`.
pub fn full_gradient(w_aug: &[f64], data: &Dataset, cfg: &AsgdConfig) -> Result<Vec<f64>> {
    check_dims(w_aug, data)?;
    let n = data.n_samples() as f64;
    let mut grad = w_aug.to_vec();
    for (x, &y) in augmented_rows(data).iter().zip(&data.targets) {
        let coef = 2.0 * cfg.lambda1 / n * (dot(w_aug, x) - y) + cfg.c_upper * hinge_sign(w_aug, x, y, cfg.epsilon);
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += coef * xi;
        }
    }
    Ok(grad)
}

/// The objective `g(w)`; the constant `(λ₁/n) Σ y_i²` is omitted.
pub fn objective(w_aug: &[f64], data: &Dataset, cfg: &AsgdConfig) -> Result<f64> {
    check_dims(w_aug, data)?;
    let n = data.n_samples() as f64;
    let mut margin = 0.0;
    let mut hinge = 0.0;
    for (x, &y) in augmented_rows(data).iter().zip(&data.targets) {
        let f = dot(w_aug, x);
        margin += f * f - 2.0 * y * f;
        hinge += (y - f - cfg.epsilon).max(f - y - cfg.epsilon).max(0.0);
    }
    Ok(0.5 * dot(w_aug, w_aug) + cfg.lambda1 / n * margin + cfg.c_upper * hinge)
}

/// `φ_t = φ₀ (1 + a φ₀ t)^(-c)`.
pub fn learning_rate(t: u64, cfg: &AsgdConfig) -> f64 {
    cfg.eta0 * (1.0 + cfg.a * cfg.eta0 * t as f64).powf(-cfg.c_exp)
}

/// `δ_t = 1 / max(1, t - t0)`.
pub fn averaging_rate(t: u64, t0: u64) -> f64 {
    1.0 / t.saturating_sub(t0).max(1) as f64
}

/// Uniform index in `0..n` from one 64-bit draw.
pub fn sample_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Trains on an already preprocessed dataset; returns the averaged iterate.
pub fn train_asgd(data: &Dataset, cfg: &AsgdConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let n = data.n_samples();
    let rows = augmented_rows(data);
    let dim = data.n_features() + 1;
    let t0 = cfg.t0.unwrap_or(n as u64);
    let steps = (cfg.passes as u64) * n as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = vec![0.0; dim];
    let mut w_bar = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for t in 1..=steps {
        let i = sample_index(&mut rng, n);
        stochastic_gradient_into(&mut grad, &w, &rows[i], data.targets[i], n, cfg);
        let rate = learning_rate(t, cfg);
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= rate * gj;
        }
        let delta = averaging_rate(t, t0);
        for (bj, wj) in w_bar.iter_mut().zip(&w) {
            *bj = delta * wj + (1.0 - delta) * *bj;
        }
    }
    if w_bar.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "ASGD diverged; lower eta0 or raise a so the learning rate decays faster",
        ));
    }
    Ok(LinearModel::new(w_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn subgradient_examples() {
        let x = [1.0, 1.0, 1.0];
        assert_eq!(subgradient_s(&[0.0; 3], &x, 5.0, 1.0), vec![-1.0; 3]);
        assert_eq!(subgradient_s(&[0.0; 3], &x, -5.0, 1.0), vec![1.0; 3]);
        assert_eq!(subgradient_s(&[1.0, 0.0, 0.0], &x, 1.5, 1.0), vec![0.0; 3]);
        // w·x - y == epsilon exactly: on the boundary
        assert_eq!(subgradient_s(&[2.0, 0.0, 0.0], &x, 1.0, 1.0), vec![0.0; 3]);
    }

    #[test]
    fn stochastic_gradient_examples() {
        let cfg = AsgdConfig { lambda1: 0.0, c_upper: 0.0, ..Default::default() };
        let w = [0.3, -0.2, 0.9];
        assert_eq!(stochastic_gradient(&w, &[1.0, 2.0, 1.0], 4.0, 10, &cfg), w.to_vec());

        let cfg = AsgdConfig { lambda1: 1.0, c_upper: 3.0, epsilon: 2.5, ..Default::default() };
        assert_eq!(stochastic_gradient(&[0.0, 0.0], &[1.0, 1.0], 2.0, 1, &cfg), vec![-4.0, -4.0]);
    }

    #[test]
    fn full_gradient_pure_regularizer() {
        let data = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![3.0, -1.0]).unwrap();
        let cfg = AsgdConfig { lambda1: 0.0, c_upper: 0.0, ..Default::default() };
        assert_eq!(full_gradient(&[0.5, -0.25], &data, &cfg).unwrap(), vec![0.5, -0.25]);
        assert!(full_gradient(&[0.5], &data, &cfg).is_err());
    }

    #[test]
    fn schedules() {
        let cfg = AsgdConfig { eta0: 0.3, a: 2.0, c_exp: 0.5, ..Default::default() };
        assert_eq!(learning_rate(0, &cfg), 0.3);
        assert_abs_diff_eq!(learning_rate(10, &cfg), 0.3 / 7.0f64.sqrt(), epsilon = 1e-15);
        let flat = AsgdConfig { a: 0.0, ..cfg };
        assert!((0..100).all(|t| learning_rate(t, &flat) == 0.3));
        assert!((0..=10).all(|t| averaging_rate(t, 10) == 1.0));
        assert_eq!(averaging_rate(11, 10), 1.0);
        assert_eq!(averaging_rate(14, 10), 0.25);
    }

    #[test]
    fn linear_prediction_examples() {
        let bias_only = LinearModel::new(vec![0.0, 0.0, 0.7]);
        assert_eq!(predict_linear(&bias_only, &[3.0, -9.0]).unwrap(), 0.7);
        assert_eq!(predict_linear(&bias_only, &[0.0, 1.0]).unwrap(), 0.7);
        let slope = LinearModel::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(predict_linear(&slope, &[3.0, 7.0]).unwrap(), 3.0);
        assert!(predict_linear(&slope, &[3.0]).is_err());
    }

    #[test]
    fn prediction_matches_hinge_classification() {
        let model = LinearModel::new(vec![0.4, -1.0, 0.2]);
        let x = [0.3, 0.8];
        let mut x_aug = x.to_vec();
        x_aug.push(1.0);
        let f = predict_linear(&model, &x).unwrap();
        assert_eq!(f, dot(&model.w_aug, &x_aug));
        let eps = 0.05;
        let s = subgradient_s(&model.w_aug, &x_aug, f + eps * 2.0, eps);
        assert_eq!(s, x_aug.iter().map(|v| -v).collect::<Vec<_>>());
    }

    #[test]
    fn shrinks_to_zero_without_data_terms() {
        let data = Dataset::from_rows(&[vec![0.2], vec![0.9], vec![0.5]], vec![1.0, 0.0, 0.5]).unwrap();
        let cfg = AsgdConfig { lambda1: 0.0, c_upper: 0.0, passes: 200, ..Default::default() };
        let model = train_asgd(&data, &cfg).unwrap();
        // w starts at 0 and every step multiplies it by (1 - φ_t)
        assert!(model.w_aug.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn deterministic_for_seed() {
        let data = Dataset::from_rows(
            &[vec![0.2, 0.1], vec![0.9, 0.4], vec![0.5, 0.5], vec![0.1, 0.8]],
            vec![1.0, 0.0, 0.5, 0.2],
        )
        .unwrap();
        let cfg = AsgdConfig { seed: 99, passes: 50, ..Default::default() };
        let a = train_asgd(&data, &cfg).unwrap();
        let b = train_asgd(&data, &cfg).unwrap();
        let bits = |m: &LinearModel| m.w_aug.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = train_asgd(&data, &AsgdConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn sampler_is_uniform_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 7];
        for _ in 0..70_000 {
            counts[sample_index(&mut rng, 7)] += 1;
        }
        assert!(counts.iter().all(|&c| (9_000..11_000).contains(&c)));
    }
}
