//! Reference regressors: bias-augmented epsilon-SVR and least squares.

use nalgebra::{DMatrix, DVector};

use crate::asgd_solver::{augmented_rows, LinearModel};
use crate::cd_solver::DualModel;
use crate::data::Dataset;
use crate::kernels::{gram_augmented, KernelSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsvrConfig {
    pub c_upper: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for EsvrConfig {
    fn default() -> Self {
        EsvrConfig {
            c_upper: 1.0,
            epsilon: 0.1,
            max_sweeps: 1000,
            tol: 1e-6,
        }
    }
}

impl EsvrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_upper >= 0.0 && self.epsilon >= 0.0 && self.tol > 0.0 && self.c_upper.is_finite() && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid e-SVR config {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct EsvrFit {
    pub model: DualModel,
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// `α - α*` for every training sample (unpruned).
    pub theta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Epsilon-SVR with the bias folded into the kernel (`K + 1`), which removes
/// the `Σ(α_i - α*_i) = 0` constraint. Minimizes
/// `½ θᵀGθ + ε Σ(α_i + α*_i) - Σ y_i θ_i` over `α, α* ∈ [0, C]^n`,
/// `θ = α - α*`, by cyclic coordinate descent over `[α, α*]`.
pub fn train_esvr(data: &Dataset, spec: &KernelSpec, cfg: &EsvrConfig) -> Result<DualModel> {
    fit_esvr(data, spec, cfg).map(|f| f.model)
}

pub fn fit_esvr(data: &Dataset, spec: &KernelSpec, cfg: &EsvrConfig) -> Result<EsvrFit> {
    cfg.validate()?;
    let g = gram_augmented(spec, &data.features).values;
    let y = &data.targets;
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut alpha_star = vec![0.0; n];
    let mut theta = vec![0.0; n];
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut biggest = 0.0f64;
        for k in 0..2 * n {
            let i = k % n;
            let upper = k < n;
            let fitted: f64 = g.column(i).iter().zip(&theta).map(|(a, b)| a * b).sum();
            let grad = if upper {
                fitted - y[i] + cfg.epsilon
            } else {
                y[i] - fitted + cfg.epsilon
            };
            let slot = if upper { &mut alpha[i] } else { &mut alpha_star[i] };
            let old = *slot;
            let new = (old - grad / g[(i, i)]).clamp(0.0, cfg.c_upper);
            if new != old {
                *slot = new;
                let change = if upper { new - old } else { old - new };
                theta[i] += change;
                biggest = biggest.max((new - old).abs());
            }
        }
        if biggest < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(EsvrFit {
        model: DualModel::from_coefficients(&theta, &data.features, *spec),
        alpha,
        alpha_star,
        theta,
        sweeps,
        converged,
    })
}

/// Dual objective of [`train_esvr`] at `(α, α*)`.
pub fn esvr_dual_objective(gram: &DMatrix<f64>, y: &[f64], epsilon: f64, alpha: &[f64], alpha_star: &[f64]) -> f64 {
    let theta: Vec<f64> = alpha.iter().zip(alpha_star).map(|(a, s)| a - s).collect();
    let quad: f64 = (0..y.len())
        .map(|i| theta[i] * (0..y.len()).map(|j| gram[(i, j)] * theta[j]).sum::<f64>())
        .sum();
    0.5 * quad + epsilon * alpha.iter().chain(alpha_star).sum::<f64>() - y.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>()
}

/// Diagonal ridge on the normal equations; keeps them solvable for
/// collinear or underdetermined data.
pub const OLS_RIDGE: f64 = 1e-10;

/// Least squares on the bias-augmented features via the normal equations.
pub fn train_ols(data: &Dataset) -> Result<LinearModel> {
    let rows = augmented_rows(data);
    let dim = data.n_features() + 1;
    let x = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let mut normal = x.transpose() * &x;
    for j in 0..dim {
        normal[(j, j)] += OLS_RIDGE;
    }
    let rhs = x.transpose() * DVector::from_column_slice(&data.targets);
    let w = normal
        .cholesky()
        .ok_or_else(|| Error::Factorization("normal equations are not positive definite".into()))?
        .solve(&rhs);
    Ok(LinearModel::new(w.iter().copied().collect()))
}
