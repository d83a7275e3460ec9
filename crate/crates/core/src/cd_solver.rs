//! Kernel distance-weighted SVR by dual coordinate descent.
//!
//! With the bias absorbed into the augmented Gram matrix `G` and the weight
//! vector written as `w = Σ θ_i φ(x_i)`, the primal becomes
//!
//! ```text
//! min_θ  ½ θᵀQθ + pᵀθ + C Σ (ξ_i + ξ*_i)
//!   s.t. y_i - [Gθ]_i <= ε + ξ_i,   [Gθ]_i - y_i <= ε + ξ*_i,   ξ, ξ* >= 0
//! Q = (2λ₁/n) GᵀG + G,   p = -(2λ₁/n) G y
//! ```
//!
//! Its dual over `β' = [β, β*] ∈ [0, C]^{2n}` has Hessian blocks `±H` with
//! `H = G Q⁻¹ G`, and the coefficients follow from the multipliers as
//! `θ = Q⁻¹(G(β - β*) - p) = A (β - β* + (2λ₁/n) y)` with `A = Q⁻¹G`.
//! Coordinate descent takes one clipped Newton step per coordinate and
//! keeps `θ` current with a rank-one update from a column of `A`.

use nalgebra::DMatrix;

use crate::data::{Dataset, Preprocessor};
use crate::kernels::{gram_augmented, kernel_row, GramMatrix, KernelSpec};
use crate::{Error, Result};

/// Coefficients with magnitude at or below this are dropped from models.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

const MAX_RELATIVE_RIDGE: f64 = 1e-2;
const FIRST_ESCALATED_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdConfig {
    /// Weight of the mean squared residual term.
    pub lambda1: f64,
    /// Box bound `C` on the dual variables.
    pub c_upper: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Stop once a full sweep changes no dual variable by `tol` or more.
    pub tol: f64,
    /// Diagonal shift added to `Q`, relative to `trace(Q) / n`. Escalated
    /// tenfold (up to `1e-2`) whenever the factorization fails.
    pub ridge: f64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            lambda1: 1.0,
            c_upper: 1.0,
            epsilon: 0.1,
            max_sweeps: 1000,
            tol: 1e-6,
            ridge: 1e-8,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda1 >= 0.0
            && self.c_upper >= 0.0
            && self.epsilon >= 0.0
            && self.tol > 0.0
            && self.ridge >= 0.0
            && [self.lambda1, self.c_upper, self.epsilon, self.tol, self.ridge]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid coordinate descent config {self:?}")))
        }
    }
}

/// Everything the sweeps need that depends only on `G` and the config.
#[derive(Debug, Clone)]
pub struct PrecomputedDual {
    pub gram: GramMatrix,
    /// `Q⁻¹G`.
    pub a: DMatrix<f64>,
    /// `G Q⁻¹ G`.
    pub h: DMatrix<f64>,
    pub h_diag: Vec<f64>,
    /// Absolute diagonal shift that was added to `Q`.
    pub ridge: f64,
}

/// Builds `Q`, factors it once by Cholesky and derives `A` and `H` from
/// triangular solves.
pub fn precompute(gram: &GramMatrix, cfg: &CdConfig) -> Result<PrecomputedDual> {
    cfg.validate()?;
    let g = &gram.values;
    let n = g.nrows();
    if n == 0 {
        return Err(Error::invalid("empty Gram matrix"));
    }
    let mut q = g * g * (2.0 * cfg.lambda1 / n as f64) + g;
    // GᵀG is symmetric in exact arithmetic; remove the rounding asymmetry
    q = (&q + q.transpose()) * 0.5;
    let scale = (q.trace() / n as f64).max(f64::MIN_POSITIVE);

    let mut relative = cfg.ridge;
    loop {
        let ridge = relative * scale;
        let mut shifted = q.clone();
        for i in 0..n {
            shifted[(i, i)] += ridge;
        }
        if let Some(chol) = shifted.cholesky() {
            let a = chol.solve(g);
            let h = g * &a;
            let h = (&h + h.transpose()) * 0.5;
            let h_diag: Vec<f64> = h.diagonal().iter().copied().collect();
            let sane = h_diag.iter().all(|&v| v > 0.0 && v.is_finite()) && a.iter().all(|v| v.is_finite());
            if sane {
                return Ok(PrecomputedDual {
                    gram: gram.clone(),
                    a,
                    h,
                    h_diag,
                    ridge,
                });
            }
        }
        relative = if relative == 0.0 {
            FIRST_ESCALATED_RIDGE
        } else {
            relative * 10.0
        };
        if relative > MAX_RELATIVE_RIDGE * (1.0 + 1e-9) {
            return Err(Error::Factorization(format!(
                "Q is not positive definite even with a relative ridge of {MAX_RELATIVE_RIDGE}; \
                 the Gram matrix is too ill-conditioned"
            )));
        }
    }
}

/// Dual variables and the coefficient vector `θ = α - α*` they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub beta: Vec<f64>,
    pub beta_star: Vec<f64>,
    pub theta: Vec<f64>,
}

impl DualState {
    /// `β' = 0` and the matching `θ = (2λ₁/n) A y`.
    pub fn initial(pre: &PrecomputedDual, y: &[f64], lambda1: f64) -> Self {
        let n = y.len();
        let coef = 2.0 * lambda1 / n as f64;
        let theta = (0..n)
            .map(|i| coef * (0..n).map(|j| pre.a[(i, j)] * y[j]).sum::<f64>())
            .collect();
        DualState {
            beta: vec![0.0; n],
            beta_star: vec![0.0; n],
            theta,
        }
    }

    /// Value of the `k`-th entry of `β' = [β, β*]`.
    pub fn coordinate(&self, k: usize) -> f64 {
        let n = self.beta.len();
        if k < n {
            self.beta[k]
        } else {
            self.beta_star[k - n]
        }
    }

    /// Largest `β_i β*_i`; both multipliers of a sample active at once.
    pub fn max_complementarity(&self) -> f64 {
        self.beta
            .iter()
            .zip(&self.beta_star)
            .map(|(b, s)| b * s)
            .fold(0.0, f64::max)
    }
}

/// Partial derivative of the dual objective along coordinate `k` of
/// `β' = [β, β*]` (0-based, `k < 2n`).
pub fn cd_gradient(k: usize, theta: &[f64], gram: &GramMatrix, y: &[f64], epsilon: f64) -> Result<f64> {
    let n = y.len();
    if k >= 2 * n {
        return Err(Error::invalid(format!("coordinate {k} out of range for n = {n}")));
    }
    if theta.len() != n || gram.n() != n {
        return Err(Error::dims(n, theta.len()));
    }
    Ok(gradient_unchecked(k, theta, &gram.values, y, epsilon))
}

#[inline]
fn gradient_unchecked(k: usize, theta: &[f64], g: &DMatrix<f64>, y: &[f64], epsilon: f64) -> f64 {
    let n = y.len();
    let i = if k < n { k } else { k - n };
    // G is symmetric, so column i is the contiguous version of row i
    let fitted: f64 = g.column(i).iter().zip(theta).map(|(a, b)| a * b).sum();
    let residual = fitted - y[i];
    if k < n {
        epsilon + residual
    } else {
        epsilon - residual
    }
}

/// One clipped Newton step on coordinate `k`. Returns the signed change of
/// that coordinate; `θ` is updated in place.
pub fn cd_update(
    k: usize,
    state: &mut DualState,
    pre: &PrecomputedDual,
    y: &[f64],
    cfg: &CdConfig,
) -> Result<f64> {
    let n = y.len();
    if k >= 2 * n || state.beta.len() != n || pre.gram.n() != n {
        return Err(Error::invalid(format!("coordinate {k} out of range for n = {n}")));
    }
    Ok(update_unchecked(k, state, pre, y, cfg))
}

fn update_unchecked(k: usize, state: &mut DualState, pre: &PrecomputedDual, y: &[f64], cfg: &CdConfig) -> f64 {
    let n = y.len();
    let i = if k < n { k } else { k - n };
    let grad = gradient_unchecked(k, &state.theta, &pre.gram.values, y, cfg.epsilon);
    let old = state.coordinate(k);
    let new = (old - grad / pre.h_diag[i]).max(0.0).min(cfg.c_upper);
    let delta = new - old;
    if delta != 0.0 {
        if k < n {
            state.beta[i] = new;
        } else {
            state.beta_star[i] = new;
        }
        let step = if k < n { delta } else { -delta };
        for (t, a) in state.theta.iter_mut().zip(pre.a.column(i).iter()) {
            *t += step * a;
        }
    }
    delta
}

/// `θ` rebuilt from the multipliers: `A (β - β* + (2λ₁/n) y)`.
pub fn theta_from_duals(pre: &PrecomputedDual, y: &[f64], beta: &[f64], beta_star: &[f64], lambda1: f64) -> Vec<f64> {
    let n = y.len();
    let coef = 2.0 * lambda1 / n as f64;
    let v: Vec<f64> = (0..n).map(|j| beta[j] - beta_star[j] + coef * y[j]).collect();
    (0..n)
        .map(|i| (0..n).map(|j| pre.a[(i, j)] * v[j]).sum())
        .collect()
}

/// Dual objective (to be minimized), constant terms dropped:
/// `½ δᵀHδ + (2λ₁/n) δᵀHy - yᵀδ + ε Σ (β_i + β*_i)` with `δ = β - β*`.
///
/// Sums are compensated so that differences between nearby states are
/// meaningful down to roughly `1e-13`.
pub fn dual_objective(pre: &PrecomputedDual, y: &[f64], cfg: &CdConfig, beta: &[f64], beta_star: &[f64]) -> f64 {
    let n = y.len();
    let coef = 2.0 * cfg.lambda1 / n as f64;
    let delta: Vec<f64> = beta.iter().zip(beta_star).map(|(b, s)| b - s).collect();
    let mut acc = NeumaierSum::default();
    for i in 0..n {
        acc.add(cfg.epsilon * (beta[i] + beta_star[i]));
        if delta[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            let hij = pre.h[(i, j)];
            acc.add(0.5 * delta[i] * hij * delta[j]);
            acc.add(coef * delta[i] * hij * y[j]);
        }
        acc.add(-y[i] * delta[i]);
    }
    acc.value()
}

#[derive(Default)]
struct NeumaierSum {
    sum: f64,
    carry: f64,
}

impl NeumaierSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Coordinate descent driver over a fixed precomputation.
#[derive(Debug, Clone)]
pub struct CdSolver<'a> {
    pre: &'a PrecomputedDual,
    y: &'a [f64],
    cfg: CdConfig,
    state: DualState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOutcome {
    pub sweeps: usize,
    pub converged: bool,
    /// Largest coordinate change in the final sweep.
    pub last_change: f64,
}

impl<'a> CdSolver<'a> {
    pub fn new(pre: &'a PrecomputedDual, y: &'a [f64], cfg: &CdConfig) -> Result<Self> {
        cfg.validate()?;
        if pre.gram.n() != y.len() {
            return Err(Error::dims(pre.gram.n(), y.len()));
        }
        Ok(CdSolver {
            pre,
            y,
            cfg: *cfg,
            state: DualState::initial(pre, y, cfg.lambda1),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn into_state(self) -> DualState {
        self.state
    }

    pub fn gradient(&self, k: usize) -> Result<f64> {
        cd_gradient(k, &self.state.theta, &self.pre.gram, self.y, self.cfg.epsilon)
    }

    pub fn update(&mut self, k: usize) -> Result<f64> {
        cd_update(k, &mut self.state, self.pre, self.y, &self.cfg)
    }

    /// Visits `k = 0..2n` in order; returns the largest absolute change.
    pub fn sweep(&mut self) -> f64 {
        (0..2 * self.n())
            .map(|k| update_unchecked(k, &mut self.state, self.pre, self.y, &self.cfg).abs())
            .fold(0.0, f64::max)
    }

    pub fn run(&mut self) -> CdOutcome {
        let mut last_change = 0.0;
        for sweep in 1..=self.cfg.max_sweeps {
            last_change = self.sweep();
            if last_change < self.cfg.tol {
                return CdOutcome {
                    sweeps: sweep,
                    converged: true,
                    last_change,
                };
            }
        }
        CdOutcome {
            sweeps: self.cfg.max_sweeps,
            converged: false,
            last_change,
        }
    }

    pub fn dual_objective(&self) -> f64 {
        dual_objective(self.pre, self.y, &self.cfg, &self.state.beta, &self.state.beta_star)
    }

    /// Training-set predictions `Gθ` in normalized target units.
    pub fn fitted(&self) -> Vec<f64> {
        let g = &self.pre.gram.values;
        (0..self.n())
            .map(|i| g.column(i).iter().zip(&self.state.theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Kernel expansion `f(x) = Σ θ_i (K(x_i, x) + 1)` over retained support
/// points. Shared by the distance-weighted solver and the e-SVR baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    pub theta: Vec<f64>,
    /// `k x d`, one row per retained coefficient.
    pub support_points: DMatrix<f64>,
    pub spec: KernelSpec,
    pub preprocessing: Option<Preprocessor>,
}

impl DualModel {
    /// Keeps the samples whose coefficient magnitude exceeds
    /// [`SPARSITY_THRESHOLD`].
    pub fn from_coefficients(theta: &[f64], features: &DMatrix<f64>, spec: KernelSpec) -> Self {
        let keep: Vec<usize> = (0..theta.len())
            .filter(|&i| theta[i].abs() > SPARSITY_THRESHOLD)
            .collect();
        DualModel {
            theta: keep.iter().map(|&i| theta[i]).collect(),
            support_points: features.select_rows(keep.iter()),
            spec,
            preprocessing: None,
        }
    }

    pub fn with_preprocessing(mut self, preprocessing: Preprocessor) -> Self {
        self.preprocessing = Some(preprocessing);
        self
    }

    pub fn n_support(&self) -> usize {
        self.theta.len()
    }

    /// Feature count of the (already preprocessed) support points.
    pub fn n_features(&self) -> usize {
        self.support_points.ncols()
    }

    /// Model output for a preprocessed query, in normalized target units.
    pub fn decision(&self, query: &[f64]) -> Result<f64> {
        if self.n_support() > 0 && query.len() != self.n_features() {
            return Err(Error::dims(self.n_features(), query.len()));
        }
        let row = kernel_row(&self.spec, &self.support_points, query)?;
        Ok(row.iter().zip(&self.theta).map(|(k, t)| k * t).sum())
    }

    /// Prediction for a raw query: preprocess, evaluate, map the target back
    /// to raw units. Without preprocessing this equals [`Self::decision`].
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

/// Free-function form of [`DualModel::decision`].
pub fn predict_dual(model: &DualModel, query: &[f64]) -> Result<f64> {
    model.decision(query)
}

#[derive(Debug, Clone)]
pub struct CdFit {
    pub model: DualModel,
    pub outcome: CdOutcome,
    pub state: DualState,
    pub ridge: f64,
}

/// Trains on an already preprocessed dataset.
pub fn train_cd(data: &Dataset, spec: &KernelSpec, cfg: &CdConfig) -> Result<DualModel> {
    fit_cd(data, spec, cfg).map(|fit| fit.model)
}

/// [`train_cd`] plus convergence diagnostics and the final dual state.
pub fn fit_cd(data: &Dataset, spec: &KernelSpec, cfg: &CdConfig) -> Result<CdFit> {
    cfg.validate()?;
    let gram = gram_augmented(spec, &data.features);
    let pre = precompute(&gram, cfg)?;
    let mut solver = CdSolver::new(&pre, &data.targets, cfg)?;
    let outcome = solver.run();
    let state = solver.into_state();
    Ok(CdFit {
        model: DualModel::from_coefficients(&state.theta, &data.features, *spec),
        outcome,
        state,
        ridge: pre.ridge,
    })
}

/// Slack of every sample with respect to the epsilon tube:
/// `ξ_i = max(0, y_i - f(x_i) - ε)` and `ξ*_i = max(0, f(x_i) - y_i - ε)`.
pub fn slack_diagnostics(model: &DualModel, data: &Dataset, epsilon: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut below = Vec::with_capacity(data.n_samples());
    let mut above = Vec::with_capacity(data.n_samples());
    for i in 0..data.n_samples() {
        let f = model.decision(&data.row(i))?;
        let y = data.targets[i];
        below.push((y - f - epsilon).max(0.0));
        above.push((f - y - epsilon).max(0.0));
    }
    Ok((below, above))
}
