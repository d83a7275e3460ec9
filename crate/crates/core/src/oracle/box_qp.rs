//! Box-constrained quadratic programs and the dual routes built on them.

use super::linalg::{inverse, mat_mul, mat_vec, transpose, Mat};
use super::primal::PrimalProblem;
use crate::{Error, Result};

pub fn box_qp_objective(hessian: &Mat, linear: &[f64], x: &[f64]) -> f64 {
    let hx = mat_vec(hessian, x);
    x.iter().zip(&hx).zip(linear).map(|((xi, hi), ci)| 0.5 * xi * hi + ci * xi).sum()
}

/// Minimizes `½xᵀHx + cᵀx` over `[0, upper]^m` by accelerated projected
/// gradient with gradient-based restarts. `step_size` defaults to the
/// reciprocal of the Gershgorin bound on the largest eigenvalue of `H`.
pub fn solve_box_qp_pg(hessian: &Mat, linear: &[f64], upper: f64, steps: usize, step_size: Option<f64>) -> Vec<f64> {
    let m = linear.len();
    let bound = hessian.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
    let step = step_size.unwrap_or(if bound > 0.0 { 1.0 / bound } else { 1.0 });
    let clip = |v: f64| v.clamp(0.0, upper);
    let mut x = vec![0.0; m];
    let mut yk = x.clone();
    let mut t = 1.0f64;
    for _ in 0..steps {
        let grad: Vec<f64> = mat_vec(hessian, &yk).iter().zip(linear).map(|(a, b)| a + b).collect();
        let xn: Vec<f64> = yk.iter().zip(&grad).map(|(a, g)| clip(a - step * g)).collect();
        // Gradient-based restart: drop momentum once it points uphill.
        let uphill: f64 = yk.iter().zip(&xn).zip(&x).map(|((yv, a), b)| (yv - a) * (a - b)).sum();
        if uphill > 0.0 {
            t = 1.0;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / tn;
        yk = xn.iter().zip(&x).map(|(a, b)| clip(a + mom * (a - b))).collect();
        x = xn;
        t = tn;
    }
    x
}

/// Training-set predictions from the dual of `problem`, solved as a box QP
/// in `(β, β*)` with Hessian blocks `±U M⁻¹ Uᵀ`.
pub fn solve_dual_box(problem: &PrimalProblem, steps: usize) -> Result<Vec<f64>> {
    let n = problem.n();
    let r = problem.dim();
    let ut = transpose(&problem.design);
    let s = 2.0 * problem.lambda1 / n as f64;
    let mut m_mat = mat_mul(&ut, &problem.design);
    for (i, row) in m_mat.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v *= s;
        }
        row[i] += 1.0;
    }
    debug_assert_eq!(m_mat.len(), r);
    let m_inv = inverse(&m_mat).ok_or_else(|| Error::Factorization("oracle: M is singular".into()))?;
    let k = mat_mul(&mat_mul(&problem.design, &m_inv), &ut);
    let ky = mat_vec(&k, &problem.targets);
    let lin_part: Vec<f64> = (0..n).map(|i| s * ky[i] - problem.targets[i]).collect();
    let (hessian, linear) = split_box(&k, &lin_part, problem.epsilon);
    let x = solve_box_qp_pg(&hessian, &linear, problem.c_upper, steps, None);
    let delta: Vec<f64> = (0..n).map(|i| x[i] - x[n + i]).collect();
    let kd = mat_vec(&k, &delta);
    Ok((0..n).map(|i| kd[i] + s * ky[i]).collect())
}

/// Training-set predictions of bias-augmented epsilon-SVR from its dual,
/// `min ½θᵀGθ + εΣ(α + α*) - yᵀθ`, `θ = α - α*`, on `[0, C]^{2n}`.
pub fn esvr_dual_predictions(gram: &Mat, targets: &[f64], c_upper: f64, epsilon: f64, steps: usize) -> Vec<f64> {
    let n = targets.len();
    let lin_part: Vec<f64> = targets.iter().map(|y| -y).collect();
    let (hessian, linear) = split_box(gram, &lin_part, epsilon);
    let x = solve_box_qp_pg(&hessian, &linear, c_upper, steps, None);
    let theta: Vec<f64> = (0..n).map(|i| x[i] - x[n + i]).collect();
    mat_vec(gram, &theta)
}

/// Expands `½δᵀKδ + bᵀδ + εΣ(β + β*)`, `δ = β - β*`, into a QP over `[β, β*]`.
fn split_box(k: &Mat, b: &[f64], epsilon: f64) -> (Mat, Vec<f64>) {
    let n = b.len();
    let hessian: Mat = (0..2 * n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    let v = k[i % n][j % n];
                    if (i < n) == (j < n) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    let linear = (0..2 * n).map(|i| if i < n { b[i] + epsilon } else { -b[i - n] + epsilon }).collect();
    (hessian, linear)
}
