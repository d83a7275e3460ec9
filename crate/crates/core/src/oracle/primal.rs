//! Reference solvers for the kernel primal.

use super::linalg::{jacobi_eigen, mat_vec, solve_vec, transpose, Mat};
use crate::data::Dataset;
use crate::kernels::KernelSpec;
use crate::{Error, Result};

/// Bias-augmented Gram matrix evaluated without the kernels module.
pub fn oracle_gram(spec: &KernelSpec, data: &Dataset) -> Mat {
    let rows = data.rows();
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| {
                    let k = match *spec {
                        KernelSpec::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>(),
                        KernelSpec::Rbf { gamma } => {
                            (-gamma * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()).exp()
                        }
                    };
                    k + 1.0
                })
                .collect()
        })
        .collect()
}

/// The regularized tube objective written over a finite feature map `U`:
/// predictions are `u = U z` and
/// `f(z) = ½‖z‖² + (λ₁/n)(‖u‖² - 2yᵀu) + C Σ max(0, |u_i - y_i| - ε)`.
///
/// For the linear kernel `U` is the augmented design matrix and `z` is the
/// weight vector. For other kernels `U` is a square root of the augmented
/// Gram matrix from its eigendecomposition.
#[derive(Debug, Clone)]
pub struct PrimalProblem {
    pub design: Mat,
    pub targets: Vec<f64>,
    pub lambda1: f64,
    pub c_upper: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub z: Vec<f64>,
    pub predictions: Vec<f64>,
    pub objective: f64,
    /// Sum of complementarity products at termination.
    pub gap: f64,
    pub iterations: usize,
}

impl PrimalProblem {
    pub fn linear(data: &Dataset, lambda1: f64, c_upper: f64, epsilon: f64) -> Self {
        let design = data
            .rows()
            .into_iter()
            .map(|mut r| {
                r.push(1.0);
                r
            })
            .collect();
        PrimalProblem { design, targets: data.targets.clone(), lambda1, c_upper, epsilon }
    }

    pub fn kernel(spec: &KernelSpec, data: &Dataset, lambda1: f64, c_upper: f64, epsilon: f64) -> Self {
        if *spec == KernelSpec::Linear {
            return Self::linear(data, lambda1, c_upper, epsilon);
        }
        let g = oracle_gram(spec, data);
        let (vals, vecs) = jacobi_eigen(&g);
        let top = vals.iter().fold(0.0f64, |m, v| m.max(*v));
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > top * 1e-14).collect();
        let design = vecs
            .iter()
            .map(|row| keep.iter().map(|&k| row[k] * vals[k].sqrt()).collect())
            .collect();
        PrimalProblem { design, targets: data.targets.clone(), lambda1, c_upper, epsilon }
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    pub fn dim(&self) -> usize {
        self.design.first().map_or(0, Vec::len)
    }

    pub fn predictions(&self, z: &[f64]) -> Vec<f64> {
        mat_vec(&self.design, z)
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let u = self.predictions(z);
        self.objective_at(z, &u)
    }

    fn objective_at(&self, z: &[f64], u: &[f64]) -> f64 {
        let n = self.n() as f64;
        let reg = 0.5 * z.iter().map(|v| v * v).sum::<f64>();
        let fit: f64 = u.iter().zip(&self.targets).map(|(f, y)| f * f - 2.0 * y * f).sum();
        let hinge: f64 = u
            .iter()
            .zip(&self.targets)
            .map(|(f, y)| ((f - y).abs() - self.epsilon).max(0.0))
            .sum();
        reg + self.lambda1 / n * fit + self.c_upper * hinge
    }
}

/// Per-iteration record of [`solve_primal_pg`].
#[derive(Debug, Clone)]
pub struct PrimalTrace {
    pub predictions: Vec<f64>,
    pub objective: f64,
    pub objectives: Vec<f64>,
}

/// Subgradient descent on the kernel primal in coefficient space
/// (`f = Gθ`), with normalized step `step_size / √(t+1)` halved until the objective
/// does not increase. Returns the best iterate seen; `objectives` holds the
/// best value after each iteration.
pub fn solve_primal_pg(
    spec: &KernelSpec,
    data: &Dataset,
    lambda1: f64,
    c_upper: f64,
    epsilon: f64,
    iterations: usize,
    step_size: f64,
) -> PrimalTrace {
    let g = oracle_gram(spec, data);
    let y = &data.targets;
    let n = y.len();
    let nf = n as f64;
    let eval = |theta: &[f64]| -> (f64, Vec<f64>) {
        let f = mat_vec(&g, theta);
        let quad: f64 = theta.iter().zip(&f).map(|(a, b)| a * b).sum();
        let fit: f64 = f.iter().zip(y).map(|(p, t)| p * p - 2.0 * t * p).sum();
        let hinge: f64 = f.iter().zip(y).map(|(p, t)| ((p - t).abs() - epsilon).max(0.0)).sum();
        (0.5 * quad + lambda1 / nf * fit + c_upper * hinge, f)
    };
    let mut theta = vec![0.0; n];
    let (mut obj, mut f) = eval(&theta);
    let (mut best_obj, mut best_f) = (obj, f.clone());
    let mut objectives = vec![obj];
    for t in 0..iterations {
        // Subgradient in f-space, mapped back through G.
        let inner: Vec<f64> = (0..n)
            .map(|i| {
                let r = f[i] - y[i];
                let s = if r > epsilon {
                    1.0
                } else if r < -epsilon {
                    -1.0
                } else {
                    0.0
                };
                theta[i] + 2.0 * lambda1 / nf * (f[i] - y[i]) + c_upper * s
            })
            .collect();
        let grad = mat_vec(&g, &inner);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        // Normalized step, halved until the objective drops. At a kink no
        // step may help; then the full diminishing step is taken anyway.
        let full = step_size / ((t + 1) as f64).sqrt() / norm;
        let mut step = full;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(a, b)| a - step * b).collect();
            let e = eval(&trial);
            if e.0 <= obj {
                accepted = Some((trial, e));
                break;
            }
            step *= 0.5;
        }
        let (trial, e) = accepted.unwrap_or_else(|| {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(a, b)| a - full * b).collect();
            let e = eval(&trial);
            (trial, e)
        });
        theta = trial;
        (obj, f) = e;
        if obj < best_obj {
            best_obj = obj;
            best_f.clone_from(&f);
        }
        objectives.push(best_obj);
    }
    let (obj, f) = (best_obj, best_f);
    PrimalTrace { predictions: f, objective: obj, objectives }
}

/// Primal-dual interior-point solve (Mehrotra predictor-corrector) of the
/// slack form
///
/// ```text
/// min ½zᵀMz + cᵀz + C Σ(ξ_i + ξ*_i)
/// s.t. u_i - y_i ≤ ε + ξ*_i,  y_i - u_i ≤ ε + ξ_i,  ξ, ξ* ≥ 0
/// ```
///
/// with `M = I + (2λ₁/n)UᵀU` and `c = -(2λ₁/n)Uᵀy`. Each Newton step is
/// reduced to a dense system in `z` alone.
pub fn solve_primal(problem: &PrimalProblem) -> Result<PrimalSolution> {
    let n = problem.n();
    let r = problem.dim();
    let u_mat = &problem.design;
    let ut = transpose(u_mat);
    let y = &problem.targets;
    let (eps, cap) = (problem.epsilon, problem.c_upper);
    let scale = 2.0 * problem.lambda1 / n as f64;
    let mut m_mat: Mat = (0..r)
        .map(|i| (0..r).map(|j| scale * ut[i].iter().zip(&ut[j]).map(|(a, b)| a * b).sum::<f64>()).collect())
        .collect();
    for (i, row) in m_mat.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let c_vec: Vec<f64> = mat_vec(&ut, y).into_iter().map(|v| -scale * v).collect();

    // Constraint blocks a, b, c, d (n each), in the form G x + s = h.
    let h: Vec<f64> = (0..4 * n)
        .map(|j| match j / n {
            0 => eps - y[j % n],
            1 => eps + y[j % n],
            _ => 0.0,
        })
        .collect();
    let g_times = |dz: &[f64], dxi: &[f64], dxs: &[f64]| -> Vec<f64> {
        let ud = mat_vec(u_mat, dz);
        let mut out = Vec::with_capacity(4 * n);
        out.extend((0..n).map(|i| -ud[i] - dxi[i]));
        out.extend((0..n).map(|i| ud[i] - dxs[i]));
        out.extend(dxi.iter().map(|v| -v));
        out.extend(dxs.iter().map(|v| -v));
        out
    };
    let gt_times = |v: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let diff: Vec<f64> = (0..n).map(|i| v[n + i] - v[i]).collect();
        let gz = mat_vec(&ut, &diff);
        let gxi = (0..n).map(|i| -v[i] - v[2 * n + i]).collect();
        let gxs = (0..n).map(|i| -v[n + i] - v[3 * n + i]).collect();
        (gz, gxi, gxs)
    };

    let mut z = vec![0.0; r];
    let mut xi = vec![0.0; n];
    let mut xs = vec![0.0; n];
    let mut s = vec![1.0; 4 * n];
    let mut lam = vec![1.0; 4 * n];
    let m_count = (4 * n) as f64;
    let data_scale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs())) + cap;

    for iter in 1..=200 {
        let gx = g_times(&z, &xi, &xs);
        let rp: Vec<f64> = (0..4 * n).map(|j| gx[j] + s[j] - h[j]).collect();
        let (gz, gxi, gxs) = gt_times(&lam);
        let mz = mat_vec(&m_mat, &z);
        let rd_z: Vec<f64> = (0..r).map(|i| mz[i] + c_vec[i] + gz[i]).collect();
        let rd_xi: Vec<f64> = (0..n).map(|i| cap + gxi[i]).collect();
        let rd_xs: Vec<f64> = (0..n).map(|i| cap + gxs[i]).collect();
        let mu = s.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>() / m_count;
        let res = rp
            .iter()
            .chain(&rd_z)
            .chain(&rd_xi)
            .chain(&rd_xs)
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if mu < 1e-13 * data_scale && res < 1e-11 * data_scale {
            let predictions = problem.predictions(&z);
            let objective = problem.objective_at(&z, &predictions);
            return Ok(PrimalSolution { z, predictions, objective, gap: mu * m_count, iterations: iter });
        }

        let w: Vec<f64> = lam.iter().zip(&s).map(|(l, sv)| l / sv).collect();
        let (wa, wb, wc, wd) = (&w[..n], &w[n..2 * n], &w[2 * n..3 * n], &w[3 * n..]);
        let da: Vec<f64> = (0..n).map(|i| wa[i] + wc[i]).collect();
        let db: Vec<f64> = (0..n).map(|i| wb[i] + wd[i]).collect();
        let e: Vec<f64> = (0..n).map(|i| wa[i] * wc[i] / da[i] + wb[i] * wd[i] / db[i]).collect();
        let mut reduced = m_mat.clone();
        for a in 0..r {
            for b in a..r {
                let v: f64 = (0..n).map(|i| ut[a][i] * e[i] * ut[b][i]).sum();
                reduced[a][b] += v;
                if a != b {
                    reduced[b][a] += v;
                }
            }
        }

        // Solves the Newton system for complementarity target `rc`.
        let newton = |rc: &[f64]| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
            let tmp: Vec<f64> = (0..4 * n).map(|j| w[j] * (rp[j] - rc[j] / lam[j])).collect();
            let (tz, txi, txs) = gt_times(&tmp);
            let r_z: Vec<f64> = (0..r).map(|i| -rd_z[i] - tz[i]).collect();
            let r_xi: Vec<f64> = (0..n).map(|i| -rd_xi[i] - txi[i]).collect();
            let r_xs: Vec<f64> = (0..n).map(|i| -rd_xs[i] - txs[i]).collect();
            let corr: Vec<f64> = (0..n).map(|i| -wa[i] / da[i] * r_xi[i] + wb[i] / db[i] * r_xs[i]).collect();
            let ucorr = mat_vec(&ut, &corr);
            let rhs: Vec<f64> = (0..r).map(|i| r_z[i] + ucorr[i]).collect();
            let dz = solve_vec(&reduced, &rhs)?;
            let ud = mat_vec(u_mat, &dz);
            let dxi: Vec<f64> = (0..n).map(|i| (r_xi[i] - wa[i] * ud[i]) / da[i]).collect();
            let dxs: Vec<f64> = (0..n).map(|i| (r_xs[i] + wb[i] * ud[i]) / db[i]).collect();
            let gd = g_times(&dz, &dxi, &dxs);
            let dlam: Vec<f64> = (0..4 * n).map(|j| w[j] * (gd[j] + rp[j] - rc[j] / lam[j])).collect();
            let ds: Vec<f64> = (0..4 * n).map(|j| (-rc[j] - s[j] * dlam[j]) / lam[j]).collect();
            Some((dz, dxi, dxs, ds, dlam))
        };
        let max_step = |ds: &[f64], dl: &[f64]| -> f64 {
            let mut a = 1.0f64;
            for j in 0..4 * n {
                if ds[j] < 0.0 {
                    a = a.min(-s[j] / ds[j]);
                }
                if dl[j] < 0.0 {
                    a = a.min(-lam[j] / dl[j]);
                }
            }
            a
        };
        let singular = || Error::Factorization("interior-point Newton system is singular".into());

        let rc_aff: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
        let (_, _, _, ds_a, dl_a) = newton(&rc_aff).ok_or_else(singular)?;
        let alpha_aff = max_step(&ds_a, &dl_a);
        let mu_aff = (0..4 * n)
            .map(|j| (s[j] + alpha_aff * ds_a[j]) * (lam[j] + alpha_aff * dl_a[j]))
            .sum::<f64>()
            / m_count;
        let sigma = (mu_aff / mu).powi(3);
        let rc: Vec<f64> = (0..4 * n).map(|j| s[j] * lam[j] + ds_a[j] * dl_a[j] - sigma * mu).collect();
        let (dz, dxi, dxs, ds, dl) = newton(&rc).ok_or_else(singular)?;
        let alpha = (0.99 * max_step(&ds, &dl)).min(1.0);
        for i in 0..r {
            z[i] += alpha * dz[i];
        }
        for i in 0..n {
            xi[i] += alpha * dxi[i];
            xs[i] += alpha * dxs[i];
        }
        for j in 0..4 * n {
            s[j] += alpha * ds[j];
            lam[j] += alpha * dl[j];
        }
    }
    Err(Error::Factorization("interior-point method did not converge".into()))
}
