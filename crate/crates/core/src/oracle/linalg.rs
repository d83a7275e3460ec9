//! Dense helpers for the oracle. Deliberately naive.

pub type Mat = Vec<Vec<f64>>;

pub fn mat_vec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    let (n, m) = (a.len(), a.first().map_or(0, Vec::len));
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let bt = transpose(b);
    a.iter()
        .map(|row| bt.iter().map(|col| row.iter().zip(col).map(|(p, q)| p * q).sum()).collect())
        .collect()
}

/// Solves `a x = b` for every column of `b` by Gaussian elimination with
/// partial pivoting. Returns `None` for a numerically singular `a`.
pub fn gauss_solve(a: &Mat, b: &Mat) -> Option<Mat> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut aug: Mat = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().chain(rb).copied().collect())
        .collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))?;
        if aug[pivot][col].abs() <= 1e-300_f64.max(scale * 1e-15) {
            return None;
        }
        aug.swap(col, pivot);
        for r in col + 1..n {
            let f = aug[r][col] / aug[col][col];
            if f != 0.0 {
                for c in col..n + m {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for c in 0..m {
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| aug[r][k] * x[k][c]).sum();
            x[r][c] = (aug[r][n + c] - s) / aug[r][r];
        }
    }
    Some(x)
}

pub fn solve_vec(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let cols: Mat = b.iter().map(|&v| vec![v]).collect();
    gauss_solve(a, &cols).map(|x| x.into_iter().map(|r| r[0]).collect())
}

pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let eye: Mat = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    gauss_solve(a, &eye)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the matching eigenvectors as columns of the second value.
pub fn jacobi_eigen(sym: &Mat) -> (Vec<f64>, Mat) {
    let n = sym.len();
    let mut a = sym.clone();
    let mut v: Mat = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}
