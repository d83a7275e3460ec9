//! Central finite differences.

pub fn central_differences(objective: impl Fn(&[f64]) -> f64, point: &[f64], step: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    (0..point.len())
        .map(|j| {
            p[j] = point[j] + step;
            let up = objective(&p);
            p[j] = point[j] - step;
            let down = objective(&p);
            p[j] = point[j];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest deviation between `gradient(point)` and central differences,
/// relative to the largest gradient entry (absolute when that is zero).
pub fn finite_diff_check(
    objective: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Vec<f64>,
    point: &[f64],
    step: f64,
) -> f64 {
    let g = gradient(point);
    let fd = central_differences(objective, point, step);
    let worst = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let norm = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if norm > 0.0 {
        worst / norm
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: &[f64]) -> f64 {
        x.iter().map(|v| (20.0 * v).exp()).sum()
    }

    fn g(x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 20.0 * (20.0 * v).exp()).collect()
    }

    #[test]
    fn error_shrinks_with_step() {
        let p = [0.01, -0.02, 0.03];
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&h| finite_diff_check(f, g, &p, h)).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        assert!(errs[3] < 1e-7);
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let p = [0.01, 0.02];
        let bad = |x: &[f64]| g(x).iter().map(|v| v * 1.01).collect::<Vec<_>>();
        assert!(finite_diff_check(f, bad, &p, 1e-5) > 5e-3);
    }
}
