//! Acceptance suite. Runs without the libtest harness so the per-criterion
//! lines are always printed. Criteria run in sequence so the runtime limits
//! are measured without contention; each prints exactly one
//! `acceptance <id>: PASS|FAIL ...` line and any failure exits nonzero.

use std::time::{Duration, Instant};

use edwsvr::asgd_solver::{augmented_rows, full_gradient, objective, stochastic_gradient, train_asgd, AsgdConfig};
use edwsvr::baselines::{fit_esvr, EsvrConfig};
use edwsvr::bench::{cross_validate, parse_method_list, CvConfig};
use edwsvr::cd_solver::{fit_cd, precompute, CdConfig, CdSolver};
use edwsvr::data::{load_dataset, synth_two_lines, DataFormat, Dataset, LineGroup, Preprocessor, TargetColumn, TwoLinesParams};
use edwsvr::kernels::{gram_augmented, KernelSpec};
use edwsvr::model_file::{model_to_string, read_model};
use edwsvr::oracle::{finite_diff_check, solve_primal, solve_primal_pg, PrimalProblem};
use edwsvr::pipeline::{fit_method, FitOptions, KernelChoice, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(limit_secs: u64, elapsed: Duration) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Nonlinear target plus noise, then min-max normalized (targets in [0, 1]).
fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let rows = uniform_rows(rng, n, d);
    let y = rows
        .iter()
        .map(|r| (3.0 * r[0]).sin() + r.iter().skip(1).sum::<f64>() * 0.5 + 0.1 * normal(rng))
        .collect();
    let raw = Dataset::from_rows(&rows, y).unwrap();
    Preprocessor::fit(&raw, None).unwrap().transform(&raw).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn training_predictions(model: &edwsvr::cd_solver::DualModel, data: &Dataset) -> Vec<f64> {
    (0..data.n_samples()).map(|i| model.decision(&data.row(i)).unwrap()).collect()
}

fn c1_unbiased_gradient() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (n, d) = (200, 5);
    let rows = uniform_rows(&mut rng, n, d);
    let y: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() + 0.3 * normal(&mut rng)).collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let cfg = AsgdConfig { lambda1: 1.0, c_upper: 1.0, epsilon: 0.1, ..Default::default() };
    let aug = augmented_rows(&data);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w: Vec<f64> = (0..=d).map(|_| normal(&mut rng)).collect();
        let mut avg = vec![0.0; d + 1];
        for (x, &yi) in aug.iter().zip(&data.targets) {
            for (a, g) in avg.iter_mut().zip(stochastic_gradient(&w, x, yi, n, &cfg)) {
                *a += g / n as f64;
            }
        }
        let full = full_gradient(&w, &data, &cfg).unwrap();
        let norm = full.iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst = worst.max(max_abs_diff(&avg, &full) / norm);
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-10 && within(5, t),
        detail: format!("max relative error {worst:.2e} (limit 1e-10), {:.2}s (limit 5s)", t.as_secs_f64()),
    }
}

fn c2_finite_differences() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (n, d, eps) = (100, 4, 0.1);
    let cfg = AsgdConfig { lambda1: 1.0, c_upper: 1.0, epsilon: eps, ..Default::default() };
    let rows = uniform_rows(&mut rng, n, d);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        // Place every residual at least 1e-3 away from the kinks at ±ε.
        let w: Vec<f64> = (0..=d).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                let f: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d];
                let off = if rng.random::<bool>() {
                    rng.random_range(0.0..eps - 1e-3)
                } else {
                    rng.random_range(eps + 1e-3..eps + 1.0)
                };
                f + if rng.random::<bool>() { off } else { -off }
            })
            .collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let err = finite_diff_check(
            |v| objective(v, &data, &cfg).unwrap(),
            |v| full_gradient(v, &data, &cfg).unwrap(),
            &w,
            1e-6,
        );
        worst = worst.max(err);
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-5 && within(5, t),
        detail: format!("max relative error {worst:.2e} (limit 1e-5), {:.2}s (limit 5s)", t.as_secs_f64()),
    }
}

fn c3_primal_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    let mut worst_pg = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(10..=30);
        let d = rng.random_range(1..=3);
        let data = random_instance(&mut rng, n, d);
        let spec = if i % 2 == 0 { KernelSpec::Linear } else { KernelSpec::rbf([0.5, 1.0, 2.0][i % 3]).unwrap() };
        let lambda1 = [0.0, 1.0, 10.0][i % 3];
        let c_upper = [0.5, 1.0, 4.0][(i / 3) % 3];
        let epsilon = [0.01, 0.05, 0.1][(i / 2) % 3];
        // Narrow-kernel instances with lambda1 = 0 are ill-conditioned and
        // need more than the default 1000 sweeps.
        let cfg = CdConfig { lambda1, c_upper, epsilon, max_sweeps: 100_000, ..Default::default() };
        let fit = fit_cd(&data, &spec, &cfg).unwrap();
        let cd = training_predictions(&fit.model, &data);
        let oracle = solve_primal(&PrimalProblem::kernel(&spec, &data, lambda1, c_upper, epsilon)).unwrap();
        worst = worst.max(max_abs_diff(&cd, &oracle.predictions));
        let pg = solve_primal_pg(&spec, &data, lambda1, c_upper, epsilon, 5000, 1.0);
        worst_pg = worst_pg.max(max_abs_diff(&pg.predictions, &oracle.predictions));
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-3 && within(60, t),
        detail: format!(
            "max |cd - primal| {worst:.2e} (limit 1e-3; subgradient oracle itself is {worst_pg:.2e} from the primal optimum), {:.2}s (limit 60s)",
            t.as_secs_f64()
        ),
    }
}

fn c4_lambda_zero_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let n = rng.random_range(10..=50);
        let d = rng.random_range(1..=4);
        let data = random_instance(&mut rng, n, d);
        let spec = if i % 2 == 0 { KernelSpec::rbf(1.0).unwrap() } else { KernelSpec::Linear };
        let (c_upper, epsilon) = ([0.5, 2.0][i % 2], [0.02, 0.1][(i / 2) % 2]);
        let cd = fit_cd(&data, &spec, &CdConfig { lambda1: 0.0, c_upper, epsilon, tol: 1e-9, max_sweeps: 20_000, ..Default::default() })
            .unwrap();
        let es = fit_esvr(&data, &spec, &EsvrConfig { c_upper, epsilon, tol: 1e-9, max_sweeps: 20_000 }).unwrap();
        worst = worst.max(max_abs_diff(&training_predictions(&cd.model, &data), &training_predictions(&es.model, &data)));
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-4 && within(30, t),
        detail: format!("max |cd - esvr| {worst:.2e} (limit 1e-4), {:.2}s (limit 30s)", t.as_secs_f64()),
    }
}

fn c5_monotone_descent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut box_ok = true;
    let mut updates = 0usize;
    for i in 0..6 {
        let n = rng.random_range(10..=50);
        let data = random_instance(&mut rng, n, 2);
        let spec = if i % 2 == 0 { KernelSpec::rbf(2.0).unwrap() } else { KernelSpec::Linear };
        let cfg = CdConfig { lambda1: [0.0, 1.0, 10.0][i % 3], c_upper: [0.3, 3.0][i % 2], epsilon: 0.05, ..Default::default() };
        let pre = precompute(&gram_augmented(&spec, &data.features), &cfg).unwrap();
        let mut solver = CdSolver::new(&pre, &data.targets, &cfg).unwrap();
        let mut prev = solver.dual_objective();
        for _sweep in 0..30 {
            for k in 0..2 * n {
                solver.update(k).unwrap();
                let now = solver.dual_objective();
                worst_rise = worst_rise.max(now - prev);
                prev = now;
                updates += 1;
                let st = solver.state();
                box_ok &= st.beta.iter().chain(&st.beta_star).all(|&b| (0.0..=cfg.c_upper).contains(&b));
            }
        }
    }
    Outcome {
        pass: worst_rise <= 1e-12 && box_ok,
        detail: format!("{updates} updates, largest objective increase {worst_rise:.2e} (limit 1e-12), box feasible: {box_ok}"),
    }
}

fn c6_asgd_convergence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (n, d) = (500, 10);
    let rows = uniform_rows(&mut rng, n, d);
    let w_true: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let y = rows
        .iter()
        .map(|r| r.iter().zip(&w_true).map(|(a, b)| a * b).sum::<f64>() + 0.5 + 0.1 * normal(&mut rng))
        .collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let cfg = AsgdConfig { lambda1: 1.0, c_upper: 1.0, epsilon: 0.05, passes: 500, ..Default::default() };
    let model = train_asgd(&data, &cfg).unwrap();
    let g_bar = objective(&model.w_aug, &data, &cfg).unwrap();
    let star = solve_primal(&PrimalProblem::linear(&data, cfg.lambda1, cfg.c_upper, cfg.epsilon)).unwrap();
    let g_star = objective(&star.z, &data, &cfg).unwrap();
    let t = start.elapsed();
    let gap = g_bar - g_star;
    Outcome {
        pass: gap <= 0.01 * g_star.abs() && within(30, t),
        detail: format!(
            "g(w_bar) = {g_bar:.6}, g(w*) = {g_star:.6}, excess {:.3}% (limit 1%), {:.2}s (limit 30s)",
            100.0 * gap / g_star.abs(),
            t.as_secs_f64()
        ),
    }
}

fn c7_two_lines() -> Outcome {
    let start = Instant::now();
    let s = synth_two_lines(&TwoLinesParams { seed: 7, ..Default::default() }).unwrap();
    let line_a = s.indices(LineGroup::A);
    let mse_a = |method: Method| {
        let opts = FitOptions { method, kernel: KernelChoice::Linear, c_upper: 1e-3, epsilon: 1e-3, lambda1: 1.0, ..Default::default() };
        let p = fit_method(&s.dataset, &opts).unwrap().predict_all(&s.dataset).unwrap();
        line_a.iter().map(|&i| (p[i] - s.dataset.targets[i]).powi(2)).sum::<f64>() / line_a.len() as f64
    };
    let (ols, esvr, dw) = (mse_a(Method::Ols), mse_a(Method::Esvr), mse_a(Method::Cd));
    let t = start.elapsed();
    Outcome {
        pass: ols > esvr && ols > dw && dw <= esvr && within(10, t),
        detail: format!(
            "line-A MSE: ols {ols:.3e}, e-svr {esvr:.3e}, e-dwsvr {dw:.3e} (C = 1e-3, eps = 1e-3), {:.2}s (limit 10s)",
            t.as_secs_f64()
        ),
    }
}

fn c8_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let rows = uniform_rows(&mut rng, 60, 3);
    let y = rows.iter().map(|r| r[0] * 2.0 - r[1] + (4.0 * r[2]).sin() + 0.1 * normal(&mut rng)).collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let mut ok = true;
    for spec in ["cd-rbf", "cd-linear", "esvr-rbf", "asgd", "ols"] {
        let mut opts = parse_method_list(spec, &FitOptions { seed: 3, pca_variance: Some(0.95), ..Default::default() }).unwrap();
        let opts = opts.remove(0).options;
        let a = fit_method(&data, &opts).unwrap();
        let b = fit_method(&data, &opts).unwrap();
        let text = model_to_string(&a);
        ok &= text == model_to_string(&b);
        let loaded = read_model(text.as_bytes()).unwrap();
        let p_mem = a.predict_all(&data).unwrap();
        let p_disk = loaded.predict_all(&data).unwrap();
        ok &= p_mem.iter().zip(&p_disk).all(|(x, y)| x.to_bits() == y.to_bits());
    }
    let methods = parse_method_list("cd-rbf,asgd,ols", &FitOptions::default()).unwrap();
    let cfg = CvConfig { folds: 3, repeats: 2, seed: 9, grid: None };
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    cross_validate(&data, "det", &methods, &cfg).unwrap().write_csv(&mut r1, false).unwrap();
    cross_validate(&data, "det", &methods, &cfg).unwrap().write_csv(&mut r2, false).unwrap();
    ok &= r1 == r2;
    Outcome {
        pass: ok,
        detail: "identical seeds give byte-identical models and CV reports; load(save(m)) predicts bitwise".into(),
    }
}

fn c9_end_to_end_cv() -> Outcome {
    let start = Instant::now();
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/friedman1.csv");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let code = edwsvr::cli::run([
        "edwsvr",
        "cv",
        "--in",
        path.to_str().unwrap(),
        "--methods",
        "cd-rbf,cd-linear,esvr,asgd,ols",
        "--folds",
        "5",
        "--repeats",
        "3",
        "--seed",
        "1",
        "--report",
        report.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&report).unwrap_or_default();
    let records: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    let finite = records.iter().all(|r| {
        r.len() == 6 && r[3].parse::<f64>().is_ok_and(f64::is_finite) && r[4].parse::<f64>().is_ok_and(f64::is_finite) && r[5] == "15"
    });
    let t = start.elapsed();
    let n_samples = load_dataset(&path, DataFormat::Csv, &TargetColumn::default()).map(|d| d.n_samples()).unwrap_or(0);
    Outcome {
        pass: code == 0 && records.len() == 10 && finite && within(300, t),
        detail: format!(
            "exit {code}, {} report records over {n_samples} samples, all finite with 15 folds each: {finite}, {:.1}s (limit 300s)",
            records.len(),
            t.as_secs_f64()
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 unbiased stochastic gradient", c1_unbiased_gradient),
        ("2 finite-difference gradient", c2_finite_differences),
        ("3 cd vs primal oracle", c3_primal_equivalence),
        ("4 lambda1 = 0 reduces to e-svr", c4_lambda_zero_reduction),
        ("5 monotone dual descent, box feasibility", c5_monotone_descent),
        ("6 asgd convergence", c6_asgd_convergence),
        ("7 two-lines ordering", c7_two_lines),
        ("8 determinism and persistence", c8_determinism),
        ("9 end-to-end cross-validation", c9_end_to_end_cv),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let out = run();
        println!("acceptance {name}: {} {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        if !out.pass {
            failed.push(name);
        }
    }
    println!("acceptance summary: {} of 9 passed", 9 - failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
