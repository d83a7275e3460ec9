//! Command-line interface.
//!
//! Exit status is 0 on success, 1 when a command fails at run time (bad
//! input file, numeric failure) and 2 for usage errors, including option
//! combinations no solver supports.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{cross_validate, parse_method_list, CvConfig, Grid};
use crate::data::{evaluate, load_dataset, load_features, synth_two_lines, write_dataset, DataFormat, TargetColumn, TwoLinesParams};
use crate::model_file::{load_model, save_model};
use crate::pipeline::{fit_method, FitOptions, KernelChoice, Method};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "edwsvr", version, about = "Distance-weighted epsilon support vector regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it to a file.
    Train(TrainArgs),
    /// Predict with a saved model, one value per line.
    Predict(PredictArgs),
    /// Repeated k-fold cross-validation of several methods.
    Cv(CvArgs),
    /// Generate the two-lines synthetic dataset.
    Synth(SynthArgs),
    /// Score a predictions file against dataset targets.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Sparse,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Sparse => DataFormat::Sparse { n_features: None },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cd,
    Asgd,
    Esvr,
    Ols,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cd => Method::Cd,
            MethodArg::Asgd => Method::Asgd,
            MethodArg::Esvr => Method::Esvr,
            MethodArg::Ols => Method::Ols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input dataset.
    #[arg(long = "in", visible_alias = "data")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Target column name, or zero-based index (CSV only).
    #[arg(long, default_value = "y")]
    pub target: String,
}

impl DataArgs {
    fn target_column(&self) -> Result<TargetColumn> {
        self.target.parse()
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    /// Box constraint C.
    #[arg(long = "C", visible_alias = "c", default_value_t = 1.0)]
    pub c_upper: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelArg,
    /// RBF width; defaults to 1/d after preprocessing.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Keep this fraction of variance with PCA after normalization.
    #[arg(long = "pca-var")]
    pub pca_var: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// SGD passes over the data.
    #[arg(long, default_value_t = 5)]
    pub passes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    fn options(&self, method: Method) -> Result<FitOptions> {
        let kernel = match self.kernel {
            KernelArg::Linear => {
                if self.gamma.is_some() {
                    return Err(Error::invalid("--gamma requires --kernel rbf"));
                }
                KernelChoice::Linear
            }
            KernelArg::Rbf => KernelChoice::Rbf { gamma: self.gamma },
        };
        let opts = FitOptions {
            method,
            kernel,
            lambda1: self.lambda1,
            c_upper: self.c_upper,
            epsilon: self.epsilon,
            pca_variance: self.pca_var,
            max_sweeps: self.max_sweeps,
            tol: self.tol,
            passes: self.passes,
            seed: self.seed,
        };
        opts.check()?;
        Ok(opts)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, visible_alias = "method", value_enum, default_value = "cd")]
    pub solver: MethodArg,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Where to write the model.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated: cd, cd-linear, cd-rbf, esvr, esvr-linear, esvr-rbf, asgd, ols.
    #[arg(long, default_value = "cd-rbf,esvr-rbf,ols")]
    pub methods: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 30)]
    pub repeats: usize,
    /// Hyperparameter grid searched on an inner validation split of every
    /// training fold, e.g. `C=0.1,1,10;epsilon=0.01,0.1;gamma=0.5,1`.
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Dataset label used in the report.
    #[arg(long)]
    pub name: Option<String>,
    /// Write a CSV report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall-clock time per fold.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.826)]
    pub frac_a: f64,
    #[arg(long, default_value_t = 0.165)]
    pub frac_b: f64,
    #[arg(long, default_value_t = 0.008)]
    pub frac_out: f64,
    #[arg(long, default_value_t = 0.2)]
    pub offset: f64,
    #[arg(long, default_value_t = 0.01)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// CSV output with columns x,y; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional file with one group label (A, B, outlier) per sample.
    #[arg(long)]
    pub groups_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// One prediction per line.
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidArgument(_) | Error::MissingTarget(_))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let opts = a.model.options(a.solver.into())?;
    let data = load_dataset(&a.data.data, a.data.format.into(), &a.data.target_column()?)?;
    let model = fit_method(&data, &opts)?;
    save_model(&model, &a.out)?;
    let preds = model.predict_all(&data)?;
    let m = evaluate(&preds, &data.targets)?;
    eprintln!("trained {} on {} samples; training MSE {:.6}", opts.method, data.n_samples(), m.mse);
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let (features, targets) = load_features(&a.data.data, a.data.format.into(), &a.data.target_column()?)?;
    if features.ncols() != model.n_features() {
        return Err(Error::dims(model.n_features(), features.ncols()));
    }
    let preds = (0..features.nrows())
        .map(|i| model.predict(&features.row(i).iter().copied().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for p in &preds {
        writeln!(out, "{p:?}")?;
    }
    out.flush()?;
    if let Some(t) = targets {
        let m = evaluate(&preds, &t)?;
        eprintln!("MSE {:.6} R2 {}", m.mse, m.r2.map_or("undefined".into(), |r| format!("{r:.4}")));
    }
    Ok(())
}

fn cv(a: CvArgs) -> Result<()> {
    let base = a.model.options(Method::Cd)?;
    let methods = parse_method_list(&a.methods, &base)?;
    if methods.is_empty() {
        return Err(Error::invalid("no methods given"));
    }
    if a.folds < 2 {
        return Err(Error::invalid("--folds must be at least 2"));
    }
    let data = load_dataset(&a.data.data, a.data.format.into(), &a.data.target_column()?)?;
    let cfg = CvConfig { folds: a.folds, repeats: a.repeats, seed: a.model.seed, grid: a.grid.clone() };
    let name = a.name.clone().unwrap_or_else(|| {
        a.data.data.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned())
    });
    let report = cross_validate(&data, &name, &methods, &cfg)?;
    report.write_table(io::stdout().lock(), a.timing)?;
    if let Some(path) = &a.report {
        report.write_csv(BufWriter::new(File::create(path)?), a.timing)?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let params = TwoLinesParams {
        n: a.n,
        frac_a: a.frac_a,
        frac_b: a.frac_b,
        frac_outlier: a.frac_out,
        offset: a.offset,
        noise_sd: a.noise_sd,
        seed: a.seed,
    };
    let s = synth_two_lines(&params)?;
    let ds = s.dataset.clone().with_feature_names(vec!["x".into()])?;
    match &a.out {
        Some(p) => write_dataset(BufWriter::new(File::create(p)?), &ds, DataFormat::Csv, "y")?,
        None => write_dataset(BufWriter::new(io::stdout().lock()), &ds, DataFormat::Csv, "y")?,
    }
    if let Some(path) = &a.groups_out {
        let mut w = BufWriter::new(File::create(path)?);
        for g in &s.groups {
            writeln!(w, "{}", g.label())?;
        }
        w.flush()?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.predictions)?;
    let preds = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: a.predictions.clone(),
                line: i + 1,
                message: format!("bad prediction `{}`", l.trim()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let data = load_dataset(&a.data.data, a.data.format.into(), &a.data.target_column()?)?;
    let m = evaluate(&preds, &data.targets)?;
    println!("mse {:?}", m.mse);
    match m.r2 {
        Some(r) => println!("r2 {r:?}"),
        None => println!("r2 undefined"),
    }
    Ok(())
}
