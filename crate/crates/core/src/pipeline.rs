//! Method selection: fit preprocessing on the training split, train one of
//! the regressors on the transformed data, and wrap the result so it
//! predicts on raw rows in raw target units.

use std::fmt;
use std::str::FromStr;

use crate::asgd_solver::{train_asgd, AsgdConfig, LinearModel};
use crate::baselines::{train_esvr, train_ols, EsvrConfig};
use crate::cd_solver::{train_cd, CdConfig, DualModel};
use crate::data::{Dataset, Preprocessor};
use crate::kernels::KernelSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Distance-weighted SVR, dual coordinate descent.
    Cd,
    /// Distance-weighted SVR, averaged SGD (linear kernel only).
    Asgd,
    /// Bias-augmented epsilon-SVR.
    Esvr,
    /// Least squares.
    Ols,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cd => "cd",
            Method::Asgd => "asgd",
            Method::Esvr => "esvr",
            Method::Ols => "ols",
        }
    }

    pub fn is_kernelized(self) -> bool {
        matches!(self, Method::Cd | Method::Esvr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cd" => Ok(Method::Cd),
            "asgd" => Ok(Method::Asgd),
            "esvr" => Ok(Method::Esvr),
            "ols" => Ok(Method::Ols),
            other => Err(Error::invalid(format!("unknown method `{other}` (expected cd, asgd, esvr or ols)"))),
        }
    }
}

/// Kernel request; an RBF width left unset becomes `1/d` for the feature
/// count after preprocessing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    Rbf { gamma: Option<f64> },
}

impl KernelChoice {
    pub fn resolve(self, n_features: usize) -> Result<KernelSpec> {
        match self {
            KernelChoice::Linear => Ok(KernelSpec::Linear),
            KernelChoice::Rbf { gamma: Some(g) } => KernelSpec::rbf(g),
            KernelChoice::Rbf { gamma: None } => Ok(KernelSpec::rbf_default(n_features)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub method: Method,
    pub kernel: KernelChoice,
    pub lambda1: f64,
    pub c_upper: f64,
    pub epsilon: f64,
    pub pca_variance: Option<f64>,
    pub max_sweeps: usize,
    pub tol: f64,
    pub passes: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        let cd = CdConfig::default();
        let asgd = AsgdConfig::default();
        FitOptions {
            method: Method::Cd,
            kernel: KernelChoice::Rbf { gamma: None },
            lambda1: cd.lambda1,
            c_upper: cd.c_upper,
            epsilon: cd.epsilon,
            pca_variance: None,
            max_sweeps: cd.max_sweeps,
            tol: cd.tol,
            passes: asgd.passes,
            seed: asgd.seed,
        }
    }
}

impl FitOptions {
    pub fn cd_config(&self) -> CdConfig {
        CdConfig {
            lambda1: self.lambda1,
            c_upper: self.c_upper,
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
            tol: self.tol,
            ..CdConfig::default()
        }
    }

    pub fn asgd_config(&self) -> AsgdConfig {
        AsgdConfig {
            lambda1: self.lambda1,
            c_upper: self.c_upper,
            epsilon: self.epsilon,
            passes: self.passes,
            seed: self.seed,
            ..AsgdConfig::default()
        }
    }

    pub fn esvr_config(&self) -> EsvrConfig {
        EsvrConfig {
            c_upper: self.c_upper,
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
            tol: self.tol,
        }
    }

    /// Rejects combinations no solver supports.
    pub fn check(&self) -> Result<()> {
        if self.method == Method::Asgd && self.kernel != KernelChoice::Linear {
            return Err(Error::invalid("asgd supports linear only"));
        }
        Ok(())
    }
}

/// A trained regressor with its preprocessing attached.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Dual(DualModel),
    Linear(LinearModel),
}

impl Model {
    pub fn preprocessing(&self) -> Option<&Preprocessor> {
        match self {
            Model::Dual(m) => m.preprocessing.as_ref(),
            Model::Linear(m) => m.preprocessing.as_ref(),
        }
    }

    /// Number of raw input features expected by [`Self::predict`].
    pub fn n_features(&self) -> usize {
        match (self.preprocessing(), self) {
            (Some(p), _) => p.n_input_features(),
            (None, Model::Dual(m)) => m.n_features(),
            (None, Model::Linear(m)) => m.n_features(),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        match self {
            Model::Dual(m) => m.predict(row),
            Model::Linear(m) => m.predict(row),
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        (0..data.n_samples()).map(|i| self.predict(&data.row(i))).collect()
    }
}

/// Fits preprocessing on `train`, then the requested method.
pub fn fit_method(train: &Dataset, opts: &FitOptions) -> Result<Model> {
    opts.check()?;
    let pre = Preprocessor::fit(train, opts.pca_variance)?;
    let data = pre.transform(train)?;
    let model = match opts.method {
        Method::Cd => {
            let spec = opts.kernel.resolve(data.n_features())?;
            Model::Dual(train_cd(&data, &spec, &opts.cd_config())?.with_preprocessing(pre))
        }
        Method::Esvr => {
            let spec = opts.kernel.resolve(data.n_features())?;
            Model::Dual(train_esvr(&data, &spec, &opts.esvr_config())?.with_preprocessing(pre))
        }
        Method::Asgd => Model::Linear(train_asgd(&data, &opts.asgd_config())?.with_preprocessing(pre)),
        Method::Ols => Model::Linear(train_ols(&data)?.with_preprocessing(pre)),
    };
    Ok(model)
}
