//! Plain-text model files.
//!
//! ```text
//! edwsvr-model v1
//! kind dual
//! kernel rbf 0.5
//! preprocess minmax 2
//! range 0.0 4.0
//! range -1.0 1.0
//! target 3.0 9.5
//! pca none
//! support 1 2
//! 0.25 0.1 0.9
//! end
//! ```
//!
//! Linear models replace the `kernel` and `support` records with
//! `weights <len>` followed by one line of values. Floats are written in
//! shortest round-trip form, so save followed by load is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::asgd_solver::LinearModel;
use crate::cd_solver::DualModel;
use crate::data::{NormalizationMap, PcaTransform, Preprocessor};
use crate::kernels::KernelSpec;
use crate::pipeline::Model;
use crate::{Error, Result};

pub const MAGIC: &str = "edwsvr-model";
pub const VERSION: u32 = 1;

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

pub fn model_to_string(model: &Model) -> String {
    let mut out = format!("{MAGIC} v{VERSION}\n");
    match model {
        Model::Dual(_) => out.push_str("kind dual\n"),
        Model::Linear(_) => out.push_str("kind linear\n"),
    }
    if let Model::Dual(m) = model {
        let _ = writeln!(out, "kernel {}", m.spec);
    }
    match model.preprocessing() {
        None => out.push_str("preprocess none\n"),
        Some(p) => {
            let _ = writeln!(out, "preprocess minmax {}", p.normalization.n_features());
            for &(lo, hi) in &p.normalization.features {
                let _ = writeln!(out, "range {}", join([lo, hi]));
            }
            let (lo, hi) = p.normalization.target;
            let _ = writeln!(out, "target {}", join([lo, hi]));
            match &p.pca {
                None => out.push_str("pca none\n"),
                Some(pca) => {
                    let (d, k) = pca.components.shape();
                    let _ = writeln!(out, "pca {d} {k} {:?}", pca.retained_variance_fraction);
                    let _ = writeln!(out, "mean {}", join(pca.mean.iter().copied()));
                    for row in pca.components.row_iter() {
                        let _ = writeln!(out, "component {}", join(row.iter().copied()));
                    }
                }
            }
        }
    }
    match model {
        Model::Dual(m) => {
            let _ = writeln!(out, "support {} {}", m.n_support(), m.n_features());
            for (i, t) in m.theta.iter().enumerate() {
                let row = m.support_points.row(i);
                let _ = writeln!(out, "{}", join(std::iter::once(*t).chain(row.iter().copied())));
            }
        }
        Model::Linear(m) => {
            let _ = writeln!(out, "weights {}", m.w_aug.len());
            let _ = writeln!(out, "{}", join(m.w_aug.iter().copied()));
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_model(model: &Model, mut writer: impl Write) -> Result<()> {
    writer.write_all(model_to_string(model).as_bytes())?;
    Ok(())
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    read_model(fs::File::open(path)?)
}

struct Lines {
    lines: Vec<String>,
    pos: usize,
}

impl Lines {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat { line: self.pos, message: message.into() }
    }

    fn next(&mut self) -> Result<&str> {
        loop {
            if self.pos >= self.lines.len() {
                self.pos += 1;
                return Err(self.err("unexpected end of file"));
            }
            self.pos += 1;
            if !self.lines[self.pos - 1].trim().is_empty() {
                return Ok(self.lines[self.pos - 1].trim());
            }
        }
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn record(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?.to_string();
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}` record, found `{line}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn floats(&self, fields: &[String], expected: usize) -> Result<Vec<f64>> {
        if fields.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| self.err(format!("bad number `{f}`"))))
            .collect()
    }

    fn count(&self, field: Option<&String>) -> Result<usize> {
        let f = field.ok_or_else(|| self.err("missing count"))?;
        f.parse().map_err(|_| self.err(format!("bad count `{f}`")))
    }
}

pub fn read_model(reader: impl Read) -> Result<Model> {
    let lines = BufReader::new(reader).lines().collect::<std::io::Result<Vec<_>>>()?;
    let mut p = Lines { lines, pos: 0 };
    let header = p.next()?.to_string();
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [magic, v] if *magic == MAGIC => {
            if *v != format!("v{VERSION}") {
                return Err(p.err(format!("unsupported model version `{v}`")));
            }
        }
        _ => return Err(p.err("not a model file")),
    }
    let kind = p.record("kind")?;
    let dual = match kind.as_slice() {
        [k] if k == "dual" => true,
        [k] if k == "linear" => false,
        _ => return Err(p.err("kind must be `dual` or `linear`")),
    };
    let spec = if dual {
        let fields = p.record("kernel")?;
        Some(fields.join(" ").parse::<KernelSpec>().map_err(|e| p.err(e.to_string()))?)
    } else {
        None
    };

    let pre_fields = p.record("preprocess")?;
    let preprocessing = match pre_fields.first().map(String::as_str) {
        Some("none") if pre_fields.len() == 1 => None,
        Some("minmax") if pre_fields.len() == 2 => {
            let d = p.count(pre_fields.get(1))?;
            let mut features = Vec::with_capacity(d);
            for _ in 0..d {
                let f = p.record("range")?;
                let v = p.floats(&f, 2)?;
                features.push((v[0], v[1]));
            }
            let f = p.record("target")?;
            let t = p.floats(&f, 2)?;
            let pca_fields = p.record("pca")?;
            let pca = if pca_fields.first().map(String::as_str) == Some("none") {
                None
            } else {
                if pca_fields.len() != 3 {
                    return Err(p.err("pca record needs `<d> <k> <retained>`"));
                }
                let (pd, k) = (p.count(pca_fields.first())?, p.count(pca_fields.get(1))?);
                if pd != d {
                    return Err(p.err(format!("pca expects {pd} inputs but normalization has {d}")));
                }
                let retained = p.floats(&pca_fields[2..], 1)?[0];
                let f = p.record("mean")?;
                let mean = p.floats(&f, d)?;
                let mut comps = Vec::with_capacity(d * k);
                for _ in 0..d {
                    let f = p.record("component")?;
                    comps.extend(p.floats(&f, k)?);
                }
                Some(PcaTransform {
                    mean: DVector::from_vec(mean),
                    components: DMatrix::from_row_slice(d, k, &comps),
                    retained_variance_fraction: retained,
                })
            };
            Some(Preprocessor {
                normalization: NormalizationMap { features, target: (t[0], t[1]) },
                pca,
            })
        }
        _ => return Err(p.err("preprocess must be `none` or `minmax <d>`")),
    };

    let model = if let Some(spec) = spec {
        let f = p.record("support")?;
        if f.len() != 2 {
            return Err(p.err("support record needs `<count> <features>`"));
        }
        let (m, d) = (p.count(f.first())?, p.count(f.get(1))?);
        let mut theta = Vec::with_capacity(m);
        let mut points = Vec::with_capacity(m * d);
        for _ in 0..m {
            let line: Vec<String> = p.next()?.split_whitespace().map(str::to_string).collect();
            let v = p.floats(&line, d + 1)?;
            theta.push(v[0]);
            points.extend_from_slice(&v[1..]);
        }
        Model::Dual(DualModel {
            theta,
            support_points: DMatrix::from_row_slice(m, d, &points),
            spec,
            preprocessing,
        })
    } else {
        let f = p.record("weights")?;
        if f.len() != 1 {
            return Err(p.err("weights record needs `<len>`"));
        }
        let len = p.count(f.first())?;
        if len == 0 {
            return Err(p.err("weights must include the bias"));
        }
        let line: Vec<String> = p.next()?.split_whitespace().map(str::to_string).collect();
        let w_aug = p.floats(&line, len)?;
        Model::Linear(LinearModel { w_aug, preprocessing })
    };
    if p.next()? != "end" {
        return Err(p.err("expected `end`"));
    }
    if let Some(pre) = model.preprocessing() {
        let inner = match &model {
            Model::Dual(m) => m.n_features(),
            Model::Linear(m) => m.n_features(),
        };
        if inner != pre.n_output_features() {
            return Err(p.err(format!(
                "model expects {inner} features but preprocessing produces {}",
                pre.n_output_features()
            )));
        }
    }
    Ok(model)
}
