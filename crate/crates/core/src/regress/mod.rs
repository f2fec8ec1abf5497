//! Regression models mapping structural features to R0, their evaluation and
//! a shared serialisable wrapper.

pub mod ann;
pub mod eval;
pub mod kernel;
pub mod linear;
pub mod svr;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ann::{check_hidden_bound, hidden_neurons_rule, max_hidden_neurons, predict_ann, train_ann, AnnConfig, AnnFit, AnnModel};
pub use eval::{cross_validate, evaluate, AccuracyReport, Score};
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use linear::{train_linear, LinearModel};
pub use svr::{kkt_violation, predict_svr, train_svr, SvrFit, SvrModel, SvrParams};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// What to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Svr(SvrParams),
    Ann(AnnConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    /// Standardise features with training-set statistics before fitting.
    #[serde(default)]
    pub standardize: bool,
}

/// Named presets: `linear`, `svr-linear`, `svr-poly`, `svr-rbf`, `ann`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Linear,
    SvrLinear,
    SvrPoly,
    SvrRbf,
    Ann,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Linear,
        Preset::SvrLinear,
        Preset::SvrPoly,
        Preset::SvrRbf,
        Preset::Ann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Linear => "linear",
            Preset::SvrLinear => "svr-linear",
            Preset::SvrPoly => "svr-poly",
            Preset::SvrRbf => "svr-rbf",
            Preset::Ann => "ann",
        }
    }

    /// Default hyperparameters for `features` input columns: polynomial
    /// kernel with gamma 0.1 and degree 2, RBF gamma = 1 / features.
    ///
    /// Features are standardised by default. The raw columns differ in scale
    /// by two orders of magnitude (density against maximum degree), which
    /// leaves a fixed-gamma RBF kernel close to zero between almost all pairs
    /// of a small corpus.
    pub fn spec(self, features: usize) -> ModelSpec {
        let model = match self {
            Preset::Linear => ModelKind::Linear,
            Preset::SvrLinear => ModelKind::Svr(SvrParams::new(KernelSpec::linear())),
            Preset::SvrPoly => ModelKind::Svr(SvrParams::new(KernelSpec::polynomial(0.1, 2, 0.0))),
            Preset::SvrRbf => ModelKind::Svr(SvrParams::new(KernelSpec::rbf(1.0 / features as f64))),
            Preset::Ann => ModelKind::Ann(AnnConfig::default()),
        };
        ModelSpec {
            model,
            standardize: true,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown model {s:?}; expected one of linear, svr-linear, svr-poly, svr-rbf, ann"
                ))
            })
    }
}

/// Per-column affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let dim = x.first().map(Vec::len).unwrap_or(0);
        let n = x.len().max(1) as f64;
        let mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedModel {
    Linear(LinearModel),
    Svr(SvrModel),
    Ann(AnnModel),
}

/// A trained model with the column names it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub spec: ModelSpec,
    pub scaler: Option<Standardizer>,
    pub fitted: FittedModel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Free-form key/value record of how the model was produced.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::param(format!(
                "model expects {} features ({}), got {}",
                self.feature_names.len(),
                self.feature_names.join(","),
                x.len()
            )));
        }
        let scaled;
        let input = match &self.scaler {
            Some(s) => {
                scaled = s.apply(x);
                scaled.as_slice()
            }
            None => x,
        };
        match &self.fitted {
            FittedModel::Linear(m) => m.predict(input),
            FittedModel::Svr(m) => m.predict(input),
            FittedModel::Ann(m) => m.predict(input),
        }
    }

    /// Predicts every row, after checking that the dataset's columns match.
    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        if dataset.feature_names != self.feature_names {
            return Err(Error::param(format!(
                "dataset columns [{}] do not match model columns [{}]",
                dataset.feature_names.join(","),
                self.feature_names.join(",")
            )));
        }
        dataset.samples.iter().map(|s| self.predict(&s.features)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        let dim = model.feature_names.len();
        let inner_dim = match &model.fitted {
            FittedModel::Linear(m) => Some(m.dim()),
            FittedModel::Svr(m) => (!m.support_inputs.is_empty()).then(|| m.dim()),
            FittedModel::Ann(m) => Some(m.dim()),
        };
        if inner_dim.is_some_and(|d| d != dim) {
            return Err(Error::Model(format!(
                "model weights expect {} inputs but {dim} feature names are listed",
                inner_dim.unwrap_or(0)
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fits `spec` on every row of `dataset`. `seed` drives the network
/// initialisation and batch order; the other models are deterministic.
pub fn train(dataset: &Dataset, spec: &ModelSpec, seed: u64) -> Result<TrainedModel> {
    let raw = dataset.features();
    let y = dataset.labels();
    let scaler = spec.standardize.then(|| Standardizer::fit(&raw));
    let x: Vec<Vec<f64>> = match &scaler {
        Some(s) => raw.iter().map(|r| s.apply(r)).collect(),
        None => raw,
    };
    let mut notes = Vec::new();
    let fitted = match &spec.model {
        ModelKind::Linear => FittedModel::Linear(train_linear(&x, &y)?),
        ModelKind::Svr(params) => {
            let fit = train_svr(&x, &y, params)?;
            if !fit.converged {
                notes.push(format!(
                    "SVR solver hit the iteration cap after {} updates",
                    fit.iterations
                ));
            }
            FittedModel::Svr(fit.model)
        }
        ModelKind::Ann(cfg) => FittedModel::Ann(train_ann(&x, &y, cfg, seed)?.model),
    };
    Ok(TrainedModel {
        feature_names: dataset.feature_names.clone(),
        spec: spec.clone(),
        scaler,
        fitted,
        notes,
        provenance: BTreeMap::new(),
    })
}
