//! Text featurization and the built-in binary classifiers.

mod features;
pub mod logreg;
pub mod mlp;
pub mod naive_bayes;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label};
use crate::error::{Error, Result};
use crate::seed::rng_for;

pub use features::{feature_tokens, featurize, FeatureConfig, FeatureMethod};
pub use logreg::{LogReg, LogRegParams};
pub use mlp::{Mlp, MlpParams};
pub use naive_bayes::GaussianNb;

pub const MODEL_FORMAT: &str = "cfaudit-model";
pub const MODEL_VERSION: u32 = 1;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Anything that scores a text with P(label = 1).
pub trait Classifier: Send + Sync {
    fn predict_proba(&self, text: &str) -> f64;

    fn predict(&self, text: &str) -> Label {
        u8::from(self.predict_proba(text) >= 0.5)
    }
}

impl<F> Classifier for F
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    fn predict_proba(&self, text: &str) -> f64 {
        self(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[value(name = "logreg")]
    Logreg,
    #[value(name = "gnb")]
    GaussianNb,
    #[value(name = "mlp")]
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub features: FeatureConfig,
    pub logreg: LogRegParams,
    pub mlp: MlpParams,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            features: FeatureConfig::default(),
            logreg: LogRegParams::default(),
            mlp: MlpParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameters {
    Logreg(LogReg),
    GaussianNb(GaussianNb),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_config: FeatureConfig,
    pub seed: u64,
    pub parameters: Parameters,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.parameters {
            Parameters::Logreg(_) => ModelKind::Logreg,
            Parameters::GaussianNb(_) => ModelKind::GaussianNb,
            Parameters::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn proba_features(&self, x: &[f64]) -> f64 {
        match &self.parameters {
            Parameters::Logreg(m) => m.proba(x),
            Parameters::GaussianNb(m) => m.proba(x),
            Parameters::Mlp(m) => m.proba(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind().as_str(),
            "feature_config": self.feature_config,
            "seed": self.seed,
            "parameters": self.parameters,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Stored {
            format: String,
            version: u32,
            feature_config: FeatureConfig,
            seed: u64,
            parameters: Parameters,
        }
        let stored: Stored = serde_json::from_str(text)?;
        if stored.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format `{}`", stored.format)));
        }
        if stored.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {}", stored.version)));
        }
        stored.feature_config.validate()?;
        Ok(TrainedModel {
            feature_config: stored.feature_config,
            seed: stored.seed,
            parameters: stored.parameters,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, text: &str) -> f64 {
        self.proba_features(&featurize(text, &self.feature_config))
    }
}

pub fn train(docs: &[Document], spec: &ModelSpec, seed: u64) -> Result<TrainedModel> {
    spec.features.validate()?;
    if docs.is_empty() {
        return Err(Error::Training("empty training corpus".into()));
    }
    let mut ys = Vec::with_capacity(docs.len());
    for d in docs {
        let y = d
            .label
            .ok_or_else(|| Error::Training(format!("document `{}` has no label", d.id)))?;
        ys.push(f64::from(y));
    }
    if docs.len() < 2 || ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::Training(
            "training corpus must contain both labels".into(),
        ));
    }
    let xs: Vec<Vec<f64>> = docs.iter().map(|d| featurize(&d.text, &spec.features)).collect();
    let parameters = match spec.kind {
        ModelKind::Logreg => Parameters::Logreg(logreg::fit(&xs, &ys, &spec.logreg)),
        ModelKind::GaussianNb => Parameters::GaussianNb(naive_bayes::fit(&xs, &ys)),
        ModelKind::Mlp => {
            let mut rng = rng_for(seed, "mlp");
            Parameters::Mlp(mlp::fit(&xs, &ys, &spec.mlp, &mut rng))
        }
    };
    Ok(TrainedModel {
        feature_config: spec.features,
        seed,
        parameters,
    })
}

/// Fraction of labeled documents the classifier gets right.
pub fn evaluate(model: &dyn Classifier, docs: &[Document]) -> Result<f64> {
    if docs.is_empty() {
        return Err(Error::Corpus("cannot evaluate on an empty corpus".into()));
    }
    let mut correct = 0usize;
    for d in docs {
        let y = d
            .label
            .ok_or_else(|| Error::Corpus(format!("document `{}` has no label", d.id)))?;
        correct += usize::from(model.predict(&d.text) == y);
    }
    Ok(correct as f64 / docs.len() as f64)
}
