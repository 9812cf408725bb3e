//! Versioned JSON model files.
//!
//! A file is a single object: `version`, `model_type`, the feature `schema`
//! (including categorical vocabularies), and the model's own fields. Floats
//! are written in shortest round-trip form, so coefficients reload bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{GeometricModel, LogisticModel};
use crate::beta_math::BetaParams;
use crate::data::FeatureSchema;
use crate::gbrt::{GbrtBetaLogistic, GbrtLogistic};
use crate::linear::LinearBetaLogistic;
use crate::{Error, Result, RiskModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type")]
pub enum SavedModel {
    #[serde(rename = "betalogistic-linear")]
    BetaLogisticLinear(LinearBetaLogistic),
    #[serde(rename = "betalogistic-gbrt")]
    BetaLogisticGbrt(GbrtBetaLogistic),
    #[serde(rename = "logistic")]
    Logistic(LogisticModel),
    #[serde(rename = "geometric")]
    Geometric(GeometricModel),
    #[serde(rename = "logistic-gbrt")]
    LogisticGbrt(GbrtLogistic),
}

impl SavedModel {
    pub fn model_type(&self) -> &'static str {
        match self {
            SavedModel::BetaLogisticLinear(_) => "betalogistic-linear",
            SavedModel::BetaLogisticGbrt(_) => "betalogistic-gbrt",
            SavedModel::Logistic(_) => "logistic",
            SavedModel::Geometric(_) => "geometric",
            SavedModel::LogisticGbrt(_) => "logistic-gbrt",
        }
    }

    fn inner(&self) -> &dyn RiskModel {
        match self {
            SavedModel::BetaLogisticLinear(m) => m,
            SavedModel::BetaLogisticGbrt(m) => m,
            SavedModel::Logistic(m) => m,
            SavedModel::Geometric(m) => m,
            SavedModel::LogisticGbrt(m) => m,
        }
    }

    /// Beta prior at `x`; `None` for models that do not predict one.
    pub fn beta_params(&self, x: &[f64]) -> Option<Result<BetaParams>> {
        match self {
            SavedModel::BetaLogisticLinear(m) => Some(m.predict_params(x)),
            SavedModel::BetaLogisticGbrt(m) => Some(m.predict_params(x)),
            _ => None,
        }
    }

    /// `P(T > t)` for `t = 1..=horizon`; `None` for single-horizon classifiers.
    pub fn survival_curve(&self, x: &[f64], horizon: u32) -> Option<Result<Vec<f64>>> {
        match self {
            SavedModel::BetaLogisticLinear(m) => Some(m.predict_survival_curve(x, horizon)),
            SavedModel::BetaLogisticGbrt(m) => Some(m.predict_survival_curve(x, horizon)),
            SavedModel::Geometric(m) => Some(m.predict_survival_curve(x, horizon)),
            _ => None,
        }
    }
}

impl RiskModel for SavedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn risk_score(&self, x: &[f64], horizon: u32) -> Result<f64> {
        self.inner().risk_score(x, horizon)
    }

    fn event_variance(&self, x: &[f64]) -> Result<f64> {
        self.inner().event_variance(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub schema: FeatureSchema,
    #[serde(flatten)]
    pub model: SavedModel,
}

impl ModelFile {
    pub fn new(model: SavedModel, schema: FeatureSchema) -> Result<Self> {
        if schema.n_features() != model.n_features() {
            return Err(Error::Input(format!(
                "schema encodes {} features but the model expects {}",
                schema.n_features(),
                model.n_features()
            )));
        }
        Ok(Self {
            version: FORMAT_VERSION,
            schema,
            model,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::check(serde_json::from_str(s)?)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        Self::check(serde_json::from_reader(reader)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    fn check(file: Self) -> Result<Self> {
        if file.version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported model file version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        if file.schema.n_features() != file.model.n_features() {
            return Err(Error::Input("model file schema and coefficients disagree".into()));
        }
        Ok(file)
    }
}
