//! Serialized models of any kind and labelled point files.

use std::path::Path;

use kda_core::rff::RffModel;
use kda_core::sample::{ClassLabel, SampleKdaModel, ThresholdRule};
use kda_core::{Discriminant, DiscriminantModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum AnyModel {
    Population(DiscriminantModel),
    Sample(SampleKdaModel),
    Rff(RffModel),
}

impl Discriminant for AnyModel {
    fn input_dim(&self) -> usize {
        match self {
            AnyModel::Population(m) => m.input_dim(),
            AnyModel::Sample(m) => m.input_dim(),
            AnyModel::Rff(m) => m.input_dim(),
        }
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            AnyModel::Population(m) => m.score_unchecked(x),
            AnyModel::Sample(m) => m.score_unchecked(x),
            AnyModel::Rff(m) => m.score_unchecked(x),
        }
    }
}

impl AnyModel {
    pub fn lambda(&self) -> f64 {
        match self {
            AnyModel::Population(m) => m.lambda,
            AnyModel::Sample(m) => m.lambda,
            AnyModel::Rff(m) => m.lambda,
        }
    }
}

/// On-disk model: the model, an optional threshold and the producing config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default)]
    pub config: Value,
    pub model: AnyModel,
    #[serde(default)]
    pub threshold: Option<ThresholdRule>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::read(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn threshold(&self) -> Option<ThresholdRule> {
        match &self.model {
            AnyModel::Sample(m) => self.threshold.or(m.threshold),
            _ => self.threshold,
        }
    }
}

/// Points read from CSV; a column named `label` (values 1/2) is optional.
pub struct PointFile {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<ClassLabel>>,
}

pub fn read_points(path: &Path) -> Result<PointFile, CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(std::fs::File::open(path).map_err(CliError::read(path))?);
    let headers = reader.headers()?.clone();
    let label_col = headers.iter().position(|h| h == "label");
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        let bad = |what: &str| CliError::Core(kda_core::KdaError::Parse { line, message: what.to_string() });
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            if Some(c) == label_col {
                let code: u8 = field.parse().map_err(|_| bad("label must be 1 or 2"))?;
                labels.push(ClassLabel::try_from(code)?);
            } else {
                row.push(field.parse::<f64>().map_err(|_| bad(&format!("'{field}' is not a number")))?);
            }
        }
        points.push(row);
    }
    Ok(PointFile { points, labels: label_col.map(|_| labels) })
}
