use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        Some(Summary {
            mean: mean(values)?,
            median: median(values)?,
        })
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Middle value, or the average of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Some(sorted[mid])
    } else {
        Some((sorted[mid - 1] + sorted[mid]) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordField {
    Ce,
    Iou,
    Cpd,
    Tde,
    Eod,
    GtToEgo,
    YawError,
}

impl RecordField {
    pub fn value(self, r: &MetricRecord) -> Option<f64> {
        match self {
            RecordField::Ce => Some(r.ce),
            RecordField::Iou => Some(r.iou),
            RecordField::Cpd => Some(r.cpd),
            RecordField::Tde => Some(r.tde),
            RecordField::Eod => r.eod,
            RecordField::GtToEgo => Some(r.gt_to_ego),
            RecordField::YawError => Some(r.yaw_error),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordField::Ce => "ce",
            RecordField::Iou => "iou",
            RecordField::Cpd => "cpd",
            RecordField::Tde => "tde",
            RecordField::Eod => "eod",
            RecordField::GtToEgo => "gt_to_ego",
            RecordField::YawError => "yaw_error",
        }
    }
}

impl fmt::Display for RecordField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecordField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ce" => RecordField::Ce,
            "iou" => RecordField::Iou,
            "cpd" => RecordField::Cpd,
            "tde" => RecordField::Tde,
            "eod" => RecordField::Eod,
            "gt_to_ego" | "distance" => RecordField::GtToEgo,
            "yaw_error" | "yaw" => RecordField::YawError,
            other => return Err(Error::Config(format!("unknown record field `{other}`"))),
        })
    }
}

/// Sample Pearson correlation between two record fields. Records missing
/// either value are skipped.
pub fn correlate(records: &[MetricRecord], x: RecordField, y: RecordField) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| Some((x.value(r)?, y.value(r)?)))
        .unzip();
    pearson(&xs, &ys)
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation("samples differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 samples, got {}",
            xs.len()
        )));
    }
    let mx = mean(xs).unwrap_or_default();
    let my = mean(ys).unwrap_or_default();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
