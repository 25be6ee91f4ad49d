//! Scene and dataset evaluation and the report document.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{match_frame, Metric};
use crate::contour::{ContourConfig, Perspective};
use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::io::Scene;
use crate::metrics::bins::{
    bin_by_distance, bin_by_yaw, bin_outcomes_by_distance, BinEdges, DistanceStatsBin,
    FunctionalBin,
};
use crate::metrics::defaults::ClassDefaults;
use crate::metrics::quadrant::{quadrant_classify, QuadrantCounts};
use crate::metrics::stats::{correlate, RecordField};
use crate::metrics::{accumulate_frame, Counts, IdHistory, MetricRecord, Outcome};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub class_label: String,
    pub metric: Metric,
    /// Gate in the metric's natural unit (meters, or an IoU level).
    pub threshold: f64,
    pub contour: ContourConfig,
    pub distance_edges: BinEdges,
    pub yaw_edges: BinEdges,
    /// Yaw bins only count outcomes closer than this to the ego.
    pub yaw_max_distance: Option<f64>,
    /// Gates for the CE/IoU agreement table.
    pub ce_gate: f64,
    pub iou_gate: f64,
    /// Only matches with CE within this window enter the correlation matrix.
    pub correlation_window: f64,
}

impl EvalSettings {
    /// Settings from the built-in class defaults. Fails for classes without
    /// defaults; use [`EvalSettings::custom`] for those.
    pub fn for_class(class_label: &str, metric: Metric, contour: ContourConfig) -> Result<Self> {
        let d = ClassDefaults::for_class(class_label).ok_or_else(|| {
            Error::Config(format!(
                "no default thresholds for class `{class_label}`; supply them explicitly"
            ))
        })?;
        Ok(EvalSettings::custom(class_label, metric, d.gate(metric), contour, d))
    }

    pub fn custom(
        class_label: &str,
        metric: Metric,
        threshold: f64,
        contour: ContourConfig,
        defaults: ClassDefaults,
    ) -> Self {
        EvalSettings {
            class_label: class_label.to_string(),
            metric,
            threshold,
            contour,
            distance_edges: BinEdges::distance(),
            yaw_edges: BinEdges::yaw(),
            yaw_max_distance: Some(30.0),
            ce_gate: defaults.ce_gate,
            iou_gate: defaults.iou_gate,
            correlation_window: defaults.correlation_window,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.metric.max_cost(self.threshold)?;
        Metric::Ce.max_cost(self.ce_gate)?;
        Metric::Iou.max_cost(self.iou_gate)?;
        Metric::Ce.max_cost(self.correlation_window)?;
        if let Some(d) = self.yaw_max_distance {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidThreshold(d));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneEvaluation {
    pub scene_id: String,
    pub frames: usize,
    pub gt_count: u64,
    pub pred_count: u64,
    pub counts: Counts,
    pub records: Vec<MetricRecord>,
    pub rejected: Vec<MetricRecord>,
    pub outcomes: Vec<Outcome>,
}

/// Runs match → gate → accumulate over every frame of one scene, keeping
/// only boxes of the configured class.
pub fn evaluate_scene(scene: &Scene, settings: &EvalSettings) -> Result<SceneEvaluation> {
    let mut eval = SceneEvaluation {
        scene_id: scene.id.clone(),
        frames: scene.frames.len(),
        gt_count: 0,
        pred_count: 0,
        counts: Counts::default(),
        records: Vec::new(),
        rejected: Vec::new(),
        outcomes: Vec::new(),
    };
    let mut history = IdHistory::new();
    for frame in &scene.frames {
        let frame = frame.for_class(&settings.class_label);
        let (_, result) = match_frame(&frame, settings.metric, &settings.contour, settings.threshold)?;
        let out = accumulate_frame(&result, &frame, &mut history, &settings.contour)?;
        let gt = frame.gt.len() as u64;
        let pred = frame.pred.len() as u64;
        if out.counts.ftp + out.counts.ffn != gt || out.counts.ftp + out.counts.ffp != pred {
            return Err(Error::InvalidCostMatrix(format!(
                "count conservation violated in scene `{}` frame {}",
                scene.id, frame.frame_index
            )));
        }
        eval.gt_count += gt;
        eval.pred_count += pred;
        eval.counts += out.counts;
        eval.records.extend(out.records);
        eval.rejected.extend(out.rejected);
        eval.outcomes.extend(out.outcomes);
    }
    Ok(eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub ftp: u64,
    pub ffp: u64,
    pub ffn: u64,
    pub fid: u64,
    pub failures: u64,
    pub ftpr: Option<f64>,
}

impl From<Counts> for CountSummary {
    fn from(c: Counts) -> Self {
        CountSummary {
            ftp: c.ftp,
            ffp: c.ffp,
            ffn: c.ffn,
            fid: c.fid,
            failures: c.failures(),
            ftpr: c.ftpr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub frames: usize,
    pub gt_count: u64,
    pub pred_count: u64,
    pub counts: CountSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub window: f64,
    pub count: usize,
    pub fields: Vec<RecordField>,
    /// Pearson coefficients, `None` where undefined.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    /// Pairwise correlation of `fields` over records with CE ≤ `window`.
    pub fn compute(records: &[MetricRecord], fields: &[RecordField], window: f64) -> Self {
        let within: Vec<MetricRecord> = records.iter().filter(|r| r.ce <= window).cloned().collect();
        let values = fields
            .iter()
            .map(|&x| fields.iter().map(|&y| correlate(&within, x, y).ok()).collect())
            .collect();
        CorrelationMatrix {
            window,
            count: within.len(),
            fields: fields.to_vec(),
            values,
        }
    }

    pub fn get(&self, x: RecordField, y: RecordField) -> Option<f64> {
        let i = self.fields.iter().position(|&f| f == x)?;
        let j = self.fields.iter().position(|&f| f == y)?;
        self.values[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantTable {
    pub ce_gate: f64,
    pub iou_gate: f64,
    pub counts: QuadrantCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub class_label: String,
    pub metric: Metric,
    pub threshold: f64,
    pub dim: Dim,
    pub perspective: Perspective,
    pub scene_count: usize,
    pub frames: usize,
    pub gt_count: u64,
    pub pred_count: u64,
    pub totals: CountSummary,
    pub scenes: Vec<SceneSummary>,
    pub distance_bins: Vec<FunctionalBin>,
    pub distance_stats: Vec<DistanceStatsBin>,
    /// Same diagnostics for assigned pairs that failed the gate.
    pub rejected_stats: Vec<DistanceStatsBin>,
    pub yaw_bins: Vec<FunctionalBin>,
    pub quadrants: QuadrantTable,
    pub correlation: CorrelationMatrix,
}

/// Full result of one evaluation: the report plus the per-match records and
/// outcomes it was built from, in scene-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub records: Vec<MetricRecord>,
    pub rejected: Vec<MetricRecord>,
    pub outcomes: Vec<Outcome>,
}

pub const CORRELATION_FIELDS: [RecordField; 3] = [RecordField::Ce, RecordField::Iou, RecordField::Cpd];

/// Evaluates scenes in parallel and merges them sorted by scene id.
pub fn evaluate(scenes: &[Scene], settings: &EvalSettings) -> Result<Evaluation> {
    settings.validate()?;
    let mut per_scene: Vec<SceneEvaluation> = scenes
        .par_iter()
        .map(|s| evaluate_scene(s, settings))
        .collect::<Result<_>>()?;
    per_scene.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));

    let mut totals = Counts::default();
    let mut frames = 0;
    let mut gt_count = 0;
    let mut pred_count = 0;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut outcomes = Vec::new();
    let mut summaries = Vec::with_capacity(per_scene.len());
    for s in per_scene {
        totals += s.counts;
        frames += s.frames;
        gt_count += s.gt_count;
        pred_count += s.pred_count;
        summaries.push(SceneSummary {
            scene_id: s.scene_id,
            frames: s.frames,
            gt_count: s.gt_count,
            pred_count: s.pred_count,
            counts: s.counts.into(),
        });
        records.extend(s.records);
        rejected.extend(s.rejected);
        outcomes.extend(s.outcomes);
    }

    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        class_label: settings.class_label.clone(),
        metric: settings.metric,
        threshold: settings.threshold,
        dim: settings.contour.dim,
        perspective: settings.contour.perspective,
        scene_count: summaries.len(),
        frames,
        gt_count,
        pred_count,
        totals: totals.into(),
        scenes: summaries,
        distance_bins: bin_outcomes_by_distance(&outcomes, &settings.distance_edges),
        distance_stats: bin_by_distance(&records, &settings.distance_edges),
        rejected_stats: bin_by_distance(&rejected, &settings.distance_edges),
        yaw_bins: bin_by_yaw(&outcomes, &settings.yaw_edges, settings.yaw_max_distance),
        quadrants: QuadrantTable {
            ce_gate: settings.ce_gate,
            iou_gate: settings.iou_gate,
            counts: quadrant_classify(&records, settings.ce_gate, settings.iou_gate),
        },
        correlation: CorrelationMatrix::compute(&records, &CORRELATION_FIELDS, settings.correlation_window),
    };
    Ok(Evaluation {
        report,
        records,
        rejected,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EgoPose, OrientedBox, Point};
    use crate::io::{Frame, TrackedBox};

    fn car(id: &str, c: [f64; 3]) -> TrackedBox {
        TrackedBox::new(id, "car", OrientedBox::new_3d(c, [4.5, 1.9, 1.7], 0.0).unwrap())
    }

    fn scene(id: &str, n: u64, extra_pred: bool) -> Scene {
        let frames = (0..n)
            .map(|i| {
                let x = 5.0 + i as f64;
                let mut pred = vec![car("p1", [x, 0.0, 0.8])];
                if extra_pred {
                    pred.push(car("p9", [x, 30.0, 0.8]));
                }
                let mut gt = vec![car("g1", [x, 0.0, 0.8])];
                gt.push(TrackedBox::new(
                    "ped",
                    "pedestrian",
                    OrientedBox::new_3d([x, 4.0, 0.9], [0.6, 0.6, 1.8], 0.0).unwrap(),
                ));
                Frame {
                    scene_id: id.into(),
                    frame_index: i,
                    timestamp: i as f64,
                    ego: EgoPose::at(Point::xyz(0.0, 0.0, 0.0)),
                    gt,
                    pred,
                }
            })
            .collect();
        Scene { id: id.into(), frames }
    }

    #[test]
    fn perfect_and_extra_prediction_scenes() {
        let scenes = vec![scene("b", 4, true), scene("a", 3, false)];
        for metric in Metric::ALL {
            let settings = EvalSettings::for_class("car", metric, ContourConfig::ego_3d()).unwrap();
            let eval = evaluate(&scenes, &settings).unwrap();
            let r = &eval.report;
            assert_eq!(r.scenes[0].scene_id, "a");
            assert_eq!(r.scenes[0].counts.ftpr, Some(100.0));
            assert_eq!(r.scenes[1].counts.ffp, 4);
            assert_eq!(r.totals.ftp, 7);
            assert_eq!(r.totals.fid, 0);
            // pedestrians are filtered out for the car evaluation
            assert_eq!(r.gt_count, 7);
            assert_eq!(r.pred_count, 11);
            assert_eq!(eval.records.len(), 7);
        }
    }

    #[test]
    fn empty_input_gives_zero_report() {
        let settings = EvalSettings::for_class("car", Metric::Ce, ContourConfig::ego_3d()).unwrap();
        let r = evaluate(&[], &settings).unwrap().report;
        assert_eq!(r.totals.ftp + r.totals.failures, 0);
        assert_eq!(r.totals.ftpr, None);
        assert_eq!(r.distance_bins.len(), 4);
        assert!(r.correlation.values.iter().flatten().all(Option::is_none));
    }

    #[test]
    fn unknown_class_needs_explicit_settings() {
        assert!(EvalSettings::for_class("bicycle", Metric::Ce, ContourConfig::ego_3d()).is_err());
        let s = EvalSettings::custom("bicycle", Metric::Ce, 1.5, ContourConfig::ego_3d(), ClassDefaults::CAR);
        assert!(s.validate().is_ok());
        assert!(s.with_threshold(-1.0).validate().is_err());
    }
}
