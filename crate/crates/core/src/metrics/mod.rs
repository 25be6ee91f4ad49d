//! Functional error accounting and ego-centric diagnostics.

mod bins;
mod defaults;
mod quadrant;
mod report;
mod stats;

pub use bins::{
    bin_by_distance, bin_by_yaw, bin_outcomes_by_distance, BinEdges, DistanceStatsBin,
    FunctionalBin,
};
pub use defaults::ClassDefaults;
pub use quadrant::{quadrant_classify, Quadrant, QuadrantCounts};
pub use report::{
    evaluate, evaluate_scene, CorrelationMatrix, CountSummary, EvalReport, EvalSettings,
    Evaluation, QuadrantTable, SceneEvaluation, SceneSummary, CORRELATION_FIELDS,
    REPORT_SCHEMA_VERSION,
};
pub use stats::{correlate, mean, median, RecordField, Summary};

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::assignment::{MatchResult, Metric};
use crate::contour::{contour_error, ContourConfig};
use crate::error::{Error, Result};
use crate::geometry::{cpd, iou, normalize_angle, EgoPose, OrientedBox};
use crate::io::Frame;

/// Wrapped absolute heading difference in degrees, in [0, 180].
pub fn yaw_error_deg(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs().to_degrees()
}

/// Translational distance error: `| ‖gt − ego‖ − ‖pred − ego‖ |`.
pub fn tde(gt: &OrientedBox, pred: &OrientedBox, ego: &EgoPose) -> Result<f64> {
    let d_gt = gt.center().distance(&ego.position)?;
    let d_pred = pred.center().distance(&ego.position)?;
    Ok(tde_from_distances(d_gt, d_pred))
}

pub fn tde_from_distances(gt_to_ego: f64, pred_to_ego: f64) -> f64 {
    (gt_to_ego - pred_to_ego).abs()
}

/// Ego-centric orientation divergence in degrees per meter.
pub fn eod(gt: &OrientedBox, pred: &OrientedBox, ego: &EgoPose) -> Result<f64> {
    let d_gt = gt.center().distance(&ego.position)?;
    // dimension check for the prediction side too
    pred.center().distance(&ego.position)?;
    eod_from_parts(yaw_error_deg(gt.yaw(), pred.yaw()), d_gt)
}

pub fn eod_from_parts(yaw_error_deg: f64, gt_to_ego: f64) -> Result<f64> {
    if gt_to_ego <= 0.0 {
        return Err(Error::ZeroEgoDistance);
    }
    Ok(yaw_error_deg / gt_to_ego)
}

/// Every metric for one matched pair. Distances in meters, `yaw_error` in
/// degrees, `eod` in degrees per meter (absent when the GT sits on the ego).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub scene_id: String,
    pub frame_index: u64,
    pub gt_id: String,
    pub pred_id: String,
    pub class_label: String,
    pub ce: f64,
    pub iou: f64,
    pub cpd: f64,
    pub tde: f64,
    pub eod: Option<f64>,
    pub gt_to_ego: f64,
    pub yaw_error: f64,
}

impl MetricRecord {
    /// Computes every field for `(gt, pred)` of `frame` under `config`.
    pub fn compute(frame: &Frame, gt: usize, pred: usize, config: &ContourConfig) -> Result<Self> {
        let g = &frame.gt[gt];
        let p = &frame.pred[pred];
        let gb = config.project_box(&g.bbox)?;
        let pb = config.project_box(&p.bbox)?;
        let ego = config.project_ego(&frame.ego)?;
        let gt_to_ego = gb.center().distance(&ego.position)?;
        let yaw_error = yaw_error_deg(gb.yaw(), pb.yaw());
        Ok(MetricRecord {
            scene_id: frame.scene_id.clone(),
            frame_index: frame.frame_index,
            gt_id: g.id.clone(),
            pred_id: p.id.clone(),
            class_label: g.class_label.clone(),
            ce: contour_error(&gb, &pb, Some(&ego), config)?,
            iou: iou(&gb, &pb)?,
            cpd: cpd(&gb, &pb)?,
            tde: tde(&gb, &pb, &ego)?,
            eod: eod_from_parts(yaw_error, gt_to_ego).ok(),
            gt_to_ego,
            yaw_error,
        })
    }

    pub fn metric_value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ce => self.ce,
            Metric::Iou => self.iou,
            Metric::Cpd => self.cpd,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub ftp: u64,
    pub ffp: u64,
    pub ffn: u64,
    pub fid: u64,
}

impl Counts {
    /// Functional false positives plus false negatives. A gated-out pair
    /// contributes one of each.
    pub fn failures(&self) -> u64 {
        self.ffp + self.ffn
    }

    /// `100 · FTP / (FTP + failures)`, or `None` when nothing was counted.
    pub fn ftpr(&self) -> Option<f64> {
        ftpr(self.ftp, self.failures())
    }
}

pub fn ftpr(ftp: u64, failures: u64) -> Option<f64> {
    let denom = ftp + failures;
    (denom > 0).then(|| 100.0 * ftp as f64 / denom as f64)
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            ftp: self.ftp + rhs.ftp,
            ffp: self.ffp + rhs.ffp,
            ffn: self.ffn + rhs.ffn,
            fid: self.fid + rhs.fid,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

/// Most recent matched prediction id per ground-truth track id.
pub type IdHistory = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Ftp,
    Ffn,
    Ffp,
}

/// One functional outcome, positioned for binning. `distance` is the GT
/// distance to ego for FTP/FFN and the prediction's for FFP; `yaw_error` is
/// set whenever the object was assigned a counterpart, gated or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub distance: f64,
    pub yaw_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutcome {
    pub counts: Counts,
    pub records: Vec<MetricRecord>,
    /// Diagnostics for assigned pairs that failed the gate.
    pub rejected: Vec<MetricRecord>,
    pub outcomes: Vec<Outcome>,
}

/// Counts one frame's matches. An ID switch is tallied when a GT track is
/// matched to a prediction id other than the one it was last matched to;
/// frames where the track is unmatched do not reset its history.
pub fn accumulate_frame(
    result: &MatchResult,
    frame: &Frame,
    history: &mut IdHistory,
    config: &ContourConfig,
) -> Result<FrameOutcome> {
    let mut out = FrameOutcome {
        counts: Counts {
            ftp: result.matched.len() as u64,
            ffn: result.unmatched_gt.len() as u64,
            ffp: result.unmatched_pred.len() as u64,
            fid: 0,
        },
        ..Default::default()
    };
    debug_assert_eq!(out.counts.ftp + out.counts.ffn, frame.gt.len() as u64);
    debug_assert_eq!(out.counts.ftp + out.counts.ffp, frame.pred.len() as u64);

    let ego = config.project_ego(&frame.ego)?;
    let dist_to_ego = |b: &OrientedBox| -> Result<f64> {
        config.project_box(b)?.center().distance(&ego.position)
    };

    for m in &result.matched {
        let record = MetricRecord::compute(frame, m.gt, m.pred, config)?;
        let gt_id = &frame.gt[m.gt].id;
        let pred_id = &frame.pred[m.pred].id;
        if let Some(prev) = history.insert(gt_id.clone(), pred_id.clone()) {
            if &prev != pred_id {
                out.counts.fid += 1;
            }
        }
        out.outcomes.push(Outcome {
            kind: OutcomeKind::Ftp,
            distance: record.gt_to_ego,
            yaw_error: Some(record.yaw_error),
        });
        out.records.push(record);
    }

    let mut paired_yaw_gt = BTreeMap::new();
    let mut paired_yaw_pred = BTreeMap::new();
    for r in &result.rejected {
        let record = MetricRecord::compute(frame, r.gt, r.pred, config)?;
        paired_yaw_gt.insert(r.gt, record.yaw_error);
        paired_yaw_pred.insert(r.pred, record.yaw_error);
        out.rejected.push(record);
    }
    for &g in &result.unmatched_gt {
        out.outcomes.push(Outcome {
            kind: OutcomeKind::Ffn,
            distance: dist_to_ego(&frame.gt[g].bbox)?,
            yaw_error: paired_yaw_gt.get(&g).copied(),
        });
    }
    for &p in &result.unmatched_pred {
        out.outcomes.push(Outcome {
            kind: OutcomeKind::Ffp,
            distance: dist_to_ego(&frame.pred[p].bbox)?,
            yaw_error: paired_yaw_pred.get(&p).copied(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::match_frame;
    use crate::geometry::{Point, RigidMotion};
    use crate::io::TrackedBox;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn car(id: &str, c: [f64; 3], yaw: f64) -> TrackedBox {
        TrackedBox::new(id, "car", OrientedBox::new_3d(c, [4.5, 1.9, 1.7], yaw).unwrap())
    }

    fn frame(index: u64, gt: Vec<TrackedBox>, pred: Vec<TrackedBox>) -> Frame {
        Frame {
            scene_id: "s".into(),
            frame_index: index,
            timestamp: index as f64 * 0.5,
            ego: EgoPose::at(Point::xyz(0.0, 0.0, 0.0)),
            gt,
            pred,
        }
    }

    #[test]
    fn tde_examples() {
        let ego = EgoPose::at(Point::xyz(0.0, 0.0, 0.0));
        let g = OrientedBox::new_3d([50.0, 0.0, 0.0], [4.5, 1.9, 1.7], 0.0).unwrap();
        let p = OrientedBox::new_3d([48.0, 0.0, 0.0], [4.5, 1.9, 1.7], 0.0).unwrap();
        assert_eq!(tde(&g, &p, &ego).unwrap(), 2.0);
        assert_eq!(tde(&g, &g, &ego).unwrap(), 0.0);
        let ego2 = EgoPose::at(Point::xy(0.0, 0.0));
        let g2 = OrientedBox::new_2d([3.0, 4.0], [1.0, 1.0], 0.0).unwrap();
        let p2 = OrientedBox::new_2d([6.0, 8.0], [1.0, 1.0], 0.0).unwrap();
        assert_eq!(tde(&g2, &p2, &ego2).unwrap(), 5.0);
        assert!(tde(&g, &p2, &ego).is_err());
    }

    #[test]
    fn eod_examples() {
        assert_eq!(eod_from_parts(80.0, 50.0).unwrap(), 1.6);
        let ego = EgoPose::at(Point::xy(0.0, 0.0));
        let g = OrientedBox::new_2d([50.0, 0.0], [4.5, 1.9], 0.0).unwrap();
        let p = g.with_yaw(80f64.to_radians());
        assert!((eod(&g, &p, &ego).unwrap() - 1.6).abs() < 1e-12);
        assert_eq!(eod(&g, &g, &ego).unwrap(), 0.0);
        let a = g.with_yaw(179f64.to_radians());
        let b = g.with_yaw(-179f64.to_radians());
        assert!((yaw_error_deg(a.yaw(), b.yaw()) - 2.0).abs() < 1e-9);
        let on_ego = OrientedBox::new_2d([0.0, 0.0], [4.5, 1.9], 0.0).unwrap();
        assert!(matches!(eod(&on_ego, &p, &ego), Err(Error::ZeroEgoDistance)));
    }

    #[test]
    fn eod_halves_with_double_distance_and_ignores_wrap() {
        assert_eq!(eod_from_parts(30.0, 20.0).unwrap() / 2.0, eod_from_parts(30.0, 40.0).unwrap());
        let y = 0.3;
        assert!((yaw_error_deg(y + 2.0 * PI, 1.0) - yaw_error_deg(y, 1.0)).abs() < 1e-9);
        assert_eq!(yaw_error_deg(PI, -PI), 0.0);
    }

    #[test]
    fn ftpr_from_table_arithmetic() {
        let c = Counts { ftp: 3212, ffp: 30, ffn: 28, fid: 0 };
        assert_eq!(c.failures(), 58);
        assert!((c.ftpr().unwrap() - 98.22).abs() < 0.01);
        assert_eq!(Counts::default().ftpr(), None);
    }

    #[test]
    fn stable_ids_no_switches() {
        let cfg = ContourConfig::ego_3d();
        let mut hist = IdHistory::new();
        let gts = || vec![car("g1", [10.0, 0.0, 0.8], 0.0), car("g2", [20.0, 5.0, 0.8], 0.0), car("g3", [-8.0, 3.0, 0.8], 1.0)];
        let preds = || vec![car("p1", [10.1, 0.0, 0.8], 0.0), car("p2", [20.0, 5.2, 0.8], 0.0), car("p3", [-8.0, 3.0, 0.8], 1.1)];
        let mut total = Counts::default();
        for i in 0..2 {
            let f = frame(i, gts(), preds());
            let (_, r) = match_frame(&f, Metric::Ce, &cfg, 2.5).unwrap();
            let out = accumulate_frame(&r, &f, &mut hist, &cfg).unwrap();
            assert_eq!(out.counts.ftp, 3);
            assert_eq!(out.records.len(), 3);
            total += out.counts;
        }
        assert_eq!(total.fid, 0);
    }

    #[test]
    fn id_switch_counted() {
        let cfg = ContourConfig::ego_3d();
        let mut hist = IdHistory::new();
        let f0 = frame(0, vec![car("g1", [10.0, 0.0, 0.8], 0.0)], vec![car("p1", [10.0, 0.0, 0.8], 0.0)]);
        let f1 = frame(1, vec![car("g1", [11.0, 0.0, 0.8], 0.0)], vec![car("p2", [11.0, 0.0, 0.8], 0.0)]);
        let f2 = frame(2, vec![car("g1", [12.0, 0.0, 0.8], 0.0)], vec![]);
        let f3 = frame(3, vec![car("g1", [13.0, 0.0, 0.8], 0.0)], vec![car("p2", [13.0, 0.0, 0.8], 0.0)]);
        let fids: Vec<u64> = [f0, f1, f2, f3]
            .iter()
            .map(|f| {
                let (_, r) = match_frame(f, Metric::Ce, &cfg, 2.5).unwrap();
                accumulate_frame(&r, f, &mut hist, &cfg).unwrap().counts.fid
            })
            .collect();
        // switch p1 → p2, then a gap that does not reset the history
        assert_eq!(fids, vec![0, 1, 0, 0]);
    }

    #[test]
    fn gated_out_pair_counts() {
        // 2 GT, 1 prediction far from both: the single assigned pair is gated out.
        let cfg = ContourConfig::ego_3d();
        let f = frame(
            0,
            vec![car("g1", [10.0, 0.0, 0.8], 0.0), car("g2", [10.0, 10.0, 0.8], 0.0)],
            vec![car("p1", [10.0, 5.0, 0.8], PI / 2.0)],
        );
        let (_, r) = match_frame(&f, Metric::Ce, &cfg, 2.5).unwrap();
        assert_eq!(r.rejected.len(), 1);
        let out = accumulate_frame(&r, &f, &mut IdHistory::new(), &cfg).unwrap();
        assert_eq!(out.counts, Counts { ftp: 0, ffn: 2, ffp: 1, fid: 0 });
        assert!(out.records.is_empty());
        // the rejected pair carries its 90° yaw error on both sides
        let with_yaw: Vec<_> = out.outcomes.iter().filter(|o| o.yaw_error.is_some()).collect();
        assert_eq!(with_yaw.len(), 2);
        assert!(with_yaw.iter().all(|o| (o.yaw_error.unwrap() - 90.0).abs() < 1e-9));
    }

    #[test]
    fn record_fields_populated() {
        let cfg = ContourConfig::ego_3d();
        let f = frame(0, vec![car("g1", [30.0, 40.0, 0.0], 0.0)], vec![car("p1", [30.0, 41.0, 0.0], 0.5)]);
        let r = MetricRecord::compute(&f, 0, 0, &cfg).unwrap();
        assert_eq!(r.gt_to_ego, 50.0);
        assert!((r.yaw_error - 0.5f64.to_degrees()).abs() < 1e-12);
        assert_eq!(r.eod, Some(r.yaw_error / 50.0));
        assert_eq!(r.cpd, 1.0);
        assert!(r.iou > 0.0 && r.iou < 1.0);
        assert!(r.ce > 0.0);
        assert_eq!(r.metric_value(Metric::Cpd), 1.0);
    }

    proptest! {
        #[test]
        fn tde_invariant_under_rotation_about_ego(
            g in prop::array::uniform3(-40.0..40.0f64),
            p in prop::array::uniform3(-40.0..40.0f64),
            ego in prop::array::uniform3(-10.0..10.0f64),
            rot in -PI..PI,
        ) {
            let gb = OrientedBox::new_3d(g, [4.0, 2.0, 1.5], 0.0).unwrap();
            let pb = OrientedBox::new_3d(p, [4.0, 2.0, 1.5], 0.3).unwrap();
            let e = EgoPose::at(Point::xyz(ego[0], ego[1], ego[2]));
            // rotate about the ego: move ego to origin, rotate, move back
            let to_origin = RigidMotion::new(0.0, [-ego[0], -ego[1], -ego[2]]);
            let back = RigidMotion::new(rot, ego);
            let tf = |b: &OrientedBox| back.apply_box(&to_origin.apply_box(b));
            let before = tde(&gb, &pb, &e).unwrap();
            let after = tde(&tf(&gb), &tf(&pb), &e).unwrap();
            prop_assert!((before - after).abs() <= 1e-9);
        }
    }
}
