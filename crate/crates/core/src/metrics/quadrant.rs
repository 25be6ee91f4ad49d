use serde::{Deserialize, Serialize};

use crate::metrics::MetricRecord;

/// Agreement class of a pair under a CE gate and an IoU gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    /// CE ≤ τ_CE and IoU > τ_IoU.
    Reliable,
    /// CE ≤ τ_CE and IoU ≤ τ_IoU.
    ContourBased,
    /// CE > τ_CE and IoU ≤ τ_IoU.
    Poor,
    /// CE > τ_CE and IoU > τ_IoU.
    IouBased,
}

impl Quadrant {
    pub fn classify(ce: f64, iou: f64, ce_gate: f64, iou_gate: f64) -> Quadrant {
        match (ce <= ce_gate, iou > iou_gate) {
            (true, true) => Quadrant::Reliable,
            (true, false) => Quadrant::ContourBased,
            (false, false) => Quadrant::Poor,
            (false, true) => Quadrant::IouBased,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantCounts {
    pub total: u64,
    pub reliable: u64,
    pub contour_based: u64,
    pub poor: u64,
    pub iou_based: u64,
}

impl QuadrantCounts {
    pub fn get(&self, q: Quadrant) -> u64 {
        match q {
            Quadrant::Reliable => self.reliable,
            Quadrant::ContourBased => self.contour_based,
            Quadrant::Poor => self.poor,
            Quadrant::IouBased => self.iou_based,
        }
    }

    /// Share of `q` in percent, `None` for an empty table.
    pub fn percent(&self, q: Quadrant) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.get(q) as f64 / self.total as f64)
    }
}

pub fn quadrant_classify(records: &[MetricRecord], ce_gate: f64, iou_gate: f64) -> QuadrantCounts {
    let mut counts = QuadrantCounts::default();
    for r in records {
        counts.total += 1;
        match Quadrant::classify(r.ce, r.iou, ce_gate, iou_gate) {
            Quadrant::Reliable => counts.reliable += 1,
            Quadrant::ContourBased => counts.contour_based += 1,
            Quadrant::Poor => counts.poor += 1,
            Quadrant::IouBased => counts.iou_based += 1,
        }
    }
    counts
}
