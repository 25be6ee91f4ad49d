use serde::{Deserialize, Serialize};

use crate::assignment::Metric;

/// Per-class gates and analysis windows.
///
/// CE gates are 1.0 / 2.5 / 3.5 m for pedestrian / car / truck and CPD uses
/// 2 m for every class. IoU uses 0.7 for vehicles and 0.5 for pedestrians.
/// `correlation_window` bounds CE for correlation analysis and
/// `scatter_window` bounds CE for scatter and quadrant exports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDefaults {
    pub ce_gate: f64,
    pub iou_gate: f64,
    pub cpd_gate: f64,
    pub correlation_window: f64,
    pub scatter_window: f64,
}

impl ClassDefaults {
    pub const PEDESTRIAN: ClassDefaults = ClassDefaults {
        ce_gate: 1.0,
        iou_gate: 0.5,
        cpd_gate: 2.0,
        correlation_window: 0.61,
        scatter_window: 5.0,
    };

    pub const CAR: ClassDefaults = ClassDefaults {
        ce_gate: 2.5,
        iou_gate: 0.7,
        cpd_gate: 2.0,
        correlation_window: 2.01,
        scatter_window: 10.0,
    };

    pub const TRUCK: ClassDefaults = ClassDefaults {
        ce_gate: 3.5,
        iou_gate: 0.7,
        cpd_gate: 2.0,
        correlation_window: 2.16,
        scatter_window: 15.0,
    };

    pub fn for_class(label: &str) -> Option<ClassDefaults> {
        match label.to_ascii_lowercase().as_str() {
            "pedestrian" => Some(Self::PEDESTRIAN),
            "car" => Some(Self::CAR),
            "truck" => Some(Self::TRUCK),
            _ => None,
        }
    }

    pub fn gate(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ce => self.ce_gate,
            Metric::Iou => self.iou_gate,
            Metric::Cpd => self.cpd_gate,
        }
    }
}
