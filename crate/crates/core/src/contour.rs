//! Contour error between a ground-truth and a predicted box.
//!
//! For each box a subset of corners is selected (the corners nearest the
//! ego position, or every corner in the object-centric variant). Each
//! selected corner of one box is measured against the solid region of the
//! other box, and the error is the largest of those distances in either
//! direction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_to_box_distance, Dim, EgoPose, OrientedBox, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perspective {
    EgoCentric,
    ObjectCentric,
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Perspective::EgoCentric => "ego",
            Perspective::ObjectCentric => "object",
        })
    }
}

impl FromStr for Perspective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ego" | "ego-centric" => Ok(Perspective::EgoCentric),
            "object" | "object-centric" => Ok(Perspective::ObjectCentric),
            other => Err(Error::Config(format!("unknown perspective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourConfig {
    pub dim: Dim,
    pub perspective: Perspective,
}

impl ContourConfig {
    pub fn new(dim: Dim, perspective: Perspective) -> Self {
        ContourConfig { dim, perspective }
    }

    pub fn ego_3d() -> Self {
        ContourConfig::new(Dim::Three, Perspective::EgoCentric)
    }

    pub fn ego_2d() -> Self {
        ContourConfig::new(Dim::Two, Perspective::EgoCentric)
    }

    /// 3 (2D) or 6 (3D) when ego-centric, every corner when object-centric.
    pub fn corner_count(&self) -> usize {
        match (self.perspective, self.dim) {
            (Perspective::EgoCentric, Dim::Two) => 3,
            (Perspective::EgoCentric, Dim::Three) => 6,
            (Perspective::ObjectCentric, d) => d.corner_count(),
        }
    }

    /// Brings a box into this configuration's dimension. A 3D box evaluated
    /// in 2D uses its BEV footprint; a 2D box cannot be lifted.
    pub fn project_box(&self, b: &OrientedBox) -> Result<OrientedBox> {
        match (b.dim(), self.dim) {
            (d, c) if d == c => Ok(*b),
            (Dim::Three, Dim::Two) => Ok(b.to_bev()),
            (d, c) => Err(Error::DimensionMismatch {
                left: d.count(),
                right: c.count(),
            }),
        }
    }

    pub fn project_ego(&self, ego: &EgoPose) -> Result<EgoPose> {
        match (ego.dim(), self.dim) {
            (d, c) if d == c => Ok(*ego),
            (Dim::Three, Dim::Two) => Ok(ego.to_bev()),
            (d, c) => Err(Error::DimensionMismatch {
                left: d.count(),
                right: c.count(),
            }),
        }
    }
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig::ego_3d()
    }
}

/// Corners used for the contour error. Ego-centric selection sorts corners
/// by distance to the ego position; equal distances keep corner order, so
/// the lower corner index wins.
pub fn select_corners(
    b: &OrientedBox,
    ego: Option<&EgoPose>,
    config: &ContourConfig,
) -> Result<Vec<Point>> {
    let b = config.project_box(b)?;
    let corners = b.corners();
    match config.perspective {
        Perspective::ObjectCentric => Ok(corners),
        Perspective::EgoCentric => {
            let ego = config.project_ego(ego.ok_or(Error::MissingEgo)?)?;
            let mut ranked: Vec<(f64, Point)> = corners
                .into_iter()
                .map(|c| (c.distance_unchecked(&ego.position), c))
                .collect();
            // stable: ties keep the fixed corner order
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok(ranked
                .into_iter()
                .take(config.corner_count())
                .map(|(_, c)| c)
                .collect())
        }
    }
}

fn directed(corners: &[Point], target: &OrientedBox) -> Result<f64> {
    corners.iter().try_fold(0.0_f64, |acc, c| {
        Ok(acc.max(point_to_box_distance(c, target)?))
    })
}

/// Contour error in meters.
pub fn contour_error(
    gt: &OrientedBox,
    pred: &OrientedBox,
    ego: Option<&EgoPose>,
    config: &ContourConfig,
) -> Result<f64> {
    let gt_proj = config.project_box(gt)?;
    let pred_proj = config.project_box(pred)?;
    let gt_corners = select_corners(&gt_proj, ego, config)?;
    let pred_corners = select_corners(&pred_proj, ego, config)?;
    let pred_to_gt = directed(&pred_corners, &gt_proj)?;
    let gt_to_pred = directed(&gt_corners, &pred_proj)?;
    Ok(pred_to_gt.max(gt_to_pred))
}

/// Match rule: contour error at most `tau` (inclusive).
pub fn is_match(
    gt: &OrientedBox,
    pred: &OrientedBox,
    ego: Option<&EgoPose>,
    config: &ContourConfig,
    tau: f64,
) -> Result<bool> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidThreshold(tau));
    }
    Ok(contour_error(gt, pred, ego, config)? <= tau)
}
