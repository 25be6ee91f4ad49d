use serde::{Deserialize, Serialize};

use crate::assignment::{match_frame, Metric};
use crate::contour::ContourConfig;
use crate::error::{Error, Result};
use crate::io::Scene;
use crate::metrics::yaw_error_deg;

/// Selection of scenes with hard orientation cases close to the ego.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneFilter {
    /// Degrees; some matched pair must exceed it.
    pub min_yaw_error: f64,
    /// Meters; some GT must come closer than this.
    pub max_proximity: f64,
    pub min_frames: usize,
}

impl Default for SceneFilter {
    fn default() -> Self {
        SceneFilter {
            min_yaw_error: 10.0,
            max_proximity: 30.0,
            min_frames: 10,
        }
    }
}

impl SceneFilter {
    pub fn validate(&self) -> Result<()> {
        for v in [self.min_yaw_error, self.max_proximity] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidThreshold(v));
            }
        }
        if self.min_frames == 0 {
            return Err(Error::Config("min_frames must be positive".into()));
        }
        Ok(())
    }

    /// Checks the three criteria for one scene. Matching for the yaw
    /// criterion runs the CE pipeline at `ce_gate`.
    pub fn accepts(
        &self,
        scene: &Scene,
        class_label: &str,
        config: &ContourConfig,
        ce_gate: f64,
    ) -> Result<bool> {
        if scene.frames.len() < self.min_frames {
            return Ok(false);
        }
        let mut near = false;
        let mut yawed = false;
        for frame in &scene.frames {
            let frame = frame.for_class(class_label);
            if !near {
                let ego = config.project_ego(&frame.ego)?;
                for g in &frame.gt {
                    let d = config.project_box(&g.bbox)?.center().distance(&ego.position)?;
                    if d < self.max_proximity {
                        near = true;
                        break;
                    }
                }
            }
            if !yawed {
                let (_, result) = match_frame(&frame, Metric::Ce, config, ce_gate)?;
                yawed = result.matched.iter().any(|m| {
                    yaw_error_deg(frame.gt[m.gt].bbox.yaw(), frame.pred[m.pred].bbox.yaw())
                        > self.min_yaw_error
                });
            }
            if near && yawed {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Keeps the scenes passing `filter`, in input order.
pub fn filter_scenes(
    scenes: &[Scene],
    filter: &SceneFilter,
    class_label: &str,
    config: &ContourConfig,
    ce_gate: f64,
) -> Result<Vec<Scene>> {
    filter.validate()?;
    Metric::Ce.max_cost(ce_gate)?;
    let mut kept = Vec::new();
    for scene in scenes {
        if filter.accepts(scene, class_label, config, ce_gate)? {
            kept.push(scene.clone());
        }
    }
    Ok(kept)
}
