//! Line-delimited frame stream.
//!
//! One JSON object per line:
//!
//! ```text
//! {"scene_id":"scene-0001","frame_index":0,"timestamp":0.0,
//!  "ego":{"x":0.0,"y":0.0,"z":0.0,"yaw":0.0},
//!  "gt":[{"id":"g1","class":"car","center":[10.0,2.0,0.9],"size":[4.5,1.9,1.7],"yaw":0.1}],
//!  "pred":[{"id":7,"class":"car","center":[10.2,2.1,0.9],"size":[4.4,1.9,1.6],"yaw":0.12,"score":0.8}]}
//! ```
//!
//! `center` and `size` carry 2 or 3 entries (one dimension per file); `size`
//! is length, width\[, height\] in meters. Angles are radians, positions are
//! global-frame meters. Track ids may be strings or integers. Blank lines
//! are skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dim, EgoPose, OrientedBox, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedBox {
    pub id: String,
    pub class_label: String,
    pub bbox: OrientedBox,
    pub score: Option<f64>,
}

impl TrackedBox {
    pub fn new(id: impl Into<String>, class_label: impl Into<String>, bbox: OrientedBox) -> Self {
        TrackedBox {
            id: id.into(),
            class_label: class_label.into(),
            bbox,
            score: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub scene_id: String,
    pub frame_index: u64,
    pub timestamp: f64,
    pub ego: EgoPose,
    pub gt: Vec<TrackedBox>,
    pub pred: Vec<TrackedBox>,
}

impl Frame {
    /// Copy of the frame keeping only boxes of `class_label` on both sides.
    pub fn for_class(&self, class_label: &str) -> Frame {
        let keep = |v: &[TrackedBox]| {
            v.iter()
                .filter(|b| b.class_label == class_label)
                .cloned()
                .collect()
        };
        Frame {
            gt: keep(&self.gt),
            pred: keep(&self.pred),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RawId {
    Int(i64),
    Str(String),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Int(i) => i.to_string(),
            RawId::Str(s) => s,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEgo {
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<f64>,
    #[serde(default)]
    yaw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawBox {
    id: RawId,
    class: String,
    center: Vec<f64>,
    size: Vec<f64>,
    yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFrame {
    scene_id: String,
    frame_index: u64,
    timestamp: f64,
    ego: RawEgo,
    #[serde(default)]
    gt: Vec<RawBox>,
    #[serde(default)]
    pred: Vec<RawBox>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn convert_boxes(raw: Vec<RawBox>, side: &str, line: usize) -> Result<Vec<TrackedBox>> {
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|b| {
            let id = b.id.into_string();
            if !seen.insert(id.clone()) {
                return Err(parse_err(line, format!("duplicate {side} track id `{id}`")));
            }
            if b.center.len() != b.size.len() {
                return Err(parse_err(
                    line,
                    format!("{side} `{id}`: center has {} entries, size has {}", b.center.len(), b.size.len()),
                ));
            }
            let center = Point::from_slice(&b.center)
                .map_err(|e| parse_err(line, format!("{side} `{id}`: {e}")))?;
            let bbox = OrientedBox::new(center, &b.size, b.yaw)
                .map_err(|e| parse_err(line, format!("{side} `{id}`: {e}")))?;
            if let Some(s) = b.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(parse_err(line, format!("{side} `{id}`: score {s} outside [0, 1]")));
                }
            }
            Ok(TrackedBox {
                id,
                class_label: b.class,
                bbox,
                score: b.score,
            })
        })
        .collect()
}

/// Parses a whole frame stream. Scenes are returned in order of first
/// appearance; frames keep file order.
pub fn parse_frames<R: BufRead>(reader: R) -> Result<Vec<Scene>> {
    let mut raw_frames: Vec<(usize, RawFrame)> = Vec::new();
    let mut file_dim: Option<Dim> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawFrame =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        for b in raw.gt.iter().chain(&raw.pred) {
            let dim = match b.center.len() {
                2 => Dim::Two,
                3 => Dim::Three,
                n => return Err(parse_err(line_no, format!("center has {n} entries, expected 2 or 3"))),
            };
            match file_dim {
                None => file_dim = Some(dim),
                Some(d) if d != dim => {
                    return Err(parse_err(line_no, format!("mixed dimensions: {d} and {dim} boxes")))
                }
                _ => {}
            }
        }
        raw_frames.push((line_no, raw));
    }

    let dim = file_dim.unwrap_or(Dim::Three);
    let mut order: Vec<String> = Vec::new();
    let mut scenes: HashMap<String, Vec<Frame>> = HashMap::new();
    let mut last_index: HashMap<String, u64> = HashMap::new();

    for (line_no, raw) in raw_frames {
        if !raw.timestamp.is_finite() {
            return Err(parse_err(line_no, "timestamp is not finite"));
        }
        if let Some(&prev) = last_index.get(&raw.scene_id) {
            if raw.frame_index <= prev {
                return Err(parse_err(
                    line_no,
                    format!(
                        "frame_index {} not after {prev} in scene `{}`",
                        raw.frame_index, raw.scene_id
                    ),
                ));
            }
        }
        last_index.insert(raw.scene_id.clone(), raw.frame_index);

        let e = &raw.ego;
        if !(e.x.is_finite() && e.y.is_finite() && e.yaw.is_finite() && e.z.unwrap_or(0.0).is_finite()) {
            return Err(parse_err(line_no, "ego pose is not finite"));
        }
        let position = match dim {
            Dim::Two => Point::xy(e.x, e.y),
            Dim::Three => Point::xyz(e.x, e.y, e.z.unwrap_or(0.0)),
        };
        let frame = Frame {
            scene_id: raw.scene_id.clone(),
            frame_index: raw.frame_index,
            timestamp: raw.timestamp,
            ego: EgoPose::new(position, e.yaw),
            gt: convert_boxes(raw.gt, "gt", line_no)?,
            pred: convert_boxes(raw.pred, "pred", line_no)?,
        };
        if !scenes.contains_key(&raw.scene_id) {
            order.push(raw.scene_id.clone());
        }
        scenes.entry(raw.scene_id).or_default().push(frame);
    }

    Ok(order
        .into_iter()
        .map(|id| {
            let frames = scenes.remove(&id).unwrap_or_default();
            Scene { id, frames }
        })
        .collect())
}

pub fn read_frames(path: &Path) -> Result<Vec<Scene>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_frames(BufReader::new(file))
}

fn raw_box(b: &TrackedBox) -> RawBox {
    RawBox {
        id: RawId::Str(b.id.clone()),
        class: b.class_label.clone(),
        center: b.bbox.center().as_slice().to_vec(),
        size: b.bbox.extents().to_vec(),
        yaw: b.bbox.yaw(),
        score: b.score,
    }
}

/// Serializes one frame as a single line (no trailing newline).
pub fn frame_to_line(frame: &Frame) -> Result<String> {
    let p = frame.ego.position;
    let raw = RawFrame {
        scene_id: frame.scene_id.clone(),
        frame_index: frame.frame_index,
        timestamp: frame.timestamp,
        ego: RawEgo {
            x: p.x(),
            y: p.y(),
            z: (p.dim() == Dim::Three).then(|| p.z()),
            yaw: frame.ego.yaw,
        },
        gt: frame.gt.iter().map(raw_box).collect(),
        pred: frame.pred.iter().map(raw_box).collect(),
    };
    Ok(serde_json::to_string(&raw)?)
}

pub fn write_frames<W: Write>(mut writer: W, scenes: &[Scene]) -> Result<()> {
    for frame in scenes.iter().flat_map(|s| &s.frames) {
        let line = frame_to_line(frame)?;
        writeln!(writer, "{line}").map_err(|e| Error::io("<frame stream>", e))?;
    }
    Ok(())
}

/// Number of frames per scene id, sorted by id.
pub fn frame_counts(scenes: &[Scene]) -> BTreeMap<&str, usize> {
    scenes.iter().map(|s| (s.id.as_str(), s.frames.len())).collect()
}
