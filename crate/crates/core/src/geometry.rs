//! Yaw-oriented bounding boxes and the baseline box metrics.
//!
//! Boxes are either 2D (BEV footprint) or 3D with rotation about the
//! vertical axis only. All distances are in meters, all angles in radians.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polygon areas below this are treated as an empty intersection (m²).
pub const AREA_EPSILON: f64 = 1e-12;

/// Containment tolerance used by [`OrientedBox::contains`] (m).
pub const CONTAINMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn count(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn corner_count(self) -> usize {
        match self {
            Dim::Two => 4,
            Dim::Three => 8,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Dim::from_count(value as usize)
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.count() as u8
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D", self.count())
    }
}

fn check_dims(left: Dim, right: Dim) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: left.count(),
            right: right.count(),
        })
    }
}

/// Normalizes an angle to (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// A 2D or 3D point. The z coordinate of a 2D point is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 3],
    dim: Dim,
}

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Point {
            coords: [x, y, 0.0],
            dim: Dim::Two,
        }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point {
            coords: [x, y, z],
            dim: Dim::Three,
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match *values {
            [x, y] => Ok(Point::xy(x, y)),
            [x, y, z] => Ok(Point::xyz(x, y, z)),
            _ => Err(Error::UnsupportedDimension(values.len())),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim.count()]
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Drops the z coordinate.
    pub fn to_bev(&self) -> Point {
        Point::xy(self.x(), self.y())
    }

    /// Lifts a 2D point to 3D with the given height; 3D points are returned unchanged.
    pub fn with_z(&self, z: f64) -> Point {
        match self.dim {
            Dim::Two => Point::xyz(self.x(), self.y(), z),
            Dim::Three => *self,
        }
    }

    pub fn distance(&self, other: &Point) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        Ok(self.distance_unchecked(other))
    }

    pub(crate) fn distance_unchecked(&self, other: &Point) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        let dz = self.coords[2] - other.coords[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn translated(&self, offset: [f64; 3]) -> Point {
        let mut coords = self.coords;
        coords[0] += offset[0];
        coords[1] += offset[1];
        if self.dim == Dim::Three {
            coords[2] += offset[2];
        }
        Point {
            coords,
            dim: self.dim,
        }
    }
}

/// Ego vehicle pose. Only the position enters contour error; yaw is carried
/// for completeness of the frame record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPose {
    pub position: Point,
    pub yaw: f64,
}

impl EgoPose {
    pub fn new(position: Point, yaw: f64) -> Self {
        EgoPose {
            position,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn at(position: Point) -> Self {
        EgoPose::new(position, 0.0)
    }

    pub fn dim(&self) -> Dim {
        self.position.dim()
    }

    pub fn to_bev(&self) -> EgoPose {
        EgoPose {
            position: self.position.to_bev(),
            yaw: self.yaw,
        }
    }
}

/// A box with center, full per-axis extents (length, width\[, height\]) and
/// a yaw about the vertical axis.
///
/// Corner order is fixed: the bottom face counterclockwise starting at the
/// front-left corner in the box frame, `(+l/2, +w/2)`, `(−l/2, +w/2)`,
/// `(−l/2, −w/2)`, `(+l/2, −w/2)`, followed in 3D by the top face in the
/// same order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    center: Point,
    extents: [f64; 3],
    yaw: f64,
}

const FACE_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

impl OrientedBox {
    /// `extents` must have one entry per dimension of `center`.
    pub fn new(center: Point, extents: &[f64], yaw: f64) -> Result<Self> {
        let dim = center.dim();
        if extents.len() != dim.count() {
            return Err(Error::InvalidBox(format!(
                "{} extents given for a {} center",
                extents.len(),
                dim
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidBox("center is not finite".into()));
        }
        if let Some(bad) = extents.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidBox(format!(
                "extents must be positive and finite, got {bad}"
            )));
        }
        if !yaw.is_finite() {
            return Err(Error::InvalidBox("yaw is not finite".into()));
        }
        let mut ext = [0.0; 3];
        ext[..extents.len()].copy_from_slice(extents);
        Ok(OrientedBox {
            center,
            extents: ext,
            yaw: normalize_angle(yaw),
        })
    }

    pub fn new_2d(center: [f64; 2], extents: [f64; 2], yaw: f64) -> Result<Self> {
        OrientedBox::new(Point::xy(center[0], center[1]), &extents, yaw)
    }

    pub fn new_3d(center: [f64; 3], extents: [f64; 3], yaw: f64) -> Result<Self> {
        OrientedBox::new(Point::xyz(center[0], center[1], center[2]), &extents, yaw)
    }

    pub fn dim(&self) -> Dim {
        self.center.dim()
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim().count()]
    }

    pub fn length(&self) -> f64 {
        self.extents[0]
    }

    pub fn width(&self) -> f64 {
        self.extents[1]
    }

    /// Zero for 2D boxes.
    pub fn height(&self) -> f64 {
        self.extents[2]
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    /// Area in 2D, volume in 3D.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    /// BEV footprint of the box. 2D boxes are returned unchanged.
    pub fn to_bev(&self) -> OrientedBox {
        OrientedBox {
            center: self.center.to_bev(),
            extents: [self.extents[0], self.extents[1], 0.0],
            yaw: self.yaw,
        }
    }

    pub fn translated(&self, offset: [f64; 3]) -> OrientedBox {
        OrientedBox {
            center: self.center.translated(offset),
            ..*self
        }
    }

    pub fn with_yaw(&self, yaw: f64) -> OrientedBox {
        OrientedBox {
            yaw: normalize_angle(yaw),
            ..*self
        }
    }

    pub fn corners(&self) -> Vec<Point> {
        let (sin, cos) = self.yaw.sin_cos();
        let half_l = self.extents[0] / 2.0;
        let half_w = self.extents[1] / 2.0;
        let cx = self.center.x();
        let cy = self.center.y();
        let footprint = FACE_SIGNS.iter().map(|&(sl, sw)| {
            let lx = sl * half_l;
            let ly = sw * half_w;
            (cx + cos * lx - sin * ly, cy + sin * lx + cos * ly)
        });
        match self.dim() {
            Dim::Two => footprint.map(|(x, y)| Point::xy(x, y)).collect(),
            Dim::Three => {
                let half_h = self.extents[2] / 2.0;
                let cz = self.center.z();
                let base: Vec<(f64, f64)> = footprint.collect();
                [cz - half_h, cz + half_h]
                    .iter()
                    .flat_map(|&z| base.iter().map(move |&(x, y)| Point::xyz(x, y, z)))
                    .collect()
            }
        }
    }

    /// Coordinates of `p` in the box frame (translated by −center, rotated by −yaw).
    fn to_local(&self, p: &Point) -> [f64; 3] {
        let (sin, cos) = self.yaw.sin_cos();
        let dx = p.x() - self.center.x();
        let dy = p.y() - self.center.y();
        let dz = p.z() - self.center.z();
        [cos * dx + sin * dy, -sin * dx + cos * dy, dz]
    }

    /// Whether `p` lies in the solid box, within [`CONTAINMENT_TOLERANCE`].
    pub fn contains(&self, p: &Point) -> Result<bool> {
        check_dims(p.dim(), self.dim())?;
        let local = self.to_local(p);
        Ok(local
            .iter()
            .zip(self.extents())
            .all(|(c, e)| c.abs() <= e / 2.0 + CONTAINMENT_TOLERANCE))
    }

    /// Footprint corners as a counterclockwise polygon.
    pub(crate) fn footprint(&self) -> Vec<[f64; 2]> {
        self.to_bev()
            .corners()
            .iter()
            .map(|p| [p.x(), p.y()])
            .collect()
    }
}

/// Euclidean distance from `p` to the closest point of the solid box; zero
/// inside. The point is expressed in the box frame and the residual after
/// clamping each axis to ±extent/2 is measured.
pub fn point_to_box_distance(p: &Point, b: &OrientedBox) -> Result<f64> {
    check_dims(p.dim(), b.dim())?;
    let local = b.to_local(p);
    let sq: f64 = local
        .iter()
        .zip(b.extents())
        .map(|(c, e)| {
            // residuals within the containment tolerance count as on the box
            let r = (c.abs() - e / 2.0).max(0.0);
            if r <= CONTAINMENT_TOLERANCE {
                0.0
            } else {
                r * r
            }
        })
        .sum();
    Ok(sq.sqrt())
}

/// Center-point distance.
pub fn cpd(a: &OrientedBox, b: &OrientedBox) -> Result<f64> {
    a.center().distance(&b.center())
}

/// Intersection over union of two boxes of the same dimension. 3D boxes
/// use BEV polygon overlap times vertical overlap.
pub fn iou(a: &OrientedBox, b: &OrientedBox) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let bev = intersection_area(&a.footprint(), &b.footprint());
    let inter = match a.dim() {
        Dim::Two => bev,
        Dim::Three => {
            let (a_lo, a_hi) = vertical_span(a);
            let (b_lo, b_hi) = vertical_span(b);
            let overlap = (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0);
            bev * overlap
        }
    };
    if inter <= 0.0 {
        return Ok(0.0);
    }
    let union = a.measure() + b.measure() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

fn vertical_span(b: &OrientedBox) -> (f64, f64) {
    let half = b.height() / 2.0;
    (b.center().z() - half, b.center().z() + half)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace area, positive for counterclockwise polygons.
pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = poly
        .iter()
        .zip(poly.iter().cycle().skip(1))
        .map(|(p, q)| p[0] * q[1] - q[0] * p[1])
        .sum();
    twice / 2.0
}

/// Sutherland–Hodgman: clips `subject` against the convex counterclockwise
/// polygon `clip`.
pub(crate) fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output = subject.to_vec();
    for (i, &a) in clip.iter().enumerate() {
        if output.is_empty() {
            break;
        }
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        for (j, &cur) in input.iter().enumerate() {
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(segment_line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(segment_line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn segment_line_intersection(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let denom = dp - dq;
    if denom.abs() < f64::EPSILON {
        return q;
    }
    let t = dp / denom;
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

pub(crate) fn intersection_area(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let area = polygon_area(&clip_convex(a, b));
    if area < AREA_EPSILON {
        0.0
    } else {
        area
    }
}

/// A rotation about the vertical axis through the origin followed by a
/// translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub rotation: f64,
    pub translation: [f64; 3],
}

impl RigidMotion {
    pub fn new(rotation: f64, translation: [f64; 3]) -> Self {
        RigidMotion {
            rotation,
            translation,
        }
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        let (sin, cos) = self.rotation.sin_cos();
        let x = cos * p.x() - sin * p.y();
        let y = sin * p.x() + cos * p.y();
        let rotated = match p.dim() {
            Dim::Two => Point::xy(x, y),
            Dim::Three => Point::xyz(x, y, p.z()),
        };
        rotated.translated(self.translation)
    }

    pub fn apply_box(&self, b: &OrientedBox) -> OrientedBox {
        OrientedBox {
            center: self.apply_point(&b.center),
            extents: b.extents,
            yaw: normalize_angle(b.yaw + self.rotation),
        }
    }

    pub fn apply_ego(&self, ego: &EgoPose) -> EgoPose {
        EgoPose::new(self.apply_point(&ego.position), ego.yaw + self.rotation)
    }
}
