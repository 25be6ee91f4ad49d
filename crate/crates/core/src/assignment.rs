//! Per-frame cost matrices, optimal assignment and threshold gating.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contour::{contour_error, ContourConfig};
use crate::error::{Error, Result};
use crate::geometry::{cpd, iou, EgoPose, OrientedBox};
use crate::io::Frame;

/// Matching criterion. All three are expressed as costs to minimize: CE and
/// CPD in meters, IoU as `1 − IoU`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ce,
    Iou,
    Cpd,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ce, Metric::Iou, Metric::Cpd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ce => "ce",
            Metric::Iou => "iou",
            Metric::Cpd => "cpd",
        }
    }

    /// Largest admissible cost for a threshold `tau` given in the metric's
    /// natural unit (meters for CE/CPD, an IoU level for IoU).
    pub fn max_cost(self, tau: f64) -> Result<f64> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidThreshold(tau));
        }
        match self {
            Metric::Ce | Metric::Cpd => Ok(tau),
            Metric::Iou if tau <= 1.0 => Ok(1.0 - tau),
            Metric::Iou => Err(Error::InvalidThreshold(tau)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" | "contour" => Ok(Metric::Ce),
            "iou" => Ok(Metric::Iou),
            "cpd" => Ok(Metric::Cpd),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Dense row-major `rows × cols` matrix of finite nonnegative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::InvalidCostMatrix(format!(
                "{} cells for a {rows}×{cols} matrix",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidCostMatrix(format!(
                "cells must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(CostMatrix { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidCostMatrix("ragged rows".into()));
        }
        CostMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn transposed(&self) -> CostMatrix {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                cells.push(self.get(r, c));
            }
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            cells,
        }
    }

    pub fn total(&self, assignment: &[(usize, usize)]) -> f64 {
        assignment.iter().map(|&(r, c)| self.get(r, c)).sum()
    }
}

/// Cost of one (gt, pred) pair under `metric`, in the configuration's dimension.
pub fn pair_cost(
    metric: Metric,
    gt: &OrientedBox,
    pred: &OrientedBox,
    ego: &EgoPose,
    config: &ContourConfig,
) -> Result<f64> {
    match metric {
        Metric::Ce => contour_error(gt, pred, Some(ego), config),
        Metric::Iou => Ok(1.0 - iou(&config.project_box(gt)?, &config.project_box(pred)?)?),
        Metric::Cpd => cpd(&config.project_box(gt)?, &config.project_box(pred)?),
    }
}

pub fn cost_matrix(
    gts: &[OrientedBox],
    preds: &[OrientedBox],
    ego: &EgoPose,
    metric: Metric,
    config: &ContourConfig,
) -> Result<CostMatrix> {
    let mut cells = Vec::with_capacity(gts.len() * preds.len());
    for g in gts {
        for p in preds {
            cells.push(pair_cost(metric, g, p, ego, config)?);
        }
    }
    CostMatrix::new(gts.len(), preds.len(), cells)
}

/// Rows are the frame's ground-truth boxes, columns its predictions, both in
/// file order.
pub fn build_cost_matrix(frame: &Frame, metric: Metric, config: &ContourConfig) -> Result<CostMatrix> {
    let gts: Vec<OrientedBox> = frame.gt.iter().map(|o| o.bbox).collect();
    let preds: Vec<OrientedBox> = frame.pred.iter().map(|o| o.bbox).collect();
    cost_matrix(&gts, &preds, &frame.ego, metric, config)
}

/// Minimum-cost assignment of `min(rows, cols)` pairs, sorted by row.
///
/// Shortest augmenting path Hungarian method with row/column potentials,
/// O(n²m) for n ≤ m; a tall matrix is solved on its transpose. Among
/// equal-cost optima the one reached first by column-index scanning is
/// returned.
pub fn hungarian(costs: &CostMatrix) -> Vec<(usize, usize)> {
    if costs.rows() == 0 || costs.cols() == 0 {
        return Vec::new();
    }
    if costs.rows() > costs.cols() {
        let mut pairs: Vec<(usize, usize)> = solve_wide(&costs.transposed())
            .into_iter()
            .map(|(r, c)| (c, r))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }
    solve_wide(costs)
}

/// Requires rows ≤ cols. Indices in the potentials are 1-based with slot 0
/// acting as the virtual start column.
fn solve_wide(costs: &CostMatrix) -> Vec<(usize, usize)> {
    let n = costs.rows();
    let m = costs.cols();
    debug_assert!(n <= m);

    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // owner[j]: row (1-based) assigned to column j, 0 if free
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = costs.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = row[j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt: usize,
    pub pred: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: Vec<MatchedPair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
    /// Assigned pairs that failed the gate. Their indices also appear in
    /// the unmatched lists.
    pub rejected: Vec<MatchedPair>,
}

impl MatchResult {
    pub fn assignment(&self) -> Vec<(usize, usize)> {
        self.matched.iter().map(|m| (m.gt, m.pred)).collect()
    }
}

/// Splits an assignment into accepted pairs (cost within the gate) and
/// unmatched rows/columns. Rejected pairs release both sides; there is no
/// second matching pass.
pub fn gate_matches(
    assignment: &[(usize, usize)],
    costs: &CostMatrix,
    metric: Metric,
    tau: f64,
) -> Result<MatchResult> {
    let max_cost = metric.max_cost(tau)?;
    let mut gt_taken = vec![false; costs.rows()];
    let mut pred_taken = vec![false; costs.cols()];
    let mut matched = Vec::new();
    let mut rejected = Vec::new();
    let mut seen_gt = vec![false; costs.rows()];
    let mut seen_pred = vec![false; costs.cols()];
    for &(g, p) in assignment {
        if g >= costs.rows() || p >= costs.cols() {
            return Err(Error::InvalidCostMatrix(format!(
                "assignment ({g}, {p}) outside a {}×{} matrix",
                costs.rows(),
                costs.cols()
            )));
        }
        if seen_gt[g] || seen_pred[p] {
            return Err(Error::InvalidCostMatrix(format!(
                "assignment reuses row {g} or column {p}"
            )));
        }
        seen_gt[g] = true;
        seen_pred[p] = true;
        let cost = costs.get(g, p);
        if cost <= max_cost {
            gt_taken[g] = true;
            pred_taken[p] = true;
            matched.push(MatchedPair { gt: g, pred: p, cost });
        } else {
            rejected.push(MatchedPair { gt: g, pred: p, cost });
        }
    }
    matched.sort_by_key(|m| m.gt);
    rejected.sort_by_key(|m| m.gt);
    Ok(MatchResult {
        matched,
        unmatched_gt: (0..costs.rows()).filter(|&i| !gt_taken[i]).collect(),
        unmatched_pred: (0..costs.cols()).filter(|&j| !pred_taken[j]).collect(),
        rejected,
    })
}

/// Builds the cost matrix for `frame`, assigns, then gates.
pub fn match_frame(
    frame: &Frame,
    metric: Metric,
    config: &ContourConfig,
    tau: f64,
) -> Result<(CostMatrix, MatchResult)> {
    let costs = build_cost_matrix(frame, metric, config)?;
    let assignment = hungarian(&costs);
    let result = gate_matches(&assignment, &costs, metric, tau)?;
    Ok((costs, result))
}
