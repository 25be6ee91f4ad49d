use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    CorrelationMatrix, EvalReport, FunctionalBin, MetricRecord, RecordField, Summary,
    REPORT_SCHEMA_VERSION,
};

/// Top-level structured output: one report per evaluated metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub reports: Vec<EvalReport>,
}

impl ReportDocument {
    pub fn new(reports: Vec<EvalReport>) -> Self {
        ReportDocument {
            schema_version: REPORT_SCHEMA_VERSION,
            reports,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Pretty-printed JSON.
    Structured,
    /// CSV with a header row.
    Tabular,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Structured => "json",
            ReportFormat::Tabular => "csv",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "structured" => Ok(ReportFormat::Structured),
            "csv" | "tabular" => Ok(ReportFormat::Tabular),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinAxis {
    Distance,
    Yaw,
}

impl fmt::Display for BinAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinAxis::Distance => "distance",
            BinAxis::Yaw => "yaw",
        })
    }
}

impl FromStr for BinAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distance" => Ok(BinAxis::Distance),
            "yaw" => Ok(BinAxis::Yaw),
            other => Err(Error::Config(format!("unknown bin axis `{other}`"))),
        }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn summary_cells(s: Option<Summary>) -> [String; 2] {
    [opt(s.map(|s| s.mean)), opt(s.map(|s| s.median))]
}

pub fn write_report<W: Write>(mut writer: W, doc: &ReportDocument) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, doc)?;
    writeln!(writer).map_err(serde_json::Error::io)?;
    Ok(())
}

const BIN_HEADER: [&str; 20] = [
    "schema_version", "class", "metric", "threshold", "axis", "bin", "lo", "hi", "ftp", "ffp",
    "ffn", "failures", "ftpr", "matches", "tde_mean", "tde_median", "eod_mean", "eod_median",
    "ce_mean", "ce_median",
];

/// One row per bin and report. Distance rows also carry the matched-pair
/// diagnostics; yaw rows leave those columns empty.
pub fn write_report_csv<W: Write>(writer: W, doc: &ReportDocument, axis: BinAxis) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BIN_HEADER)?;
    for report in &doc.reports {
        let bins: &[FunctionalBin] = match axis {
            BinAxis::Distance => &report.distance_bins,
            BinAxis::Yaw => &report.yaw_bins,
        };
        for (i, b) in bins.iter().enumerate() {
            let stats = match axis {
                BinAxis::Distance => report.distance_stats.get(i),
                BinAxis::Yaw => None,
            };
            let [tde_mean, tde_median] = summary_cells(stats.and_then(|s| s.tde));
            let [eod_mean, eod_median] = summary_cells(stats.and_then(|s| s.eod));
            let [ce_mean, ce_median] = summary_cells(stats.and_then(|s| s.ce));
            w.write_record([
                doc.schema_version.to_string(),
                report.class_label.clone(),
                report.metric.to_string(),
                num(report.threshold),
                axis.to_string(),
                b.label.clone(),
                num(b.lo),
                opt(b.hi),
                b.ftp.to_string(),
                b.ffp.to_string(),
                b.ffn.to_string(),
                b.failures.to_string(),
                opt(b.ftpr),
                stats.map(|s| s.count.to_string()).unwrap_or_default(),
                tde_mean,
                tde_median,
                eod_mean,
                eod_median,
                ce_mean,
                ce_median,
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-match scatter rows, optionally limited to CE ≤ `window`.
pub fn write_scatter_csv<W: Write>(
    writer: W,
    records: &[MetricRecord],
    x: RecordField,
    y: RecordField,
    window: Option<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "schema_version", "scene_id", "frame_index", "gt_id", "pred_id", "class", "gt_to_ego",
        "x", "y", "metric_x", "metric_y",
    ])?;
    for r in records {
        if window.is_some_and(|win| r.ce > win) {
            continue;
        }
        let (Some(vx), Some(vy)) = (x.value(r), y.value(r)) else {
            continue;
        };
        w.write_record([
            REPORT_SCHEMA_VERSION.to_string(),
            r.scene_id.clone(),
            r.frame_index.to_string(),
            r.gt_id.clone(),
            r.pred_id.clone(),
            r.class_label.clone(),
            num(r.gt_to_ego),
            x.to_string(),
            y.to_string(),
            num(vx),
            num(vy),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Quadrant counts and shares, one row per report.
pub fn write_quadrant_csv<W: Write>(writer: W, doc: &ReportDocument) -> Result<()> {
    use crate::metrics::Quadrant;
    const ORDER: [(Quadrant, &str); 4] = [
        (Quadrant::Reliable, "reliable"),
        (Quadrant::ContourBased, "contour_based"),
        (Quadrant::Poor, "poor"),
        (Quadrant::IouBased, "iou_based"),
    ];
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["schema_version", "class", "metric", "ce_gate", "iou_gate", "total"];
    header.extend(ORDER.iter().map(|(_, n)| *n));
    let pct: Vec<String> = ORDER.iter().map(|(_, n)| format!("{n}_pct")).collect();
    header.extend(pct.iter().map(String::as_str));
    w.write_record(&header)?;
    for r in &doc.reports {
        let q = &r.quadrants;
        let mut row = vec![
            doc.schema_version.to_string(),
            r.class_label.clone(),
            r.metric.to_string(),
            num(q.ce_gate),
            num(q.iou_gate),
            q.counts.total.to_string(),
        ];
        row.extend(ORDER.iter().map(|(k, _)| q.counts.get(*k).to_string()));
        row.extend(ORDER.iter().map(|(k, _)| opt(q.counts.percent(*k))));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Long-form correlation matrix: one row per field pair.
pub fn write_correlation_csv<W: Write>(writer: W, class_label: &str, m: &CorrelationMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["schema_version", "class", "window", "count", "x", "y", "pearson"])?;
    for (i, fx) in m.fields.iter().enumerate() {
        for (j, fy) in m.fields.iter().enumerate() {
            w.write_record([
                REPORT_SCHEMA_VERSION.to_string(),
                class_label.to_string(),
                num(m.window),
                m.count.to_string(),
                fx.to_string(),
                fy.to_string(),
                opt(m.values[i][j]),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Renders `doc` and writes it to `path`.
pub fn export_report(path: &Path, doc: &ReportDocument, format: ReportFormat) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        ReportFormat::Structured => write_report(&mut buf, doc)?,
        ReportFormat::Tabular => write_report_csv(&mut buf, doc, BinAxis::Distance)?,
    }
    write_file(path, &buf)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ReportDocument = serde_json::from_str(&text)?;
    if doc.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported schema_version {}",
            path.display(),
            doc.schema_version
        )));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Metric;
    use crate::contour::ContourConfig;
    use crate::geometry::{EgoPose, OrientedBox, Point};
    use crate::io::{Frame, Scene, TrackedBox};
    use crate::metrics::{evaluate, BinEdges, EvalSettings};

    fn scenes() -> Vec<Scene> {
        let frames = (0..5u64)
            .map(|i| {
                let x = 4.0 + 6.0 * i as f64;
                let b = |dx: f64, yaw: f64| {
                    OrientedBox::new_3d([x + dx, 2.0, 0.8], [4.5, 1.9, 1.7], yaw).unwrap()
                };
                Frame {
                    scene_id: "s".into(),
                    frame_index: i,
                    timestamp: i as f64,
                    ego: EgoPose::at(Point::xyz(0.0, 0.0, 0.0)),
                    gt: vec![TrackedBox::new("g", "car", b(0.0, 0.0))],
                    pred: vec![
                        TrackedBox::new("p", "car", b(0.3, 0.1)),
                        TrackedBox::new("q", "car", b(0.0, 0.0).translated([0.0, 20.0, 0.0])),
                    ],
                }
            })
            .collect();
        vec![Scene { id: "s".into(), frames }]
    }

    fn settings() -> EvalSettings {
        EvalSettings::for_class("car", Metric::Ce, ContourConfig::ego_3d()).unwrap()
    }

    #[test]
    fn structured_round_trip() {
        let eval = evaluate(&scenes(), &settings()).unwrap();
        let doc = ReportDocument::new(vec![eval.report]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        export_report(&path, &doc, ReportFormat::Structured).unwrap();
        assert_eq!(read_report(&path).unwrap(), doc);
    }

    #[test]
    fn empty_report_is_valid() {
        let doc = ReportDocument::new(vec![evaluate(&[], &settings()).unwrap().report]);
        let mut buf = Vec::new();
        write_report(&mut buf, &doc).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["reports"][0]["totals"]["ftp"], 0);
        assert_eq!(v["reports"][0]["totals"]["failures"], 0);
    }

    #[test]
    fn two_bins_give_two_rows() {
        let mut s = settings();
        s.distance_edges = BinEdges::new(vec![0.0, 15.0]).unwrap();
        let doc = ReportDocument::new(vec![evaluate(&scenes(), &s).unwrap().report]);
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &doc, BinAxis::Distance).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("schema_version,"));
        assert!(lines[1].contains(",0-15,"));
        assert!(lines[2].contains(",15+,"));
    }

    #[test]
    fn scatter_has_one_row_per_match() {
        let eval = evaluate(&scenes(), &settings()).unwrap();
        let mut buf = Vec::new();
        write_scatter_csv(&mut buf, &eval.records, RecordField::Ce, RecordField::Iou, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 5);
        assert!(text.lines().next().unwrap().ends_with("metric_x,metric_y"));
    }

    #[test]
    fn io_errors_name_the_path() {
        let doc = ReportDocument::new(Vec::new());
        let path = Path::new("/nonexistent-dir/x/report.json");
        let err = export_report(path, &doc, ReportFormat::Structured).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x/report.json"));
    }
}
