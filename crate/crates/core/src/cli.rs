//! Command-line surface. Flags override values from `--config`, which
//! override the built-in class defaults.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::assignment::Metric;
use crate::contour::{ContourConfig, Perspective};
use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::io::{
    filter_scenes, read_frames, write_correlation_csv, write_file, write_quadrant_csv,
    write_report, write_report_csv, write_scatter_csv, BinAxis, ReportDocument, ReportFormat,
    Scene, SceneFilter,
};
use crate::metrics::{evaluate, ClassDefaults, EvalSettings, Evaluation, RecordField, REPORT_SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "contour-eval", version, about = "Contour-error evaluation for 3D multi-object tracking")]
pub struct Cli {
    /// TOML file with default run settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Functional counts and FTPR per scene and overall.
    Evaluate(EvaluateArgs),
    /// CE/IoU agreement quadrants over CE-matched pairs.
    Compare(AnalysisArgs),
    /// Functional counts binned by distance to ego or by yaw error.
    Bins(BinsArgs),
    /// Per-match metric pairs as CSV.
    Scatter(ScatterArgs),
    /// Pairwise correlation of CE, IoU and CPD over CE-matched pairs.
    Correlate(AnalysisArgs),
    /// Ids of scenes with large yaw errors near the ego.
    FilterScenes(FilterArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Frame-stream file (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Object class to evaluate.
    #[arg(long = "class", value_name = "LABEL")]
    pub class_label: Option<String>,

    /// Gate override, e.g. `ce=2.0` or `iou=0.5`. Repeatable.
    #[arg(long = "threshold", value_name = "METRIC=VALUE")]
    pub thresholds: Vec<String>,

    /// Box dimension, 2 or 3.
    #[arg(long, value_name = "2|3")]
    pub dim: Option<u8>,

    /// Corner selection: ego or object.
    #[arg(long)]
    pub perspective: Option<Perspective>,

    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Matching metric: ce, iou or cpd. Repeatable.
    #[arg(long = "metric", value_name = "METRIC")]
    pub metrics: Vec<Metric>,

    /// json or csv.
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct BinsArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long = "metric", value_name = "METRIC")]
    pub metrics: Vec<Metric>,

    /// distance or yaw.
    #[arg(long, default_value = "distance")]
    pub by: BinAxis,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// CE gate used to collect pairs (meters).
    #[arg(long)]
    pub window: Option<f64>,

    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long)]
    pub window: Option<f64>,

    #[arg(long, default_value = "ce")]
    pub x: RecordField,

    #[arg(long, default_value = "iou")]
    pub y: RecordField,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Degrees.
    #[arg(long = "min-yaw")]
    pub min_yaw: Option<f64>,

    /// Meters.
    #[arg(long = "max-dist")]
    pub max_dist: Option<f64>,

    #[arg(long = "min-frames")]
    pub min_frames: Option<usize>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub class: Option<String>,
    pub metrics: Option<Vec<Metric>>,
    pub dim: Option<u8>,
    pub perspective: Option<String>,
    pub format: Option<String>,
    #[serde(default)]
    pub thresholds: std::collections::BTreeMap<String, f64>,
    pub window: Option<f64>,
    pub min_yaw: Option<f64>,
    pub max_dist: Option<f64>,
    pub min_frames: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub class_label: String,
    pub metrics: Vec<Metric>,
    pub thresholds: Vec<(Metric, f64)>,
    pub contour: ContourConfig,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub window: Option<f64>,
    pub filter: SceneFilter,
}

pub fn parse_threshold(s: &str) -> Result<(Metric, f64)> {
    let (m, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("threshold `{s}` is not METRIC=VALUE")))?;
    let metric: Metric = m.trim().parse()?;
    let value: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("threshold `{s}` has a non-numeric value")))?;
    metric.max_cost(value)?;
    Ok((metric, value))
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs, file: &FileConfig) -> Result<Self> {
        let mut thresholds = Vec::new();
        for (k, &v) in &file.thresholds {
            thresholds.push(parse_threshold(&format!("{k}={v}"))?);
        }
        for t in &common.thresholds {
            let (m, v) = parse_threshold(t)?;
            thresholds.retain(|(old, _)| *old != m);
            thresholds.push((m, v));
        }
        let dim = Dim::from_count(common.dim.or(file.dim).unwrap_or(3) as usize)?;
        let perspective = match (common.perspective, &file.perspective) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse()?,
            (None, None) => Perspective::EgoCentric,
        };
        let format = match &file.format {
            Some(s) => s.parse()?,
            None => ReportFormat::Structured,
        };
        let metrics = file.metrics.clone().unwrap_or_else(|| vec![Metric::Ce]);
        let filter = SceneFilter {
            min_yaw_error: file.min_yaw.unwrap_or(10.0),
            max_proximity: file.max_dist.unwrap_or(30.0),
            min_frames: file.min_frames.unwrap_or(10),
        };
        Ok(RunConfig {
            input: common.input.clone(),
            class_label: common
                .class_label
                .clone()
                .or_else(|| file.class.clone())
                .unwrap_or_else(|| "car".into()),
            metrics,
            thresholds,
            contour: ContourConfig::new(dim, perspective),
            out: common.out.clone(),
            format,
            window: file.window,
            filter,
        })
    }

    fn with_metrics(mut self, metrics: &[Metric]) -> Result<Self> {
        if !metrics.is_empty() {
            self.metrics = metrics.to_vec();
        }
        let mut seen = Vec::new();
        for m in &self.metrics {
            if seen.contains(m) {
                return Err(Error::Config(format!("metric `{m}` given twice")));
            }
            seen.push(*m);
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("metric list is empty".into()));
        }
        Ok(self)
    }

    fn explicit(&self, metric: Metric) -> Option<f64> {
        self.thresholds.iter().find(|(m, _)| *m == metric).map(|&(_, v)| v)
    }

    /// Gate for `metric`: the explicit value, else the class default.
    pub fn gate(&self, metric: Metric) -> Result<f64> {
        self.explicit(metric)
            .or_else(|| ClassDefaults::for_class(&self.class_label).map(|d| d.gate(metric)))
            .ok_or_else(|| {
                Error::Config(format!(
                    "no default {metric} threshold for class `{}`; pass --threshold {metric}=VALUE",
                    self.class_label
                ))
            })
    }

    /// Class defaults with explicit gates applied. Unknown classes need
    /// explicit CE and IoU gates; their analysis windows default to the CE gate.
    pub fn class_defaults(&self) -> Result<ClassDefaults> {
        let base = ClassDefaults::for_class(&self.class_label);
        let ce_gate = self.gate(Metric::Ce)?;
        let iou_gate = self.gate(Metric::Iou)?;
        Ok(ClassDefaults {
            ce_gate,
            iou_gate,
            cpd_gate: self.explicit(Metric::Cpd).or(base.map(|d| d.cpd_gate)).unwrap_or(ce_gate),
            correlation_window: base.map_or(ce_gate, |d| d.correlation_window),
            scatter_window: base.map_or(ce_gate, |d| d.scatter_window),
        })
    }

    pub fn settings(&self, metric: Metric) -> Result<EvalSettings> {
        let s = EvalSettings::custom(
            &self.class_label,
            metric,
            self.gate(metric)?,
            self.contour,
            self.class_defaults()?,
        );
        s.validate()?;
        Ok(s)
    }

    /// CE matching at the analysis window, for scatter, quadrant and
    /// correlation outputs.
    pub fn analysis_settings(&self) -> Result<EvalSettings> {
        let window = match self.window {
            Some(w) => w,
            None => self.class_defaults()?.scatter_window,
        };
        let s = self.settings(Metric::Ce)?.with_threshold(window);
        s.validate()?;
        Ok(s)
    }

    pub fn load_scenes(&self) -> Result<Vec<Scene>> {
        let scenes = read_frames(&self.input)?;
        log::info!("read {} scenes from {}", scenes.len(), self.input.display());
        Ok(scenes)
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_file(path, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn json_bytes(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn run_metrics(cfg: &RunConfig, scenes: &[Scene]) -> Result<Vec<Evaluation>> {
    cfg.metrics
        .iter()
        .map(|&m| {
            let eval = evaluate(scenes, &cfg.settings(m)?)?;
            let t = &eval.report.totals;
            log::info!(
                "{m}: FTP {} FFP {} FFN {} FID {} FTPR {:?}",
                t.ftp, t.ffp, t.ffn, t.fid, t.ftpr
            );
            Ok(eval)
        })
        .collect()
}

fn resolve(cli: &Cli, common: &CommonArgs) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    RunConfig::resolve(common, &file)
}

/// Runs one invocation and returns the bytes it wrote.
pub fn render(cli: &Cli) -> Result<(Option<PathBuf>, Vec<u8>)> {
    let mut buf = Vec::new();
    let out = match &cli.command {
        Command::Evaluate(args) => {
            let mut cfg = resolve(cli, &args.common)?.with_metrics(&args.metrics)?;
            if let Some(f) = args.format {
                cfg.format = f;
            }
            let scenes = cfg.load_scenes()?;
            let reports = run_metrics(&cfg, &scenes)?.into_iter().map(|e| e.report).collect();
            let doc = ReportDocument::new(reports);
            match cfg.format {
                ReportFormat::Structured => write_report(&mut buf, &doc)?,
                ReportFormat::Tabular => write_report_csv(&mut buf, &doc, BinAxis::Distance)?,
            }
            cfg.out
        }
        Command::Bins(args) => {
            let cfg = resolve(cli, &args.common)?.with_metrics(&args.metrics)?;
            let scenes = cfg.load_scenes()?;
            let reports = run_metrics(&cfg, &scenes)?.into_iter().map(|e| e.report).collect();
            write_report_csv(&mut buf, &ReportDocument::new(reports), args.by)?;
            cfg.out
        }
        Command::Compare(args) | Command::Correlate(args) => {
            let mut cfg = resolve(cli, &args.common)?;
            if args.window.is_some() {
                cfg.window = args.window;
            }
            if let Some(f) = args.format {
                cfg.format = f;
            }
            let scenes = cfg.load_scenes()?;
            let settings = cfg.analysis_settings()?;
            let report = evaluate(&scenes, &settings)?.report;
            let compare = matches!(cli.command, Command::Compare(_));
            match (compare, cfg.format) {
                (true, ReportFormat::Structured) => {
                    let q = &report.quadrants;
                    let pct = |k| q.counts.percent(k);
                    use crate::metrics::Quadrant::*;
                    buf = json_bytes(&json!({
                        "schema_version": REPORT_SCHEMA_VERSION,
                        "class": report.class_label,
                        "window": report.threshold,
                        "quadrants": q,
                        "percent": {
                            "reliable": pct(Reliable),
                            "contour_based": pct(ContourBased),
                            "poor": pct(Poor),
                            "iou_based": pct(IouBased),
                        },
                    }))?;
                }
                (true, ReportFormat::Tabular) => {
                    write_quadrant_csv(&mut buf, &ReportDocument::new(vec![report]))?
                }
                (false, ReportFormat::Structured) => {
                    buf = json_bytes(&json!({
                        "schema_version": REPORT_SCHEMA_VERSION,
                        "class": report.class_label,
                        "match_window": report.threshold,
                        "correlation": report.correlation,
                    }))?;
                }
                (false, ReportFormat::Tabular) => {
                    write_correlation_csv(&mut buf, &report.class_label, &report.correlation)?
                }
            }
            cfg.out
        }
        Command::Scatter(args) => {
            let mut cfg = resolve(cli, &args.common)?;
            if args.window.is_some() {
                cfg.window = args.window;
            }
            let scenes = cfg.load_scenes()?;
            let eval = evaluate(&scenes, &cfg.analysis_settings()?)?;
            write_scatter_csv(&mut buf, &eval.records, args.x, args.y, None)?;
            cfg.out
        }
        Command::FilterScenes(args) => {
            let mut cfg = resolve(cli, &args.common)?;
            if let Some(v) = args.min_yaw {
                cfg.filter.min_yaw_error = v;
            }
            if let Some(v) = args.max_dist {
                cfg.filter.max_proximity = v;
            }
            if let Some(v) = args.min_frames {
                cfg.filter.min_frames = v;
            }
            let scenes = cfg.load_scenes()?;
            let ce_gate = cfg.gate(Metric::Ce)?;
            let kept = filter_scenes(&scenes, &cfg.filter, &cfg.class_label, &cfg.contour, ce_gate)?;
            log::info!("kept {} of {} scenes", kept.len(), scenes.len());
            for s in &kept {
                writeln!(buf, "{}", s.id).map_err(|e| Error::io("<buffer>", e))?;
            }
            cfg.out
        }
    };
    Ok((out, buf))
}

pub fn run(cli: &Cli) -> Result<()> {
    let (out, bytes) = render(cli)?;
    emit(out.as_deref(), &bytes)
}
