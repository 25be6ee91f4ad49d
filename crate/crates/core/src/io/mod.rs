//! Frame-stream ingestion, scene selection and report export.

mod export;
mod filter;
mod frames;

pub use export::{
    export_report, read_report, write_correlation_csv, write_file, write_quadrant_csv,
    write_report, write_report_csv, write_scatter_csv, BinAxis, ReportDocument, ReportFormat,
};
pub use filter::{filter_scenes, SceneFilter};
pub use frames::{
    frame_counts, frame_to_line, parse_frames, read_frames, write_frames, Frame, Scene, TrackedBox,
};
