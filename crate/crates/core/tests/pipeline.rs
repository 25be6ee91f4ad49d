use std::path::PathBuf;

use contour_eval::assignment::Metric;
use contour_eval::contour::ContourConfig;
use contour_eval::io::{filter_scenes, parse_frames, read_frames, write_frames, SceneFilter};
use contour_eval::metrics::{evaluate, EvalSettings};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn fixtures_round_trip_through_the_writer() {
    for name in ["perfect.jsonl", "extra_pred.jsonl", "heading_50m.jsonl", "corpus.jsonl", "scene_filter.jsonl"] {
        let scenes = read_frames(&fixture(name)).unwrap();
        let mut buf = Vec::new();
        write_frames(&mut buf, &scenes).unwrap();
        let again = parse_frames(buf.as_slice()).unwrap();
        assert_eq!(scenes, again, "{name}");
    }
}

#[test]
fn evaluation_is_repeatable() {
    let scenes = read_frames(&fixture("corpus.jsonl")).unwrap();
    for metric in Metric::ALL {
        let settings = EvalSettings::for_class("car", metric, ContourConfig::ego_3d()).unwrap();
        let a = evaluate(&scenes, &settings).unwrap();
        let b = evaluate(&scenes, &settings).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.records, b.records);
    }
}

#[test]
fn scene_order_does_not_change_totals() {
    let scenes = read_frames(&fixture("corpus.jsonl")).unwrap();
    let mut reversed = scenes.clone();
    reversed.reverse();
    let settings = EvalSettings::for_class("car", Metric::Ce, ContourConfig::ego_3d()).unwrap();
    let a = evaluate(&scenes, &settings).unwrap();
    let b = evaluate(&reversed, &settings).unwrap();
    assert_eq!(a.report, b.report);
}

#[test]
fn report_totals_match_scene_sums() {
    let scenes = read_frames(&fixture("corpus.jsonl")).unwrap();
    let settings = EvalSettings::for_class("car", Metric::Ce, ContourConfig::ego_3d()).unwrap();
    let report = evaluate(&scenes, &settings).unwrap().report;
    let ftp: u64 = report.scenes.iter().map(|s| s.counts.ftp).sum();
    let ffp: u64 = report.scenes.iter().map(|s| s.counts.ffp).sum();
    let ffn: u64 = report.scenes.iter().map(|s| s.counts.ffn).sum();
    assert_eq!((ftp, ffp, ffn), (report.totals.ftp, report.totals.ffp, report.totals.ffn));
    let binned: u64 = report.distance_bins.iter().map(|b| b.ftp).sum();
    assert_eq!(binned, ftp);
}

#[test]
fn scene_filter_is_idempotent_on_fixture() {
    let scenes = read_frames(&fixture("scene_filter.jsonl")).unwrap();
    let f = SceneFilter::default();
    let cfg = ContourConfig::ego_3d();
    let once = filter_scenes(&scenes, &f, "car", &cfg, 2.5).unwrap();
    let twice = filter_scenes(&once, &f, "car", &cfg, 2.5).unwrap();
    assert_eq!(once, twice);
    let ids: Vec<&str> = once.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, ["sel-near-yawed", "sel-approach"]);
}
