use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::stats::Summary;
use crate::metrics::{ftpr, MetricRecord, Outcome, OutcomeKind};

/// Ascending bin edges. Bins are half-open `[lo, hi)`; the last bin is
/// `[last, ∞)`. Values below the first edge fall in no bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinEdges(Vec<f64>);

impl BinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Config("bin edges must not be empty".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "bin edges must be finite and strictly increasing: {edges:?}"
            )));
        }
        Ok(BinEdges(edges))
    }

    /// 0–10, 10–20, 20–30, 30+ meters.
    pub fn distance() -> Self {
        BinEdges(vec![0.0, 10.0, 20.0, 30.0])
    }

    /// Low (< 10°), moderate (10°–30°), high (30°+).
    pub fn yaw() -> Self {
        BinEdges(vec![0.0, 10.0, 30.0])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    pub fn bounds(&self, bin: usize) -> (f64, Option<f64>) {
        (self.0[bin], self.0.get(bin + 1).copied())
    }

    pub fn label(&self, bin: usize) -> String {
        match self.bounds(bin) {
            (lo, Some(hi)) => format!("{lo}-{hi}"),
            (lo, None) => format!("{lo}+"),
        }
    }

    pub fn index_of(&self, value: f64) -> Option<usize> {
        if !(value >= self.0[0]) {
            return None;
        }
        Some(self.0.partition_point(|&e| e <= value) - 1)
    }
}

impl TryFrom<Vec<f64>> for BinEdges {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        BinEdges::new(v)
    }
}

impl From<BinEdges> for Vec<f64> {
    fn from(b: BinEdges) -> Vec<f64> {
        b.0
    }
}

/// Mean/median diagnostics of the matched pairs in one distance bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStatsBin {
    pub label: String,
    pub lo: f64,
    pub hi: Option<f64>,
    pub count: usize,
    pub tde: Option<Summary>,
    pub eod: Option<Summary>,
    pub ce: Option<Summary>,
    pub iou: Option<Summary>,
    pub cpd: Option<Summary>,
}

/// Groups records by GT distance to ego and summarizes each metric.
pub fn bin_by_distance(records: &[MetricRecord], edges: &BinEdges) -> Vec<DistanceStatsBin> {
    let mut groups: Vec<Vec<&MetricRecord>> = vec![Vec::new(); edges.len()];
    for r in records {
        if let Some(i) = edges.index_of(r.gt_to_ego) {
            groups[i].push(r);
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, group)| {
            let collect = |f: fn(&MetricRecord) -> Option<f64>| -> Option<Summary> {
                let vals: Vec<f64> = group.iter().filter_map(|r| f(r)).collect();
                Summary::of(&vals)
            };
            let (lo, hi) = edges.bounds(i);
            DistanceStatsBin {
                label: edges.label(i),
                lo,
                hi,
                count: group.len(),
                tde: collect(|r| Some(r.tde)),
                eod: collect(|r| r.eod),
                ce: collect(|r| Some(r.ce)),
                iou: collect(|r| Some(r.iou)),
                cpd: collect(|r| Some(r.cpd)),
            }
        })
        .collect()
}

/// Functional counts within one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBin {
    pub label: String,
    pub lo: f64,
    pub hi: Option<f64>,
    pub ftp: u64,
    pub ffp: u64,
    pub ffn: u64,
    pub failures: u64,
    pub ftpr: Option<f64>,
}

fn functional_bins<F>(outcomes: &[Outcome], edges: &BinEdges, key: F) -> Vec<FunctionalBin>
where
    F: Fn(&Outcome) -> Option<f64>,
{
    let mut bins: Vec<FunctionalBin> = (0..edges.len())
        .map(|i| {
            let (lo, hi) = edges.bounds(i);
            FunctionalBin {
                label: edges.label(i),
                lo,
                hi,
                ftp: 0,
                ffp: 0,
                ffn: 0,
                failures: 0,
                ftpr: None,
            }
        })
        .collect();
    for o in outcomes {
        let Some(i) = key(o).and_then(|v| edges.index_of(v)) else {
            continue;
        };
        match o.kind {
            OutcomeKind::Ftp => bins[i].ftp += 1,
            OutcomeKind::Ffp => bins[i].ffp += 1,
            OutcomeKind::Ffn => bins[i].ffn += 1,
        }
    }
    for b in &mut bins {
        b.failures = b.ffp + b.ffn;
        b.ftpr = ftpr(b.ftp, b.failures);
    }
    bins
}

/// FTP/failure counts by distance to ego (GT distance for FTP and FFN, the
/// prediction's own distance for FFP).
pub fn bin_outcomes_by_distance(outcomes: &[Outcome], edges: &BinEdges) -> Vec<FunctionalBin> {
    functional_bins(outcomes, edges, |o| Some(o.distance))
}

/// FTP/failure counts by yaw error. Only outcomes that were assigned a
/// counterpart carry a yaw error; unpaired surplus boxes fall in no bin.
/// With `max_distance`, outcomes at or beyond that range are dropped.
pub fn bin_by_yaw(outcomes: &[Outcome], edges: &BinEdges, max_distance: Option<f64>) -> Vec<FunctionalBin> {
    functional_bins(outcomes, edges, |o| match max_distance {
        Some(d) if o.distance >= d => None,
        _ => o.yaw_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rec(d: f64, v: f64) -> MetricRecord {
        MetricRecord {
            scene_id: "s".into(),
            frame_index: 0,
            gt_id: "g".into(),
            pred_id: "p".into(),
            class_label: "car".into(),
            ce: v,
            iou: 1.0 / (1.0 + v),
            cpd: 0.8 * v,
            tde: 0.5 * v,
            eod: Some(v / 100.0),
            gt_to_ego: d,
            yaw_error: v,
        }
    }

    #[test]
    fn edges_validation_and_lookup() {
        assert!(BinEdges::new(vec![]).is_err());
        assert!(BinEdges::new(vec![0.0, 0.0]).is_err());
        assert!(BinEdges::new(vec![0.0, f64::NAN]).is_err());
        let e = BinEdges::distance();
        assert_eq!(e.index_of(0.0), Some(0));
        assert_eq!(e.index_of(9.999), Some(0));
        assert_eq!(e.index_of(10.0), Some(1));
        assert_eq!(e.index_of(30.0), Some(3));
        assert_eq!(e.index_of(1e6), Some(3));
        assert_eq!(e.index_of(-1.0), None);
        assert_eq!(e.index_of(f64::NAN), None);
        assert_eq!(e.label(0), "0-10");
        assert_eq!(e.label(3), "30+");
    }

    #[test]
    fn one_record_per_bin() {
        let records = vec![rec(5.0, 1.0), rec(10.0, 2.0), rec(25.0, 3.0), rec(45.0, 4.0)];
        let bins = bin_by_distance(&records, &BinEdges::distance());
        for (b, r) in bins.iter().zip(&records) {
            assert_eq!(b.count, 1);
            let ce = b.ce.unwrap();
            assert_eq!(ce.mean, r.ce);
            assert_eq!(ce.median, r.ce);
            assert_eq!(b.tde.unwrap().mean, r.tde);
        }
    }

    #[test]
    fn empty_bins_have_no_stats() {
        let bins = bin_by_distance(&[rec(5.0, 1.0)], &BinEdges::distance());
        assert_eq!(bins[1].count, 0);
        assert!(bins[1].ce.is_none() && bins[1].eod.is_none());
    }

    /// Independent mean (running update) and median (order-statistic by
    /// counting) recomputation.
    fn oracle_stats(vals: &[f64]) -> (f64, f64) {
        let mut m = 0.0;
        for (k, v) in vals.iter().enumerate() {
            m += (v - m) / (k as f64 + 1.0);
        }
        let kth = |k: usize| -> f64 {
            *vals
                .iter()
                .find(|&&c| {
                    let below = vals.iter().filter(|&&x| x < c).count();
                    let at = vals.iter().filter(|&&x| x == c).count();
                    below <= k && k < below + at
                })
                .unwrap()
        };
        let n = vals.len();
        let med = if n % 2 == 1 { kth(n / 2) } else { (kth(n / 2 - 1) + kth(n / 2)) / 2.0 };
        (m, med)
    }

    #[test]
    fn synthetic_statistics_match_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
        let records: Vec<MetricRecord> =
            (0..100).map(|_| rec(rng.gen_range(0.0..50.0), rng.gen_range(0.0..4.0))).collect();
        let edges = BinEdges::distance();
        let bins = bin_by_distance(&records, &edges);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 100);
        for (i, b) in bins.iter().enumerate() {
            let (lo, hi) = edges.bounds(i);
            let in_bin: Vec<&MetricRecord> = records
                .iter()
                .filter(|r| r.gt_to_ego >= lo && hi.map_or(true, |h| r.gt_to_ego < h))
                .collect();
            assert_eq!(in_bin.len(), b.count);
            for (summary, f) in [
                (b.ce, (|r: &MetricRecord| r.ce) as fn(&MetricRecord) -> f64),
                (b.iou, |r| r.iou),
                (b.cpd, |r| r.cpd),
                (b.tde, |r| r.tde),
                (b.eod, |r| r.eod.unwrap()),
            ] {
                let vals: Vec<f64> = in_bin.iter().map(|r| f(r)).collect();
                let (m, med) = oracle_stats(&vals);
                let s = summary.unwrap();
                assert!((s.mean - m).abs() < 1e-9);
                assert_eq!(s.median, med);
            }
        }
    }

    fn outcome(kind: OutcomeKind, distance: f64, yaw: Option<f64>) -> Outcome {
        Outcome { kind, distance, yaw_error: yaw }
    }

    #[test]
    fn yaw_bins_all_low_and_clean() {
        let outs: Vec<Outcome> = (0..5).map(|_| outcome(OutcomeKind::Ftp, 12.0, Some(5.0))).collect();
        let bins = bin_by_yaw(&outs, &BinEdges::yaw(), Some(30.0));
        assert_eq!(bins[0].ftp, 5);
        assert_eq!(bins[0].ftpr, Some(100.0));
        assert_eq!(bins[1].ftpr, None);
    }

    #[test]
    fn yaw_bins_range_filter_and_unpaired() {
        let outs = vec![
            outcome(OutcomeKind::Ftp, 12.0, Some(5.0)),
            outcome(OutcomeKind::Ffn, 12.0, Some(45.0)),
            outcome(OutcomeKind::Ffp, 13.0, Some(45.0)),
            outcome(OutcomeKind::Ffn, 40.0, Some(45.0)),
            outcome(OutcomeKind::Ffp, 5.0, None),
        ];
        let bins = bin_by_yaw(&outs, &BinEdges::yaw(), Some(30.0));
        assert_eq!((bins[0].ftp, bins[0].failures), (1, 0));
        assert_eq!((bins[2].ffn, bins[2].ffp, bins[2].failures), (1, 1, 2));
        assert_eq!(bins[2].ftpr, Some(0.0));
        let unfiltered = bin_by_yaw(&outs, &BinEdges::yaw(), None);
        assert_eq!(unfiltered[2].ffn, 2);
    }

    #[test]
    fn distance_bins_from_outcomes() {
        let mut outs: Vec<Outcome> = (0..3212).map(|_| outcome(OutcomeKind::Ftp, 5.0, Some(1.0))).collect();
        outs.extend((0..30).map(|_| outcome(OutcomeKind::Ffn, 5.0, None)));
        outs.extend((0..28).map(|_| outcome(OutcomeKind::Ffp, 5.0, None)));
        let bins = bin_outcomes_by_distance(&outs, &BinEdges::distance());
        assert_eq!(bins[0].failures, 58);
        assert!((bins[0].ftpr.unwrap() - 98.22).abs() < 0.01);
    }
}
