//! Proposal-quality metrics: detection recall, best-overlap statistics,
//! recall-overlap curves, plus ground-truth ingestion and a synthetic-scene
//! generator for desk-scale evaluation.

mod annotations;
mod synth;

pub use annotations::{parse_gt_jsonl, parse_voc_xml, write_gt_jsonl, GroundTruth};
pub use synth::{synth_scene, SynthParams};

use crate::error::{Error, Result};
use crate::geometry::{iou, Proposal};
use serde::Serialize;
use std::collections::BTreeMap;

/// Proposals grouped by image id. `BTreeMap` keeps reports deterministic.
pub type ProposalIndex = BTreeMap<String, Vec<Proposal>>;

/// Truncates to the top `k` proposals by score (stable, so score ties at the
/// cutoff keep input order).
pub fn top_k(props: &[Proposal], k: usize) -> Vec<Proposal> {
    let mut sorted = props.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    sorted.truncate(k);
    sorted
}

/// Best overlap: maximum IoU between the ground truth and any proposal of
/// its image; 0 without proposals.
pub fn best_overlap(gt: &GroundTruth, props: &[Proposal]) -> f64 {
    props.iter().map(|p| iou(&p.rect, &gt.rect)).fold(0.0, f64::max)
}

fn best_overlaps(gts: &[GroundTruth], props: &ProposalIndex, k: usize) -> Vec<f64> {
    let truncated: BTreeMap<&str, Vec<Proposal>> =
        props.iter().map(|(id, ps)| (id.as_str(), top_k(ps, k))).collect();
    let empty: Vec<Proposal> = Vec::new();
    gts.iter()
        .map(|gt| best_overlap(gt, truncated.get(gt.image_id.as_str()).unwrap_or(&empty)))
        .collect()
}

/// Detection recall: the fraction of ground truths matched by some proposal
/// with IoU at least `eta`, using each image's top `k` proposals.
pub fn detection_recall(gts: &[GroundTruth], props: &ProposalIndex, eta: f64, k: usize) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    let hits = best_overlaps(gts, props, k).iter().filter(|&&bo| bo >= eta).count();
    hits as f64 / gts.len() as f64
}

/// Per-class average best overlap and its unweighted class mean.
pub fn abo_mabo(
    gts: &[GroundTruth],
    props: &ProposalIndex,
    k: usize,
) -> Result<(BTreeMap<String, f64>, f64)> {
    if gts.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let bos = best_overlaps(gts, props, k);
    let mut per_class: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (gt, bo) in gts.iter().zip(&bos) {
        let e = per_class.entry(gt.class_name.clone()).or_insert((0.0, 0));
        e.0 += bo;
        e.1 += 1;
    }
    let abo: BTreeMap<String, f64> =
        per_class.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect();
    let mabo = abo.values().sum::<f64>() / abo.len() as f64;
    Ok((abo, mabo))
}

/// `(eta, recall)` per grid point; recall is non-increasing in `eta`.
pub fn recall_overlap_curve(
    gts: &[GroundTruth],
    props: &ProposalIndex,
    k: usize,
    eta_grid: &[f64],
) -> Vec<(f64, f64)> {
    debug_assert!(eta_grid.windows(2).all(|w| w[0] <= w[1]), "eta grid must be sorted");
    if gts.is_empty() {
        return eta_grid.iter().map(|&eta| (eta, 0.0)).collect();
    }
    let bos = best_overlaps(gts, props, k);
    eta_grid
        .iter()
        .map(|&eta| {
            let hits = bos.iter().filter(|&&bo| bo >= eta).count();
            (eta, hits as f64 / gts.len() as f64)
        })
        .collect()
}

/// Recall at one `(eta, budget)` operating point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DrPoint {
    pub eta: f64,
    pub budget: usize,
    pub value: f64,
}

/// Full metrics report. Serialized as JSON with keys `dr`, `abo`, `mabo`,
/// and `curve`; the per-object best overlaps stay in memory only.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub dr: Vec<DrPoint>,
    pub abo: BTreeMap<String, f64>,
    pub mabo: f64,
    pub curve: Vec<(f64, f64)>,
    #[serde(skip)]
    pub bo: Vec<f64>,
}

/// Options for [`build_report`].
#[derive(Clone, Debug)]
pub struct ReportParams {
    pub etas: Vec<f64>,
    pub budgets: Vec<usize>,
    /// Budget used for ABO/MABO and the recall-overlap curve.
    pub curve_budget: usize,
    pub curve_grid: Vec<f64>,
    pub include_difficult: bool,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            etas: vec![0.5, 0.7],
            budgets: vec![1, 10, 100, 1000],
            curve_budget: 1000,
            curve_grid: (0..=10).map(|i| 0.5 + i as f64 * 0.05).collect(),
            include_difficult: true,
        }
    }
}

pub fn build_report(gts: &[GroundTruth], props: &ProposalIndex, params: &ReportParams) -> Result<MetricsReport> {
    let filtered: Vec<GroundTruth> = gts
        .iter()
        .filter(|g| params.include_difficult || !g.difficult)
        .cloned()
        .collect();
    if filtered.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let mut dr = Vec::new();
    for &eta in &params.etas {
        for &budget in &params.budgets {
            dr.push(DrPoint { eta, budget, value: detection_recall(&filtered, props, eta, budget) });
        }
    }
    let (abo, mabo) = abo_mabo(&filtered, props, params.curve_budget)?;
    let curve = recall_overlap_curve(&filtered, props, params.curve_budget, &params.curve_grid);
    let bo = best_overlaps(&filtered, props, params.curve_budget);
    Ok(MetricsReport { dr, abo, mabo, curve, bo })
}
