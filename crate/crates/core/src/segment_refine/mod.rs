//! Segment-based proposal refinement: box expansion to the tight union of
//! the box with every segment it sufficiently covers, plus the exhaustive
//! quantized search for the threshold set.

mod graph;

pub use graph::{build_cell_grid, segment_graph, CellGrid, Segment, SegmentLabeling, SegmentRun};

use crate::error::{Error, Result};
use crate::geometry::{iou, Proposal, ProposalSource, Rect};

/// Segmentation-stage parameters.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegRefineParams {
    /// Sorted distinct expansion thresholds in (0, 1).
    pub delta_set: Vec<f64>,
    /// Graph segmentation scale constant.
    pub k: f64,
    /// Minimum component size, in cells.
    pub min_size: usize,
    /// Fixed segmentation frame, pixels.
    pub frame_w: usize,
    pub frame_h: usize,
    /// Cell side, pixels.
    pub cell_px: usize,
}

impl Default for SegRefineParams {
    fn default() -> Self {
        Self { delta_set: vec![0.1, 0.3, 0.6], k: 200.0, min_size: 10, frame_w: 400, frame_h: 360, cell_px: 4 }
    }
}

impl SegRefineParams {
    pub fn validate(&self) -> bool {
        !self.delta_set.is_empty()
            && self.delta_set.iter().all(|d| 0.0 < *d && *d < 1.0)
            && self.delta_set.windows(2).all(|w| w[0] < w[1])
            && self.k > 0.0
            && self.cell_px >= 1
            && self.frame_w.is_multiple_of(self.cell_px)
            && self.frame_h.is_multiple_of(self.cell_px)
    }
}

/// Fraction of the segment's cells whose centers fall inside `r`
/// (`|A(s) intersect A(r)| / |A(s)|`), computed by clipping each run against the
/// box's column range.
pub fn seg_overlap(seg: &Segment, r: &Rect) -> f64 {
    debug_assert!(seg.area_cells > 0);
    let col_lo = (r.x1 - 0.5).ceil().max(0.0);
    let col_hi = (r.x2 - 0.5).floor();
    if col_hi < col_lo {
        return 0.0;
    }
    let mut inside = 0u64;
    for run in &seg.runs {
        let row_center = run.row as f64 + 0.5;
        if row_center < r.y1 || row_center > r.y2 {
            continue;
        }
        let lo = col_lo.max(run.col_start as f64) as u32;
        let hi = col_hi.min(run.col_end as f64) as u32;
        if hi >= lo {
            inside += (hi - lo + 1) as u64;
        }
    }
    inside as f64 / seg.area_cells as f64
}

/// Expands each proposal once per threshold: for `delta` the selected
/// segments are those with `seg_overlap >= delta`, and the output box is the
/// tight hull of the proposal with the selected segments' bounding boxes.
///
/// Proposals must already be in cell units. Output has `props.len() *
/// delta_set.len()` entries, grouped per input proposal in threshold order,
/// each keeping the parent's score. One overlap evaluation per (box,
/// segment) pair is shared by all thresholds.
pub fn expand(labeling: &SegmentLabeling, props: &[Proposal], delta_set: &[f64]) -> Vec<Proposal> {
    let mut out = Vec::with_capacity(props.len() * delta_set.len());
    let mut acc: Vec<Rect> = Vec::with_capacity(delta_set.len());
    for p in props {
        acc.clear();
        acc.resize(delta_set.len(), p.rect);
        for seg in labeling.segments() {
            let ov = seg_overlap(seg, &p.rect);
            if ov <= 0.0 {
                continue;
            }
            for (a, &delta) in acc.iter_mut().zip(delta_set) {
                if ov >= delta {
                    *a = a.hull(&seg.bbox);
                }
            }
        }
        for &a in &acc {
            out.push(Proposal::new(a, p.score, ProposalSource::SegRefined));
        }
    }
    out
}

/// One image prepared for the threshold search: labeling plus proposals and
/// ground truth boxes in cell units.
#[derive(Clone, Debug)]
pub struct DeltaScene {
    pub labeling: SegmentLabeling,
    pub proposals: Vec<Rect>,
    pub ground_truth: Vec<DeltaGt>,
}

/// Ground-truth box with its class, for the per-class overlap statistics in
/// the search table.
#[derive(Clone, Copy, Debug)]
pub struct DeltaGt {
    pub rect: Rect,
    pub class_id: u32,
}

/// One row of the exhaustive search table.
#[derive(Clone, Copy, Debug)]
pub struct DeltaRow {
    /// Subset encoding: bit `i` selects threshold `0.1 * (i + 1)`.
    pub mask: u16,
    pub loss: usize,
    pub dr_at_eta: f64,
    pub mabo: f64,
}

/// Search result: the minimizing subset, its loss, and the full table.
#[derive(Clone, Debug)]
pub struct DeltaSearch {
    pub best: Vec<f64>,
    pub best_loss: usize,
    /// All 511 non-empty subsets in ascending mask order.
    pub table: Vec<DeltaRow>,
}

pub const DELTA_CANDIDATES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Exhaustive 0/1-loss minimization over every non-empty subset of the nine
/// candidate thresholds. Ties break toward the smaller subset, then the
/// lexicographically smaller set.
///
/// Expanding with one threshold is independent of the rest of the set, so a
/// subset's output is the union of its singleton outputs; the search
/// precomputes per ground truth the best overlap under each singleton and
/// evaluates all 511 subsets from those nine numbers.
pub fn learn_delta(scenes: &[DeltaScene], eta: f64) -> Result<DeltaSearch> {
    let total_gts: usize = scenes.iter().map(|s| s.ground_truth.len()).sum();
    if scenes.is_empty() || total_gts == 0 {
        return Err(Error::EmptyDataset);
    }

    // best overlap per (ground truth, singleton threshold)
    let mut best = vec![[0f64; 9]; total_gts];
    let mut classes = vec![0u32; total_gts];
    let mut gi = 0;
    for scene in scenes {
        let props: Vec<Proposal> =
            scene.proposals.iter().map(|r| Proposal::new(*r, 0.0, ProposalSource::External)).collect();
        let expanded = expand(&scene.labeling, &props, &DELTA_CANDIDATES);
        for gt in &scene.ground_truth {
            let slot = &mut best[gi];
            for (pi, _) in scene.proposals.iter().enumerate() {
                for di in 0..9 {
                    let cand = &expanded[pi * 9 + di];
                    let ov = iou(&cand.rect, &gt.rect);
                    if ov > slot[di] {
                        slot[di] = ov;
                    }
                }
            }
            classes[gi] = gt.class_id;
            gi += 1;
        }
    }

    let mut table = Vec::with_capacity(511);
    for mask in 1u16..512 {
        let mut loss = 0usize;
        let mut per_class: std::collections::BTreeMap<u32, (f64, usize)> = Default::default();
        for (slot, &class) in best.iter().zip(&classes) {
            let mut bo = 0f64;
            for di in 0..9 {
                if mask >> di & 1 == 1 && slot[di] > bo {
                    bo = slot[di];
                }
            }
            if bo < eta {
                loss += 1;
            }
            let e = per_class.entry(class).or_insert((0.0, 0));
            e.0 += bo;
            e.1 += 1;
        }
        let mabo = per_class.values().map(|(s, n)| s / *n as f64).sum::<f64>() / per_class.len() as f64;
        table.push(DeltaRow { mask, loss, dr_at_eta: 1.0 - loss as f64 / total_gts as f64, mabo });
    }

    // tie-break order: fewer thresholds first, then lexicographic on values;
    // scanning in that order and keeping the first minimum is deterministic
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by_key(|&i| {
        let mask = table[i].mask;
        let elems: Vec<u16> = (0..9).filter(|d| mask >> d & 1 == 1).collect();
        (elems.len(), elems)
    });
    let mut chosen = order[0];
    for &i in &order {
        if table[i].loss < table[chosen].loss {
            chosen = i;
        }
    }
    let best_mask = table[chosen].mask;
    let best = (0..9).filter(|d| best_mask >> d & 1 == 1).map(|d| DELTA_CANDIDATES[d]).collect();
    Ok(DeltaSearch { best, best_loss: table[chosen].loss, table })
}
