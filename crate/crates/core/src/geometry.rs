//! Boxes, overlap measures, and non-maximal suppression.
//!
//! Rectangles use the continuous convention: a box is the region
//! `[x1, x2] x [y1, y2]` with `area = (x2 - x1) * (y2 - y1)`, so a degenerate
//! box has zero area. Inclusive integer annotations (VOC style) are converted
//! at ingestion by using `(xmax + 1, ymax + 1)` as the upper corner.

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// Invariant: `x1 <= x2` and `y1 <= y2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Rect {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x1 <= x2 && y1 <= y2, "invalid rect ({x1},{y1},{x2},{y2})");
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Smallest rectangle containing `self` and `other`.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains(&self, other: &Rect) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    /// Intersection clipped against `other`; `None` when the boxes are disjoint.
    pub fn clip(&self, other: &Rect) -> Option<Rect> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        if x1 <= x2 && y1 <= y2 {
            Some(Rect { x1, y1, x2, y2 })
        } else {
            None
        }
    }
}

/// Intersection-over-union of two boxes.
///
/// Returns 0 when the intersection is empty or both areas are zero.
///
/// ```
/// use boxprop_core::geometry::{iou, Rect};
/// let a = Rect::new(0.0, 0.0, 10.0, 10.0);
/// let b = Rect::new(5.0, 0.0, 15.0, 10.0);
/// assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
/// ```
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Coordinate-wise linear interpolation `(1 - gamma) * a + gamma * b`.
pub fn blend(a: &Rect, b: &Rect, gamma: f64) -> Rect {
    let lerp = |p: f64, q: f64| (1.0 - gamma) * p + gamma * q;
    Rect {
        x1: lerp(a.x1, b.x1),
        y1: lerp(a.y1, b.y1),
        x2: lerp(a.x2, b.x2),
        y2: lerp(a.y2, b.y2),
    }
}

/// Multiplies all coordinates componentwise; maps boxes between resized
/// coordinate frames.
pub fn scale_box(r: &Rect, sx: f64, sy: f64) -> Rect {
    Rect {
        x1: r.x1 * sx,
        y1: r.y1 * sy,
        x2: r.x2 * sx,
        y2: r.y2 * sy,
    }
}

/// Where a proposal came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    /// Raw output of the coarse window scan.
    Coarse,
    EdgeRefined,
    SegRefined,
    /// Loaded from a file rather than generated here.
    External,
}

/// A candidate object box with its calibrated objectness score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub rect: Rect,
    pub score: f64,
    pub source: ProposalSource,
}

impl Proposal {
    pub fn new(rect: Rect, score: f64, source: ProposalSource) -> Self {
        debug_assert!(score.is_finite(), "proposal score must be finite");
        Self { rect, score, source }
    }
}

/// Greedy non-maximal suppression.
///
/// Proposals are ranked by score descending (stable, so score ties keep
/// input order); the top proposal is kept and every remaining proposal with
/// `iou >= rho` against it is removed, repeatedly. Output preserves the kept
/// (descending) order.
pub fn nms(props: &[Proposal], rho: f64) -> Vec<Proposal> {
    nms_keep(props, rho, usize::MAX)
}

/// [`nms`] that stops once `limit` proposals are kept. Equivalent to running
/// full suppression and truncating, since the kept order is score order.
pub fn nms_keep(props: &[Proposal], rho: f64, limit: usize) -> Vec<Proposal> {
    let mut order: Vec<usize> = (0..props.len()).collect();
    order.sort_by(|&a, &b| props[b].score.total_cmp(&props[a].score));

    let mut kept: Vec<Proposal> = Vec::new();
    for &i in &order {
        if kept.len() >= limit {
            break;
        }
        let cand = &props[i];
        if kept.iter().all(|k| iou(&k.rect, &cand.rect) < rho) {
            kept.push(*cand);
        }
    }
    kept
}
