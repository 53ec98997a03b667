//! Edge-based proposal refinement.
//!
//! Each box is repeatedly blended toward the tight extent of the nearest
//! edge points of the pixels it covers, stopping early once consecutive
//! boxes overlap enough. The blend weight is learned by quantized greedy
//! search over iterations.

mod distance;

pub use distance::{distance_transform, NearestEdgeMap};

use crate::error::{Error, Result};
use crate::geometry::{blend, iou, Proposal, ProposalSource, Rect};

/// Refinement parameters.
///
/// `gammas` holds the blend weight per iteration; iterations past the end of
/// the list reuse the final entry, so a single element behaves as a constant
/// weight.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EdgeRefineParams {
    pub gammas: Vec<f64>,
    pub max_iters: usize,
    /// Overlap between consecutive boxes that counts as converged.
    pub epsilon: f64,
    /// Per-axis image shrink factor applied before edge extraction.
    pub resize_factor: f64,
}

impl Default for EdgeRefineParams {
    fn default() -> Self {
        Self { gammas: vec![1.0], max_iters: 3, epsilon: 0.95, resize_factor: 1.0 / 3.0 }
    }
}

impl EdgeRefineParams {
    pub fn with_gamma(gamma: f64) -> Self {
        Self { gammas: vec![gamma], ..Self::default() }
    }

    pub fn gamma_at(&self, t: usize) -> f64 {
        *self.gammas.get(t).unwrap_or_else(|| self.gammas.last().expect("gammas non-empty"))
    }

    pub fn validate(&self) -> bool {
        !self.gammas.is_empty()
            && self.gammas.iter().all(|g| (0.0..=1.0).contains(g))
            && self.max_iters >= 1
            && (0.0..=1.0).contains(&self.epsilon)
            && self.resize_factor > 0.0
            && self.resize_factor <= 1.0
    }
}

/// Tight box of the nearest edge points of every pixel covered by `r`.
///
/// Pixel coverage is all integer pixel coordinates inside `r` clipped to the
/// image; the output spans the min/max of their nearest-point coordinates.
pub fn box_nearest_extent(nmap: &NearestEdgeMap, r: &Rect) -> Result<Rect> {
    box_nearest_extent_counted(nmap, r).map(|(rect, _)| rect)
}

/// [`box_nearest_extent`] plus the number of pixels visited, for complexity
/// instrumentation.
pub fn box_nearest_extent_counted(nmap: &NearestEdgeMap, r: &Rect) -> Result<(Rect, u64)> {
    let x_lo = r.x1.ceil().max(0.0) as i64;
    let x_hi = r.x2.floor().min((nmap.width() - 1) as f64) as i64;
    let y_lo = r.y1.ceil().max(0.0) as i64;
    let y_hi = r.y2.floor().min((nmap.height() - 1) as f64) as i64;
    if x_lo > x_hi || y_lo > y_hi {
        return Err(Error::EmptyIntersection);
    }
    let (mut min_x, mut min_y) = (u32::MAX, u32::MAX);
    let (mut max_x, mut max_y) = (0u32, 0u32);
    let (plane_x, plane_y) = nmap.planes();
    let w = nmap.width();
    for y in y_lo..=y_hi {
        let a = y as usize * w + x_lo as usize;
        let b = y as usize * w + x_hi as usize + 1;
        for &nx in &plane_x[a..b] {
            min_x = min_x.min(nx);
            max_x = max_x.max(nx);
        }
        for &ny in &plane_y[a..b] {
            min_y = min_y.min(ny);
            max_y = max_y.max(ny);
        }
    }
    let visits = (x_hi - x_lo + 1) as u64 * (y_hi - y_lo + 1) as u64;
    Ok((Rect::new(min_x as f64, min_y as f64, max_x as f64, max_y as f64), visits))
}

/// Iteration counters reported by [`refine_counted`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    /// Total pixels visited by extent scans, summed over boxes and iterations.
    pub pixel_visits: u64,
    /// Extent scans performed (one per executed iteration per box).
    pub iterations: u64,
}

/// Refines every proposal independently; geometry changes, scores and order
/// never do. Boxes whose extent cannot be computed pass through unchanged
/// and keep their original source tag as the flag.
pub fn refine(nmap: &NearestEdgeMap, props: &[Proposal], params: &EdgeRefineParams) -> Vec<Proposal> {
    refine_counted(nmap, props, params).0
}

pub fn refine_counted(
    nmap: &NearestEdgeMap,
    props: &[Proposal],
    params: &EdgeRefineParams,
) -> (Vec<Proposal>, RefineStats) {
    assert!(params.validate(), "invalid refinement parameters");
    let mut stats = RefineStats::default();
    let out = props
        .iter()
        .map(|p| {
            let mut r = p.rect;
            for t in 0..params.max_iters {
                let (extent, visits) = match box_nearest_extent_counted(nmap, &r) {
                    Ok(v) => v,
                    // pass the box through unchanged, original source tag intact
                    Err(_) => return *p,
                };
                stats.pixel_visits += visits;
                stats.iterations += 1;
                let next = blend(&r, &extent, params.gamma_at(t));
                let converged = iou(&r, &next) >= params.epsilon;
                r = next;
                if converged {
                    break;
                }
            }
            Proposal::new(r, p.score, ProposalSource::EdgeRefined)
        })
        .collect();
    (out, stats)
}

/// One training image prepared for the blend-weight search: everything is
/// expressed in the same (typically resized) frame.
#[derive(Clone, Debug)]
pub struct GammaScene {
    pub nearest: NearestEdgeMap,
    pub proposals: Vec<Rect>,
    pub ground_truth: Vec<Rect>,
}

/// Result of [`learn_gamma`]: the chosen weight and the achieved minimum
/// loss per iteration, plus the full 101-point loss grid per iteration.
#[derive(Clone, Debug)]
pub struct GammaSearch {
    pub gammas: Vec<f64>,
    pub losses: Vec<usize>,
    pub grid: Vec<Vec<usize>>,
}

/// Greedy per-iteration search of the blend weight over the quantized grid
/// `{0.00, 0.01, ..., 1.00}`.
///
/// At each iteration the 0/1 loss (ground truths left without any box of
/// overlap at least `eta`) is evaluated for every candidate weight on the
/// boxes advanced one step from the current state; the minimizer (ties to
/// the smaller weight) advances all boxes cumulatively.
pub fn learn_gamma(scenes: &[GammaScene], eta: f64, iterations: usize) -> Result<GammaSearch> {
    let total_gts: usize = scenes.iter().map(|s| s.ground_truth.len()).sum();
    if scenes.is_empty() || total_gts == 0 {
        return Err(Error::EmptyDataset);
    }

    let mut current: Vec<Vec<Rect>> = scenes.iter().map(|s| s.proposals.clone()).collect();
    let mut gammas = Vec::with_capacity(iterations);
    let mut losses = Vec::with_capacity(iterations);
    let mut grid = Vec::with_capacity(iterations);

    for _ in 0..iterations {
        // one extent per box, shared by all candidate weights
        let extents: Vec<Vec<Option<Rect>>> = scenes
            .iter()
            .zip(&current)
            .map(|(s, boxes)| {
                boxes.iter().map(|b| box_nearest_extent(&s.nearest, b).ok()).collect()
            })
            .collect();

        let mut row = Vec::with_capacity(101);
        for step in 0..=100u32 {
            let gamma = step as f64 / 100.0;
            let mut loss = 0usize;
            for (si, scene) in scenes.iter().enumerate() {
                for gt in &scene.ground_truth {
                    let hit = current[si].iter().zip(&extents[si]).any(|(b, ext)| {
                        let next = match ext {
                            Some(e) => blend(b, e, gamma),
                            None => *b,
                        };
                        iou(&next, gt) >= eta
                    });
                    if !hit {
                        loss += 1;
                    }
                }
            }
            row.push(loss);
        }

        let (best_idx, &best_loss) =
            row.iter().enumerate().min_by_key(|&(i, &l)| (l, i)).expect("grid non-empty");
        let best_gamma = best_idx as f64 / 100.0;
        for (boxes, exts) in current.iter_mut().zip(&extents) {
            for (b, ext) in boxes.iter_mut().zip(exts) {
                if let Some(e) = ext {
                    *b = blend(b, e, best_gamma);
                }
            }
        }
        gammas.push(best_gamma);
        losses.push(best_loss);
        grid.push(row);
    }

    Ok(GammaSearch { gammas, losses, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::EdgeMap;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Boundary ring of [x1, x2] x [y1, y2] in pixel coordinates.
    fn ring_edges(w: usize, h: usize, x1: usize, y1: usize, x2: usize, y2: usize) -> EdgeMap {
        let mut mask = vec![false; w * h];
        for x in x1..=x2 {
            mask[y1 * w + x] = true;
            mask[y2 * w + x] = true;
        }
        for y in y1..=y2 {
            mask[y * w + x1] = true;
            mask[y * w + x2] = true;
        }
        EdgeMap::new(w, h, mask)
    }

    fn prop(r: Rect) -> Proposal {
        Proposal::new(r, 0.5, ProposalSource::Coarse)
    }

    #[test]
    fn extent_of_single_pixel_box_is_degenerate() {
        let mut mask = vec![false; 100];
        mask[2 * 10 + 7] = true; // edge at (7, 2)
        let nmap = distance_transform(&EdgeMap::new(10, 10, mask)).unwrap();
        // covers the single integer pixel (5, 8)
        let ext = box_nearest_extent(&nmap, &Rect::new(4.6, 7.7, 5.4, 8.3)).unwrap();
        assert_eq!(ext, Rect::new(7.0, 2.0, 7.0, 2.0));
    }

    #[test]
    fn extent_of_box_containing_ring_is_the_ring_bbox() {
        let edges = ring_edges(40, 40, 10, 10, 20, 30);
        let nmap = distance_transform(&edges).unwrap();
        let ext = box_nearest_extent(&nmap, &Rect::new(5.0, 5.0, 25.0, 35.0)).unwrap();
        assert_eq!(ext, Rect::new(10.0, 10.0, 20.0, 30.0));
    }

    #[test]
    fn extent_outside_image_errors() {
        let mut mask = vec![false; 16];
        mask[0] = true;
        let nmap = distance_transform(&EdgeMap::new(4, 4, mask)).unwrap();
        assert!(matches!(
            box_nearest_extent(&nmap, &Rect::new(10.0, 10.0, 12.0, 12.0)),
            Err(Error::EmptyIntersection)
        ));
    }

    #[test]
    fn extent_matches_bruteforce_on_random_cases() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..40 {
            let (w, h) = (rng.gen_range(4..32), rng.gen_range(4..32));
            let mut mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.08)).collect();
            mask[0] = true;
            let edges = EdgeMap::new(w, h, mask);
            let nmap = distance_transform(&edges).unwrap();
            for _ in 0..20 {
                let x1 = rng.gen_range(-2.0..w as f64);
                let y1 = rng.gen_range(-2.0..h as f64);
                let r = Rect::new(x1, y1, x1 + rng.gen_range(0.5..w as f64), y1 + rng.gen_range(0.5..h as f64));
                let got = box_nearest_extent(&nmap, &r);
                // oracle: direct min/max over covered pixel centers
                let xs = (r.x1.ceil().max(0.0) as i64)..=(r.x2.floor().min(w as f64 - 1.0) as i64);
                let ys = (r.y1.ceil().max(0.0) as i64)..=(r.y2.floor().min(h as f64 - 1.0) as i64);
                let mut pts = Vec::new();
                if r.x2 >= 0.0 && r.y2 >= 0.0 {
                    for y in ys.clone() {
                        for x in xs.clone() {
                            if x >= 0 && y >= 0 {
                                pts.push(nmap.nearest(x as usize, y as usize));
                            }
                        }
                    }
                }
                match (got, pts.is_empty()) {
                    (Err(Error::EmptyIntersection), true) => {}
                    (Ok(ext), false) => {
                        let want = Rect::new(
                            pts.iter().map(|p| p.0).min().unwrap() as f64,
                            pts.iter().map(|p| p.1).min().unwrap() as f64,
                            pts.iter().map(|p| p.0).max().unwrap() as f64,
                            pts.iter().map(|p| p.1).max().unwrap() as f64,
                        );
                        assert_eq!(ext, want);
                    }
                    (res, empty) => panic!("mismatch: {res:?} empty={empty}"),
                }
            }
        }
    }

    #[test]
    fn ring_case_converges_in_one_step_with_early_break() {
        let edges = ring_edges(40, 40, 10, 10, 20, 30);
        let nmap = distance_transform(&edges).unwrap();
        // inflated initial box strictly containing the ring
        let start = prop(Rect::new(4.0, 2.0, 28.0, 38.0));
        let params = EdgeRefineParams { gammas: vec![1.0], max_iters: 3, epsilon: 0.95, resize_factor: 1.0 };
        let (out, stats) = refine_counted(&nmap, &[start], &params);
        assert_eq!(out[0].rect, Rect::new(10.0, 10.0, 20.0, 30.0));
        assert_eq!(out[0].score, 0.5);
        assert_eq!(out[0].source, ProposalSource::EdgeRefined);
        // iteration 1 reaches the ring bbox; iteration 2 sees iou = 1 >= 0.95
        // and breaks, so exactly two extent scans ran
        assert_eq!(stats.iterations, 2);
    }

    #[test]
    fn gamma_zero_is_identity() {
        let edges = ring_edges(30, 30, 5, 5, 20, 20);
        let nmap = distance_transform(&edges).unwrap();
        let props: Vec<Proposal> =
            [(1.0, 1.0, 9.0, 9.0), (3.0, 8.0, 28.0, 24.0)].iter().map(|&(a, b, c, d)| prop(Rect::new(a, b, c, d))).collect();
        let params = EdgeRefineParams { gammas: vec![0.0], max_iters: 3, epsilon: 0.95, resize_factor: 1.0 };
        let out = refine(&nmap, &props, &params);
        for (o, p) in out.iter().zip(&props) {
            assert_eq!(o.rect, p.rect);
        }
    }

    #[test]
    fn epsilon_zero_breaks_after_first_iteration() {
        let edges = ring_edges(30, 30, 5, 5, 20, 20);
        let nmap = distance_transform(&edges).unwrap();
        let props = vec![prop(Rect::new(2.0, 2.0, 25.0, 25.0)), prop(Rect::new(6.0, 6.0, 12.0, 19.0))];
        let params = EdgeRefineParams { gammas: vec![0.7], max_iters: 5, epsilon: 0.0, resize_factor: 1.0 };
        let (_, stats) = refine_counted(&nmap, &props, &params);
        assert_eq!(stats.iterations, props.len() as u64);
    }

    #[test]
    fn failed_boxes_pass_through_with_source_flag() {
        let edges = ring_edges(30, 30, 5, 5, 20, 20);
        let nmap = distance_transform(&edges).unwrap();
        let outside = prop(Rect::new(100.0, 100.0, 120.0, 120.0));
        let inside = prop(Rect::new(2.0, 2.0, 25.0, 25.0));
        let out = refine(&nmap, &[outside, inside], &EdgeRefineParams::with_gamma(1.0));
        assert_eq!(out.len(), 2);
        // the failing box is unchanged and keeps its original source tag
        assert_eq!(out[0].rect, outside.rect);
        assert_eq!(out[0].source, ProposalSource::Coarse);
        assert_eq!(out[1].source, ProposalSource::EdgeRefined);
    }

    #[test]
    fn refinement_preserves_count_order_and_scores() {
        let mut rng = StdRng::seed_from_u64(31);
        let mut mask: Vec<bool> = (0..50 * 50).map(|_| rng.gen_bool(0.05)).collect();
        mask[60] = true;
        let nmap = distance_transform(&EdgeMap::new(50, 50, mask)).unwrap();
        let props: Vec<Proposal> = (0..30)
            .map(|i| {
                let x1 = rng.gen_range(-5.0..45.0);
                let y1 = rng.gen_range(-5.0..45.0);
                Proposal::new(
                    Rect::new(x1, y1, x1 + rng.gen_range(1.0..20.0), y1 + rng.gen_range(1.0..20.0)),
                    i as f64 * 0.1,
                    ProposalSource::Coarse,
                )
            })
            .collect();
        let out = refine(&nmap, &props, &EdgeRefineParams::default());
        assert_eq!(out.len(), props.len());
        for (o, p) in out.iter().zip(&props) {
            assert_eq!(o.score, p.score);
        }
    }

    /// Refinement cost is exactly the pixels visited by its extent scans;
    /// replaying the update rule reproduces both the boxes and the counter.
    #[test]
    fn pixel_visit_counter_matches_replay() {
        let edges = ring_edges(60, 45, 12, 9, 40, 30);
        let nmap = distance_transform(&edges).unwrap();
        let props = vec![prop(Rect::new(3.0, 3.0, 55.0, 40.0)), prop(Rect::new(20.0, 12.0, 33.0, 26.0))];
        let params = EdgeRefineParams { gammas: vec![0.6], max_iters: 3, epsilon: 0.95, resize_factor: 1.0 };
        let (out, stats) = refine_counted(&nmap, &props, &params);

        let mut visits = 0u64;
        let mut iterations = 0u64;
        for p in &props {
            let mut r = p.rect;
            for t in 0..params.max_iters {
                let (ext, v) = box_nearest_extent_counted(&nmap, &r).unwrap();
                visits += v;
                iterations += 1;
                let next = blend(&r, &ext, params.gamma_at(t));
                let done = iou(&r, &next) >= params.epsilon;
                r = next;
                if done {
                    break;
                }
            }
        }
        assert_eq!(stats, RefineStats { pixel_visits: visits, iterations });
        assert_eq!(out.len(), props.len());
    }

    #[test]
    fn learn_gamma_zero_when_already_solved() {
        let edges = ring_edges(40, 40, 10, 10, 25, 25);
        let nmap = distance_transform(&edges).unwrap();
        let gt = Rect::new(10.0, 10.0, 25.0, 25.0);
        let scene = GammaScene { nearest: nmap, proposals: vec![gt], ground_truth: vec![gt] };
        let search = learn_gamma(&[scene], 0.9, 3).unwrap();
        assert_eq!(search.gammas, vec![0.0, 0.0, 0.0]);
        assert_eq!(search.losses, vec![0, 0, 0]);
    }

    #[test]
    fn learn_gamma_prefers_full_step_on_inflated_boxes() {
        let edges = ring_edges(60, 60, 15, 15, 40, 40);
        let nmap = distance_transform(&edges).unwrap();
        let gt = Rect::new(15.0, 15.0, 40.0, 40.0);
        // doubled box: at eta = 0.99 only the full step reaches the target
        // in one iteration (gamma = 0.99 still leaves a 1% oversize)
        let start = Rect::new(2.5, 2.5, 52.5, 52.5);
        let scene = GammaScene { nearest: nmap, proposals: vec![start], ground_truth: vec![gt] };
        let search = learn_gamma(&[scene], 0.99, 1).unwrap();
        assert_eq!(search.losses[0], 0);
        assert_eq!(search.gammas[0], 1.0);
        assert_eq!(search.grid[0][0], 1, "gamma = 0 must not solve it");
    }

    #[test]
    fn learn_gamma_losses_never_increase() {
        let mut rng = StdRng::seed_from_u64(41);
        let mut scenes = Vec::new();
        for _ in 0..5 {
            let mut mask: Vec<bool> = (0..48 * 48).map(|_| rng.gen_bool(0.04)).collect();
            mask[100] = true;
            let nmap = distance_transform(&EdgeMap::new(48, 48, mask)).unwrap();
            let proposals = (0..15)
                .map(|_| {
                    let x1 = rng.gen_range(0.0..30.0);
                    let y1 = rng.gen_range(0.0..30.0);
                    Rect::new(x1, y1, x1 + rng.gen_range(4.0..18.0), y1 + rng.gen_range(4.0..18.0))
                })
                .collect();
            let ground_truth = (0..3)
                .map(|_| {
                    let x1 = rng.gen_range(0.0..30.0);
                    let y1 = rng.gen_range(0.0..30.0);
                    Rect::new(x1, y1, x1 + rng.gen_range(6.0..16.0), y1 + rng.gen_range(6.0..16.0))
                })
                .collect();
            scenes.push(GammaScene { nearest: nmap, proposals, ground_truth });
        }
        let search = learn_gamma(&scenes, 0.6, 5).unwrap();
        for pair in search.losses.windows(2) {
            assert!(pair[1] <= pair[0], "loss rose: {:?}", search.losses);
        }
    }

    #[test]
    fn learn_gamma_empty_dataset_errors() {
        assert!(matches!(learn_gamma(&[], 0.5, 3), Err(Error::EmptyDataset)));
    }
}
