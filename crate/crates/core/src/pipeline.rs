//! End-to-end proposal pipeline: coarse scan, edge refinement in a shrunken
//! frame, segment refinement in cell units, final NMS, and clipping: plus
//! the proposal CSV interchange format.

use crate::edge_refine::{self, EdgeRefineParams};
use crate::error::{Error, Result};
use crate::geometry::{nms_keep, scale_box, Proposal, ProposalSource, Rect};
use crate::objectness::{scan, ObjectnessModel, ScanParams};
use crate::raster::{canny, to_gray, CannyParams, ColorImage};
use crate::segment_refine::{self, SegRefineParams};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::time::Instant;

/// Which refinement runs first. Edge-first is the default ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineOrder {
    EdgeThenSegment,
    SegmentThenEdge,
}

/// Complete pipeline configuration. Every field has a default, so a config
/// file may specify any subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Scoring model location; command-line flags may override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<std::path::PathBuf>,
    pub max_proposals: usize,
    pub nms_rho: f64,
    pub eval_eta: f64,
    pub enable_edge: bool,
    pub enable_seg: bool,
    pub order: RefineOrder,
    pub scan: ScanParams,
    pub edge: EdgeRefineParams,
    pub canny: CannyParams,
    pub seg: SegRefineParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: None,
            max_proposals: 1000,
            nms_rho: 0.85,
            eval_eta: 0.5,
            enable_edge: true,
            enable_seg: true,
            order: RefineOrder::EdgeThenSegment,
            scan: ScanParams::default(),
            edge: EdgeRefineParams::default(),
            canny: CannyParams::default(),
            seg: SegRefineParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_proposals >= 1
            && (0.0..=1.0).contains(&self.nms_rho)
            && (0.0..=1.0).contains(&self.eval_eta)
            && self.edge.validate()
            && self.seg.validate()
            && self.canny.low >= 0.0
            && self.canny.low <= self.canny.high;
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedModelFile("invalid pipeline configuration".into()))
        }
    }
}

/// Wall-clock seconds per stage for one image.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StageTimings {
    pub scan_s: f64,
    pub edge_s: f64,
    pub seg_s: f64,
    pub nms_s: f64,
    pub total_s: f64,
}

/// A loaded model plus configuration, ready to process images.
pub struct Pipeline {
    model: ObjectnessModel,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(model: ObjectnessModel, config: PipelineConfig) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        Ok(Self { model, config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model(&self) -> &ObjectnessModel {
        &self.model
    }

    /// Generates proposals for one image, in original-image coordinates.
    pub fn run(&self, img: &ColorImage) -> Vec<Proposal> {
        self.run_timed(img).0
    }

    /// [`Pipeline::run`] with per-stage wall-clock timings.
    ///
    /// Stage failures (an image with no detectable edges, for instance)
    /// degrade to passing the unrefined boxes through with a logged warning;
    /// the pipeline always emits proposals.
    pub fn run_timed(&self, img: &ColorImage) -> (Vec<Proposal>, StageTimings) {
        let mut times = StageTimings::default();
        let start = Instant::now();

        let gray = to_gray(img);
        let t = Instant::now();
        let mut props = scan(&gray, &self.model, &self.config.scan);
        times.scan_s = t.elapsed().as_secs_f64();

        match self.config.order {
            RefineOrder::EdgeThenSegment => {
                if self.config.enable_edge {
                    let t = Instant::now();
                    props = self.edge_stage(&gray, props);
                    times.edge_s = t.elapsed().as_secs_f64();
                }
                if self.config.enable_seg {
                    let t = Instant::now();
                    props = self.seg_stage(img, props);
                    times.seg_s = t.elapsed().as_secs_f64();
                }
            }
            RefineOrder::SegmentThenEdge => {
                if self.config.enable_seg {
                    let t = Instant::now();
                    props = self.seg_stage(img, props);
                    times.seg_s = t.elapsed().as_secs_f64();
                }
                if self.config.enable_edge {
                    let t = Instant::now();
                    props = self.edge_stage(&gray, props);
                    times.edge_s = t.elapsed().as_secs_f64();
                }
            }
        }

        let t = Instant::now();
        let mut out = nms_keep(&props, self.config.nms_rho, self.config.max_proposals);
        times.nms_s = t.elapsed().as_secs_f64();

        // clip to the image frame; refinement in resized frames can overshoot
        // by sub-pixel amounts after rescaling
        let frame = Rect::new(0.0, 0.0, img.width() as f64, img.height() as f64);
        for p in &mut out {
            p.rect = p.rect.clip(&frame).unwrap_or(frame);
        }
        times.total_s = start.elapsed().as_secs_f64();
        (out, times)
    }

    /// Edge refinement in the shrunken frame: boxes are scaled in, snapped
    /// to nearest-edge extents, and scaled back.
    fn edge_stage(&self, gray: &crate::raster::GrayImage, props: Vec<Proposal>) -> Vec<Proposal> {
        let f = self.config.edge.resize_factor;
        let rw = ((gray.width() as f64 * f).round() as usize).max(1);
        let rh = ((gray.height() as f64 * f).round() as usize).max(1);
        let small = match gray.resize(rw, rh) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("edge stage skipped: resize failed: {e}");
                return props;
            }
        };
        let edges = canny(&small, &self.config.canny);
        let nmap = match edge_refine::distance_transform(&edges) {
            Ok(n) => n,
            Err(e) => {
                log::warn!("edge stage skipped: {e}");
                return props;
            }
        };
        let sx = rw as f64 / gray.width() as f64;
        let sy = rh as f64 / gray.height() as f64;
        let scaled: Vec<Proposal> =
            props.iter().map(|p| Proposal { rect: scale_box(&p.rect, sx, sy), ..*p }).collect();
        let refined = edge_refine::refine(&nmap, &scaled, &self.config.edge);
        refined
            .into_iter()
            .map(|p| Proposal { rect: scale_box(&p.rect, 1.0 / sx, 1.0 / sy), ..p })
            .collect()
    }

    /// Segment refinement in cell units of the fixed segmentation frame.
    fn seg_stage(&self, img: &ColorImage, props: Vec<Proposal>) -> Vec<Proposal> {
        let cfg = &self.config.seg;
        let grid = segment_refine::build_cell_grid(img, cfg.frame_w, cfg.frame_h, cfg.cell_px);
        let labeling = segment_refine::segment_graph(&grid, cfg.k, cfg.min_size);
        let sx = grid.grid_w() as f64 / img.width() as f64;
        let sy = grid.grid_h() as f64 / img.height() as f64;
        let scaled: Vec<Proposal> =
            props.iter().map(|p| Proposal { rect: scale_box(&p.rect, sx, sy), ..*p }).collect();
        let expanded = segment_refine::expand(&labeling, &scaled, &cfg.delta_set);
        expanded
            .into_iter()
            .map(|p| Proposal { rect: scale_box(&p.rect, 1.0 / sx, 1.0 / sy), ..p })
            .collect()
    }
}

/// Writes the proposal CSV: header `image_id,x1,y1,x2,y2,score`, rows
/// grouped per image in the given order, sorted by score descending within
/// each image; coordinates use 2 decimals, scores 6.
pub fn write_proposals_csv(
    groups: &[(String, Vec<Proposal>)],
    mut writer: impl Write,
) -> Result<()> {
    writer.write_all(b"image_id,x1,y1,x2,y2,score\n")?;
    for (image_id, props) in groups {
        let mut sorted = props.clone();
        sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
        for p in &sorted {
            writeln!(
                writer,
                "{},{:.2},{:.2},{:.2},{:.2},{:.6}",
                image_id, p.rect.x1, p.rect.y1, p.rect.x2, p.rect.y2, p.score
            )?;
        }
    }
    Ok(())
}

/// Reads the CSV written by [`write_proposals_csv`]. Loaded proposals carry
/// the `external` source tag.
pub fn read_proposals_csv(reader: impl BufRead) -> Result<crate::evaluation::ProposalIndex> {
    let mut index = crate::evaluation::ProposalIndex::new();
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "image_id,x1,y1,x2,y2,score" {
        return Err(Error::MalformedAnnotation("missing proposal CSV header".into()));
    }
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::MalformedAnnotation(format!("row {}: expected 6 fields", ln + 2)));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::MalformedAnnotation(format!("row {}: {e}", ln + 2)))
        };
        let (x1, y1, x2, y2) = (num(parts[1])?, num(parts[2])?, num(parts[3])?, num(parts[4])?);
        if x2 < x1 || y2 < y1 {
            return Err(Error::MalformedAnnotation(format!("row {}: invalid box", ln + 2)));
        }
        index
            .entry(parts[0].to_string())
            .or_default()
            .push(Proposal::new(Rect::new(x1, y1, x2, y2), num(parts[5])?, ProposalSource::External));
    }
    Ok(index)
}
