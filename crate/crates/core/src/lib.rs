//! Fast object proposal generation with sequential bounding-box refinement.
//!
//! A coarse generator scores sliding windows over quantized sizes with a
//! binarized linear filter on 8x8 normed-gradient features (bitwise AND and
//! popcount in the hot loop). Two refinement stages then snap the boxes to
//! image evidence: first the tight extent of the nearest edge points of each
//! box's pixels, then the tight union with color segments the box
//! sufficiently covers. Greedy NMS prunes the merged set. The refinement
//! parameters (a blend weight and a threshold set) are learned by exhaustive
//! search over quantized parameter grids, and an evaluation harness reports
//! detection recall, best-overlap statistics, and recall-overlap curves.
//!
//! Entry points:
//! - [`pipeline::Pipeline`]: end-to-end proposal generation per image.
//! - [`objectness::train_simple`]: fit a scoring model on annotated images.
//! - [`edge_refine::learn_gamma`] / [`segment_refine::learn_delta`]: fit
//!   the refinement parameters.
//! - [`evaluation`]: metrics and ground-truth ingestion.

pub mod edge_refine;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod objectness;
pub mod pipeline;
pub mod raster;
pub mod segment_refine;

pub use error::{Error, Result};
pub use geometry::{blend, iou, nms, nms_keep, scale_box, Proposal, ProposalSource, Rect};
pub use pipeline::{Pipeline, PipelineConfig, RefineOrder, StageTimings};
pub use raster::{ColorImage, EdgeMap, GradientMap, GrayImage};
