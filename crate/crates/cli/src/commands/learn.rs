//! `boxprop learn`: quantized search for the refinement parameters.
//!
//! The stages are fit sequentially: the blend weight schedule on the coarse
//! proposals first, then the threshold set on the edge-refined boxes.

use crate::common::{collect_images, load_ground_truth, load_image, resolve_model, ConfigOverrides};
use anyhow::{Context, Result};
use boxprop_core::edge_refine::{self, GammaScene};
use boxprop_core::objectness::scan;
use boxprop_core::raster::{canny, to_gray};
use boxprop_core::segment_refine::{self, DeltaGt, DeltaScene};
use boxprop_core::{scale_box, EdgeMap, Proposal, ProposalSource, Rect};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scoring model JSON providing the initial proposals (may also come
    /// from the config file)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training images (file or directory)
    #[arg(long)]
    pub input: PathBuf,
    /// Ground truth (annotation XML directory or JSONL)
    #[arg(long)]
    pub gt: PathBuf,
    /// Output JSON `{"gamma": [...], "delta": [...]}`
    #[arg(long)]
    pub out: PathBuf,
    /// Overlap threshold defining a correct detection during the search
    #[arg(long, default_value_t = 0.8)]
    pub eta: f64,
    /// Directory for the loss-trace CSVs (defaults to the output's parent)
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn run(args: Args) -> Result<()> {
    let config = args.overrides.apply()?;
    let model = resolve_model(args.model.as_deref(), &config)?;
    let images = collect_images(&args.input)?;
    let gts = load_ground_truth(&args.gt)?;

    let mut gts_by_image: BTreeMap<&str, Vec<&boxprop_core::evaluation::GroundTruth>> = BTreeMap::new();
    for gt in &gts {
        gts_by_image.entry(&gt.image_id).or_default().push(gt);
    }

    // shared per-image state: decoded image, coarse proposals, ground truth
    struct Item {
        img: boxprop_core::ColorImage,
        props: Vec<Rect>,
        gts: Vec<(Rect, u32)>,
    }
    let mut class_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut items = Vec::new();
    for (id, path) in &images {
        let Some(image_gts) = gts_by_image.get(id.as_str()) else {
            log::warn!("no ground truth for image {id}, skipping");
            continue;
        };
        let img = load_image(path)?;
        let gray = to_gray(&img);
        let props = scan(&gray, &model, &config.scan).into_iter().map(|p| p.rect).collect();
        let gt_rects = image_gts
            .iter()
            .map(|g| {
                let next = class_ids.len() as u32;
                let cid = *class_ids.entry(g.class_name.clone()).or_insert(next);
                (g.rect, cid)
            })
            .collect();
        items.push(Item { img, props, gts: gt_rects });
    }
    anyhow::ensure!(!items.is_empty(), "no images with ground truth");

    // stage 1: blend weight, searched in the shrunken edge frame
    let mut gamma_scenes = Vec::new();
    for item in &items {
        let gray = to_gray(&item.img);
        let f = config.edge.resize_factor;
        let rw = ((gray.width() as f64 * f).round() as usize).max(1);
        let rh = ((gray.height() as f64 * f).round() as usize).max(1);
        let small = gray.resize(rw, rh)?;
        let edges = canny(&small, &config.canny);
        let nearest = match edge_refine::distance_transform(&edges) {
            Ok(n) => n,
            Err(_) => {
                // no edges: a map with one synthetic edge pixel keeps the
                // scene shape; extents degenerate and gamma = 0 wins locally
                let mut mask = vec![false; rw * rh];
                mask[0] = true;
                edge_refine::distance_transform(&EdgeMap::new(rw, rh, mask))?
            }
        };
        let sx = rw as f64 / gray.width() as f64;
        let sy = rh as f64 / gray.height() as f64;
        gamma_scenes.push(GammaScene {
            nearest,
            proposals: item.props.iter().map(|r| scale_box(r, sx, sy)).collect(),
            ground_truth: item.gts.iter().map(|(r, _)| scale_box(r, sx, sy)).collect(),
        });
    }
    let iters = config.edge.max_iters;
    let gamma = edge_refine::learn_gamma(&gamma_scenes, args.eta, iters)?;
    println!("learned gamma schedule {:?} (losses {:?})", gamma.gammas, gamma.losses);

    // advance the proposals through edge refinement with the learned weights
    let edge_params = boxprop_core::edge_refine::EdgeRefineParams {
        gammas: gamma.gammas.clone(),
        max_iters: iters.max(1),
        ..config.edge.clone()
    };
    for (item, scene) in items.iter_mut().zip(&gamma_scenes) {
        let props: Vec<Proposal> = scene
            .proposals
            .iter()
            .map(|r| Proposal::new(*r, 0.0, ProposalSource::Coarse))
            .collect();
        let refined = edge_refine::refine(&scene.nearest, &props, &edge_params);
        let gray_w = item.img.width() as f64;
        let gray_h = item.img.height() as f64;
        let sx = scene.nearest.width() as f64 / gray_w;
        let sy = scene.nearest.height() as f64 / gray_h;
        item.props = refined.iter().map(|p| scale_box(&p.rect, 1.0 / sx, 1.0 / sy)).collect();
    }

    // stage 2: threshold set, searched in cell units
    let mut delta_scenes = Vec::new();
    for item in &items {
        let grid = segment_refine::build_cell_grid(&item.img, config.seg.frame_w, config.seg.frame_h, config.seg.cell_px);
        let labeling = segment_refine::segment_graph(&grid, config.seg.k, config.seg.min_size);
        let sx = grid.grid_w() as f64 / item.img.width() as f64;
        let sy = grid.grid_h() as f64 / item.img.height() as f64;
        delta_scenes.push(DeltaScene {
            labeling,
            proposals: item.props.iter().map(|r| scale_box(r, sx, sy)).collect(),
            ground_truth: item
                .gts
                .iter()
                .map(|(r, cid)| DeltaGt { rect: scale_box(r, sx, sy), class_id: *cid })
                .collect(),
        });
    }
    let delta = segment_refine::learn_delta(&delta_scenes, args.eta)?;
    println!("learned delta set {:?} (loss {})", delta.best, delta.best_loss);

    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    serde_json::to_writer_pretty(
        BufWriter::new(out),
        &serde_json::json!({ "gamma": gamma.gammas, "delta": delta.best }),
    )?;

    let trace_dir = args
        .trace_dir
        .clone()
        .or_else(|| args.out.parent().map(|p| p.to_path_buf()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&trace_dir)?;

    let mut w = BufWriter::new(File::create(trace_dir.join("gamma_trace.csv"))?);
    w.write_all(b"iteration,gamma,loss\n")?;
    for (t, row) in gamma.grid.iter().enumerate() {
        for (step, loss) in row.iter().enumerate() {
            writeln!(w, "{},{:.2},{}", t, step as f64 / 100.0, loss)?;
        }
    }

    let mut w = BufWriter::new(File::create(trace_dir.join("delta_table.csv"))?);
    w.write_all(b"subset_bitmask,loss,dr_at_eta,mabo\n")?;
    for row in &delta.table {
        writeln!(w, "{},{},{:.6},{:.6}", row.mask, row.loss, row.dr_at_eta, row.mabo)?;
    }
    println!("wrote {} and traces to {}", args.out.display(), trace_dir.display());
    Ok(())
}
