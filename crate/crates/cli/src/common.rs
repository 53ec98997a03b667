//! Shared plumbing for the subcommands: config loading, image and
//! ground-truth collection, and thread-pool setup.

use anyhow::{bail, Context, Result};
use boxprop_core::evaluation::{parse_gt_jsonl, parse_voc_xml, GroundTruth};
use boxprop_core::raster::{decode_image, ColorImage};
use boxprop_core::PipelineConfig;
use std::fs;
use std::path::{Path, PathBuf};

/// Loads the pipeline config JSON, or defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    config.validate().context("invalid configuration")?;
    Ok(config)
}

/// Flag overrides shared by the pipeline-running subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Pipeline configuration JSON; flags below override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cap on emitted proposals per image
    #[arg(long)]
    pub max_proposals: Option<usize>,
    /// Final NMS overlap threshold
    #[arg(long)]
    pub nms_rho: Option<f64>,
    /// Edge-refinement blend weight(s), comma separated (one per iteration)
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Edge-refinement iteration cap
    #[arg(long)]
    pub iters: Option<usize>,
    /// Edge-refinement convergence overlap
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Segment-expansion thresholds, comma separated
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// Segmentation scale constant
    #[arg(long)]
    pub seg_k: Option<f64>,
    /// Minimum segment size, cells
    #[arg(long)]
    pub min_size: Option<usize>,
    /// Disable the edge refinement stage
    #[arg(long)]
    pub no_edge: bool,
    /// Disable the segment refinement stage
    #[arg(long)]
    pub no_seg: bool,
}

impl ConfigOverrides {
    pub fn apply(&self) -> Result<PipelineConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(v) = self.max_proposals {
            cfg.max_proposals = v;
            cfg.scan.total_keep = v;
        }
        if let Some(v) = self.nms_rho {
            cfg.nms_rho = v;
        }
        if let Some(v) = &self.gamma {
            cfg.edge.gammas = v.clone();
        }
        if let Some(v) = self.iters {
            cfg.edge.max_iters = v;
        }
        if let Some(v) = self.epsilon {
            cfg.edge.epsilon = v;
        }
        if let Some(v) = &self.delta {
            cfg.seg.delta_set = v.clone();
        }
        if let Some(v) = self.seg_k {
            cfg.seg.k = v;
        }
        if let Some(v) = self.min_size {
            cfg.seg.min_size = v;
        }
        if self.no_edge {
            cfg.enable_edge = false;
        }
        if self.no_seg {
            cfg.enable_seg = false;
        }
        cfg.validate().context("invalid configuration after overrides")?;
        Ok(cfg)
    }
}

/// Resolves the scoring model from the `--model` flag, falling back to the
/// config file's `model` field.
pub fn resolve_model(
    flag: Option<&Path>,
    config: &PipelineConfig,
) -> Result<boxprop_core::objectness::ObjectnessModel> {
    let path = flag
        .or(config.model.as_deref())
        .context("no model given: pass --model or set \"model\" in the config")?;
    boxprop_core::objectness::load_model(path)
        .with_context(|| format!("loading model {}", path.display()))
}

const IMAGE_EXTS: [&str; 5] = ["ppm", "pgm", "png", "jpg", "jpeg"];

/// Collects `(image_id, path)` pairs from a file or directory, sorted by id
/// for deterministic processing order.
pub fn collect_images(input: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    if input.is_file() {
        out.push((stem_of(input)?, input.to_path_buf()));
    } else if input.is_dir() {
        for entry in fs::read_dir(input).with_context(|| format!("reading {}", input.display()))? {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
            if path.is_file() && IMAGE_EXTS.contains(&ext.as_str()) {
                out.push((stem_of(&path)?, path));
            }
        }
        if out.is_empty() {
            bail!("no images found in {}", input.display());
        }
    } else {
        bail!("input {} does not exist", input.display());
    }
    out.sort();
    Ok(out)
}

pub fn load_image(path: &Path) -> Result<ColorImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_image(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("bad file name {}", path.display()))
}

/// Loads ground truth from a VOC annotation directory (`*.xml`), a single
/// annotation XML, or a JSONL file.
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("xml"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no annotation XML files in {}", path.display());
        }
        let mut out = Vec::new();
        for file in files {
            let text = fs::read_to_string(&file)?;
            let gts = parse_voc_xml(&text, &stem_of(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            out.extend(gts);
        }
        Ok(out)
    } else if path.extension().and_then(|e| e.to_str()) == Some("xml") {
        let text = fs::read_to_string(path)?;
        Ok(parse_voc_xml(&text, &stem_of(path)?)?)
    } else {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(parse_gt_jsonl(std::io::BufReader::new(file))?)
    }
}

/// Builds a rayon pool with the requested thread count (0 = rayon default).
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}
