//! `boxprop train`: fit a scoring model on annotated images.

use crate::common::{collect_images, load_ground_truth, load_image};
use anyhow::{Context, Result};
use boxprop_core::objectness::{save_model, train_simple, TrainImage, TrainParams};
use boxprop_core::raster::to_gray;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Training images (file or directory)
    #[arg(long)]
    pub input: PathBuf,
    /// Ground truth (annotation XML directory or JSONL)
    #[arg(long)]
    pub gt: PathBuf,
    /// Output model JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Overlap threshold labeling positive windows
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Subgradient epochs
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// RNG seed for sampling and shuffling
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: Args) -> Result<()> {
    let images = collect_images(&args.input)?;
    let gts = load_ground_truth(&args.gt)?;
    let mut by_image: BTreeMap<&str, Vec<boxprop_core::Rect>> = BTreeMap::new();
    for gt in &gts {
        by_image.entry(&gt.image_id).or_default().push(gt.rect);
    }

    let mut training = Vec::new();
    for (id, path) in &images {
        let objects = by_image.get(id.as_str()).cloned().unwrap_or_default();
        let img = load_image(path)?;
        training.push(TrainImage { image: to_gray(&img), objects });
    }
    anyhow::ensure!(!training.is_empty(), "no training images found");

    let params = TrainParams { eta: args.eta, epochs: args.epochs, seed: args.seed, ..TrainParams::default() };
    let model = train_simple(&training, &params).context("training failed")?;
    save_model(&model, &args.out)?;
    println!(
        "trained on {} images / {} objects; wrote {}",
        training.len(),
        gts.len(),
        args.out.display()
    );
    Ok(())
}
