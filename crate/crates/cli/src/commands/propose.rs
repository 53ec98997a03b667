//! `boxprop propose`: run the pipeline over images and write the CSV.

use crate::common::{collect_images, load_image, resolve_model, thread_pool, ConfigOverrides};
use anyhow::{Context, Result};
use boxprop_core::pipeline::write_proposals_csv;
use boxprop_core::{Pipeline, Proposal};
use rayon::prelude::*;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scoring model JSON (may also come from the config file)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Image file or directory (PPM/PGM; PNG/JPEG when built with decoders)
    #[arg(long)]
    pub input: PathBuf,
    /// Output proposals CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = one per core); images fan out, outputs keep input order
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn run(args: Args) -> Result<()> {
    let config = args.overrides.apply()?;
    let model = resolve_model(args.model.as_deref(), &config)?;
    let pipeline = Pipeline::new(model, config)?;
    let images = collect_images(&args.input)?;

    let pool = thread_pool(args.threads)?;
    let groups: Vec<(String, Vec<Proposal>)> = pool.install(|| {
        images
            .par_iter()
            .map(|(id, path)| {
                let img = load_image(path)?;
                Ok((id.clone(), pipeline.run(&img)))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_proposals_csv(&groups, BufWriter::new(file))?;
    let total: usize = groups.iter().map(|(_, p)| p.len()).sum();
    println!("wrote {} proposals for {} images to {}", total, groups.len(), args.out.display());
    Ok(())
}
