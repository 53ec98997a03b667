//! `boxprop bench`: per-stage wall-clock timing over a set of images, in
//! single-thread and multi-thread modes.

use crate::common::{collect_images, load_image, resolve_model, thread_pool, ConfigOverrides};
use anyhow::{Context, Result};
use boxprop_core::{Pipeline, StageTimings};
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scoring model JSON (may also come from the config file)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Image file or directory
    #[arg(long)]
    pub input: PathBuf,
    /// Timing CSV output
    #[arg(long)]
    pub out: PathBuf,
    /// Threads for the multi-thread pass (0 = one per core)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn run(args: Args) -> Result<()> {
    let config = args.overrides.apply()?;
    let model = resolve_model(args.model.as_deref(), &config)?;
    let pipeline = Pipeline::new(model, config)?;
    let images = collect_images(&args.input)?;
    let decoded: Vec<(String, boxprop_core::ColorImage)> = images
        .iter()
        .map(|(id, path)| Ok((id.clone(), load_image(path)?)))
        .collect::<Result<_>>()?;

    // warm-up pass so page faults and allocator growth are not billed
    let _ = pipeline.run(&decoded[0].1);

    let single: Vec<StageTimings> = decoded.iter().map(|(_, img)| pipeline.run_timed(img).1).collect();

    let pool = thread_pool(args.threads)?;
    let multi: Vec<StageTimings> =
        pool.install(|| decoded.par_iter().map(|(_, img)| pipeline.run_timed(img).1).collect());

    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(b"image_id,mode,scan_s,edge_s,seg_s,nms_s,total_s\n")?;
    for (mode, rows) in [("single", &single), ("multi", &multi)] {
        for ((id, _), t) in decoded.iter().zip(rows.iter()) {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                id, mode, t.scan_s, t.edge_s, t.seg_s, t.nms_s, t.total_s
            )?;
        }
    }

    for (mode, rows) in [("single-thread", &single), (&format!("multi-thread x{}", pool.current_num_threads()), &multi)] {
        let mut totals: Vec<f64> = rows.iter().map(|t| t.total_s).collect();
        totals.sort_by(f64::total_cmp);
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        let median = totals[totals.len() / 2];
        println!("{mode}: mean {:.2} ms/image, median {:.2} ms/image", mean * 1e3, median * 1e3);
    }

    // stage shares of the sequential run
    let sum = |f: fn(&StageTimings) -> f64| single.iter().map(f).sum::<f64>();
    let total = sum(|t| t.total_s).max(f64::MIN_POSITIVE);
    println!(
        "stage shares (single-thread): scan {:.1}% edge {:.1}% seg {:.1}% nms {:.1}%",
        100.0 * sum(|t| t.scan_s) / total,
        100.0 * sum(|t| t.edge_s) / total,
        100.0 * sum(|t| t.seg_s) / total,
        100.0 * sum(|t| t.nms_s) / total,
    );
    println!("wrote {} rows to {}", 2 * decoded.len(), args.out.display());
    Ok(())
}
