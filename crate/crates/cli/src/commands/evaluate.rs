//! `boxprop eval`: metrics report from a proposals CSV and ground truth.

use crate::common::load_ground_truth;
use anyhow::{Context, Result};
use boxprop_core::evaluation::{build_report, ReportParams};
use boxprop_core::pipeline::read_proposals_csv;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Proposals CSV produced by `propose`
    #[arg(long)]
    pub proposals: PathBuf,
    /// Ground truth: annotation XML directory, single XML, or JSONL file
    #[arg(long)]
    pub gt: PathBuf,
    /// Metrics report JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Recall-overlap curve CSV (eta, recall)
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Overlap thresholds for the DR table
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7])]
    pub eta: Vec<f64>,
    /// Proposal budgets for the DR table
    #[arg(long, value_delimiter = ',', default_values_t = [1, 10, 100, 1000])]
    pub budgets: Vec<usize>,
    /// Drop objects flagged difficult from the metrics
    #[arg(long)]
    pub exclude_difficult: bool,
}

pub fn run(args: Args) -> Result<()> {
    let file = File::open(&args.proposals)
        .with_context(|| format!("opening {}", args.proposals.display()))?;
    let index = read_proposals_csv(BufReader::new(file))?;
    let gts = load_ground_truth(&args.gt)?;
    anyhow::ensure!(!gts.is_empty(), "ground truth is empty");

    let gt_ids: BTreeSet<&str> = gts.iter().map(|g| g.image_id.as_str()).collect();
    let prop_ids: BTreeSet<&str> = index.keys().map(|s| s.as_str()).collect();
    let missing_props = gt_ids.difference(&prop_ids).count();
    let missing_gts = prop_ids.difference(&gt_ids).count();
    if missing_props > 0 || missing_gts > 0 {
        log::warn!(
            "image id mismatch: {missing_props} annotated images without proposals, \
             {missing_gts} proposal images without annotations"
        );
    }

    let params = ReportParams {
        etas: args.eta.clone(),
        budgets: args.budgets.clone(),
        curve_budget: args.budgets.iter().copied().max().unwrap_or(1000),
        include_difficult: !args.exclude_difficult,
        ..ReportParams::default()
    };
    let report = build_report(&gts, &index, &params)?;

    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(out), &report)?;

    if let Some(curve_path) = &args.curve_out {
        let mut w = BufWriter::new(File::create(curve_path)?);
        w.write_all(b"eta,recall\n")?;
        for (eta, recall) in &report.curve {
            writeln!(w, "{eta:.3},{recall:.6}")?;
        }
    }

    for p in &report.dr {
        println!("DR @ eta={:.2} budget={:<5} = {:.4}", p.eta, p.budget, p.value);
    }
    println!("MABO = {:.4}", report.mabo);
    Ok(())
}
