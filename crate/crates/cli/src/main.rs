//! Command-line toolchain: propose, eval, learn, bench, train, synth.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod common;

use clap::Parser;

#[derive(Parser)]
#[command(name = "boxprop", version, about = "Fast object proposal generation with box refinement")]
enum Cli {
    /// Generate proposals for images and write a proposals CSV
    Propose(commands::propose::Args),
    /// Score a proposals CSV against ground truth and write a metrics report
    Eval(commands::evaluate::Args),
    /// Learn the refinement parameters by quantized search
    Learn(commands::learn::Args),
    /// Time the pipeline stages over a set of images
    Bench(commands::bench::Args),
    /// Train a scoring model on annotated images
    Train(commands::train::Args),
    /// Generate deterministic synthetic scenes with ground truth
    Synth(commands::synth::Args),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli {
        Cli::Propose(args) => commands::propose::run(args),
        Cli::Eval(args) => commands::evaluate::run(args),
        Cli::Learn(args) => commands::learn::run(args),
        Cli::Bench(args) => commands::bench::run(args),
        Cli::Train(args) => commands::train::run(args),
        Cli::Synth(args) => commands::synth::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
