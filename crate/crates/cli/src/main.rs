mod args;
mod commands;
mod data;
mod failure;
mod svg;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> Result<()> {
    cli.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.common.workers).build()?;
    pool.install(|| match &cli.command {
        Command::Evaluate(a) => commands::evaluate::run(cli, a),
        Command::OptimizeDemo(a) => commands::optimize::run(cli, a),
        Command::Shape(a) => commands::shape::run(cli, a),
        Command::Augment(a) => commands::augment::run(cli, a),
        Command::RecallBins(a) => commands::recall::run(cli, a),
        Command::Stats => commands::stats::run(cli),
        Command::MakeCodebook(a) => commands::shape::make_codebook(cli, a),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure::exit_code(&e) as u8)
        }
    }
}
