mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::Ctx;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match Ctx::new(&cli) {
        Ok(ctx) => ctx,
        Err(f) => return f.report(),
    };
    let result = match &cli.command {
        Command::Count(c) => commands::count(&ctx, c),
        Command::Expand(a) => commands::expand(&ctx, a),
        Command::Reduce(a) => commands::reduce(&ctx, a),
        Command::Verify(v) => commands::verify(&ctx, v),
        Command::Experiment(a) => commands::experiment(&ctx, a),
        Command::Classify(a) => commands::classify(&ctx, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => f.report(),
    }
}
