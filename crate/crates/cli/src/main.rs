//! `shs`: batch evaluation, GSD simulation and survey costing.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 no ground truth,
//! 4 internal error.

mod args;
mod commands;
mod error;
mod eval;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};
use manifest::RunManifest;

fn dispatch(cli: &Cli, argv: &[String]) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Eval(a) => eval::run(a, g, argv),
        Command::GsdSim(a) => commands::gsd_sim(a, g, argv),
        Command::Cost(a) => commands::cost(a, g, argv),
        Command::CostCurve(a) => commands::cost_curve(a, g, argv),
        Command::Compare(a) => commands::compare(a, g, argv),
        Command::Render(a) => commands::render(a, g, argv),
        Command::Rasterize(a) => commands::rasterize(a, g, argv),
        Command::Replay(a) => {
            let recorded = RunManifest::load(&a.manifest)?;
            let mut replayed = Cli::try_parse_from(&recorded.argv).map_err(|e| {
                CliError::Input(format!("{}: recorded argv: {e}", a.manifest.display()))
            })?;
            if matches!(replayed.command, Command::Replay(_)) {
                return Err(CliError::Input("manifest records a replay".into()));
            }
            if let Some(into) = &a.into {
                let into = std::path::absolute(into).map_err(|e| CliError::Input(e.to_string()))?;
                replayed.global.out = into;
            }
            std::env::set_current_dir(&recorded.cwd)
                .map_err(|e| CliError::Input(format!("{}: {e}", recorded.cwd.display())))?;
            dispatch(&replayed, &recorded.argv)
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match dispatch(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
