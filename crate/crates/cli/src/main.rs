mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{merge_config, Cli, Command};
use commands::{CliError, Ctx};

/// Canonical text hashed into the provenance line; output paths and worker
/// count are excluded because they never change the data.
fn canonical(cli: &Cli) -> String {
    let body = match &cli.command {
        Command::Boundary(a) => {
            let mut a = a.clone();
            a.out = Default::default();
            format!("{a:?}")
        }
        Command::SweepEta(a) => format!("{:?}", args::SweepArgs { out: None, ..a.clone() }),
        Command::Steady(a) => format!("{:?}", args::SteadyArgs { out: None, ..a.clone() }),
        Command::Spectrum(a) => format!("{:?}", args::SpectrumArgs { out: None, ..a.clone() }),
        Command::Meanfield(a) => format!("{:?}", args::MeanfieldArgs { out: None, ..a.clone() }),
    };
    format!("{}|omega0={:?}|{body}", cli.command.name(), cli.omega0)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if !(cli.omega0 > 0.0 && cli.omega0.is_finite()) {
        return Err(CliError::Usage(format!("--omega0 must be positive, got {}", cli.omega0)));
    }
    let ctx = Ctx { omega0: cli.omega0, hash: output::params_hash(&canonical(cli)) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.workers)))?;
    pool.install(|| match &cli.command {
        Command::Boundary(a) => commands::boundary::run(a, &ctx),
        Command::SweepEta(a) => commands::sweep::run(a, &ctx),
        Command::Steady(a) => commands::steady::run(a, &ctx),
        Command::Spectrum(a) => commands::spectrum::run(a, &ctx),
        Command::Meanfield(a) => commands::meanfield::run(a, &ctx),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match merge_config(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
