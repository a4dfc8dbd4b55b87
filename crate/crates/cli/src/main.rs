use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use mpoints_cli::{execute, Cli, CliError, RunConfig, Status, USAGE_EXIT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_EXIT as u8)
        }
    }
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let (command, options) = cli.command.split();
    let cfg = RunConfig::from_options(&options.resolve_file()?)?;
    let mut diag = io::stderr();
    let status = match &cfg.output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot create `{}`: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            let status = execute(command, &cfg, &mut out, &mut diag)?;
            out.flush()?;
            status
        }
        None => {
            let mut out = BufWriter::new(io::stdout());
            let status = execute(command, &cfg, &mut out, &mut diag)?;
            out.flush()?;
            status
        }
    };
    Ok(status)
}
