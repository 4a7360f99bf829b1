use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use affwalk::cli::{run, Cli};
use affwalk::CliError;
use clap::Parser;

fn run_to(cli: &Cli, w: impl Write + Send) -> Result<(), CliError> {
    let mut w = BufWriter::new(w);
    let r = run(cli, &mut w);
    w.flush()?;
    r
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.output {
        Some(path) => File::create(path).map_err(CliError::from).and_then(|f| run_to(&cli, f)),
        None => run_to(&cli, io::stdout()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("affwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
