use std::io;
use std::process::ExitCode;

use clap::Parser;
use epsicomp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help / --version and 2 for usage errors
            e.exit();
        }
    };
    let stdout = io::stdout();
    match run(cli, &mut io::stdin().lock(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epsicomp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
