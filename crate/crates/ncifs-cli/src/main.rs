use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ncifs_cli::Cli::parse();
    match ncifs_cli::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
