use std::process::ExitCode;

use clap::Parser;
use ddreg_cli::app::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let table = cli.out_dir.join(ddreg_cli::commands::TABLE_FILE);
            if let Ok(text) = std::fs::read_to_string(&table) {
                print!("{text}");
            }
            eprintln!("{} written to {}", report.command, cli.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
