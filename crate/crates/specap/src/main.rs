use std::process::ExitCode;

use clap::Parser;
use specap::cli::{Cli, Command};
use specap::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a).map(drop),
        Command::Train(a) => commands::train(a).map(drop),
        Command::Evaluate(a) => commands::evaluate(a).map(drop),
        Command::Verify(a) => commands::verify(a),
        Command::ReportDiff(a) => commands::report_diff_cmd(a).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("specap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
