use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use paircorr_cli::{init_workers, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": message.trim_end() }));
            return ExitCode::from(2);
        }
    };
    let result = init_workers().and_then(|_| run(cli));
    match result {
        Ok(outcome) if outcome.failed_checks.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("{}", serde_json::json!({ "error": "check_failed", "failed": outcome.failed_checks }));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
