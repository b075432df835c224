use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use order2phi_cli::commands::{run, write_stdout, Cli};
use order2phi_cli::exit;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    match run(cli) {
        Ok(reply) => {
            if let Err(e) = write_stdout(&reply.output) {
                eprintln!("error: {e}");
                return ExitCode::from(exit::INTERNAL);
            }
            ExitCode::from(reply.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
