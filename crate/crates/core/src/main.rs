use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

fn main() -> ExitCode {
    // Let clap print help and version itself.
    if let Err(e) = lifnet::cli::Cli::try_parse() {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            e.exit();
        }
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match lifnet::cli::run(std::env::args_os(), &mut lock) {
        Ok(()) => {
            let _ = lock.flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("failed");
            eprintln!("lifnet: {}", first.trim());
            ExitCode::from(2)
        }
    }
}
