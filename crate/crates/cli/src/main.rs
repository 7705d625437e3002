use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use refrisk::commands::Format;
use refrisk::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(report) => {
            let out = match cli.format {
                Format::Text => report.text(),
                Format::Structured => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
            };
            // a closed pipe (`| head`) is not an error worth reporting
            let _ = std::io::stdout().write_all(out.as_bytes());
            eprintln!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
            if report.verdict == report.expected {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
