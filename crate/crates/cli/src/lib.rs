//! Model files, queries and reports for the `refrisk` command.

pub mod analysis;
pub mod commands;
pub mod expr;
pub mod report;
pub mod schema;
pub mod tree;

pub use commands::{run, Cli};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", schema_message(*line, path, message))]
    Schema { line: usize, path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] refrisk_core::Error),
}

fn schema_message(line: usize, path: &str, message: &str) -> String {
    if line == 0 {
        format!("schema error in {path}: {message}")
    } else {
        format!("schema error at line {line} ({path}): {message}")
    }
}
