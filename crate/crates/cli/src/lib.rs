//! Command line front end: CSV ingestion, band and QQ export, and
//! simulation campaigns configured in TOML.

mod app;
pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod qq;

pub use app::run;
pub use error::{CliError, CliResult};
