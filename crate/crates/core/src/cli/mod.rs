//! Command-line front end: configuration, corpus preparation, batch scan
//! and report rendering.

pub mod args;
pub mod config;
pub mod ingest;
pub mod output;
pub mod run;
pub mod sarif;

pub use args::{main_with, Cli};
pub use config::{ConfigError, Format, ScanConfig};
pub use ingest::{Corpus, CorpusSummary, Metadata, MetadataRecord};
pub use run::{run_scan, BatchReport, CountRow, DumpOptions, RunError, ScanOutcome};

pub fn render(r: &BatchReport, format: Format) -> String {
    match format {
        Format::Text => output::to_text(r),
        Format::Json => output::to_json(r),
        Format::Sarif => sarif::to_sarif_string(r),
    }
}
