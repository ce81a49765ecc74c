use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::detector::DefectKind;

use super::config::{self, ConfigFile, Format, ScanConfig, UnsupportedLevel, CONFIG_ENV};
use super::run::{run_scan, DumpOptions};

#[derive(Debug, Parser)]
#[command(name = "cdsentry", version, about = "Find centralization defects in Solidity contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan files or directories of .sol sources.
    Scan(Box<ScanArgs>),
    /// List the defect rules.
    Rules,
}

#[derive(Debug, clap::Args)]
pub struct ScanArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Config file; defaults to $CDSENTRY_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated defect codes to run.
    #[arg(long, value_delimiter = ',')]
    pub rules: Option<Vec<String>>,
    /// NDJSON file of {"path", "tx_count", "address"?, "contract"?}.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Skip files whose metadata shows fewer transactions.
    #[arg(long)]
    pub min_tx: Option<u64>,
    /// Scan byte-identical files separately.
    #[arg(long)]
    pub no_dedup: bool,
    /// Treat each call site of an external function as its own source.
    #[arg(long)]
    pub ior_distinct_sites: bool,
    /// Ignore outputs that reach a branch condition.
    #[arg(long)]
    pub ior_respect_guards: bool,
    /// Do not count permission variables as critical.
    #[arg(long)]
    pub exclude_privilege_vars: bool,
    /// Severity of unsupported-construct diagnostics.
    #[arg(long, value_enum)]
    pub unsupported: Option<UnsupportedLevel>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// NDJSON transaction records.
    #[arg(long, requires = "governors")]
    pub crosschain: Option<PathBuf>,
    /// Governor registry for --crosschain.
    #[arg(long, requires = "crosschain")]
    pub governors: Option<PathBuf>,
    /// Write per-function permission graphs as NDJSON (stderr by default).
    #[arg(long, value_name = "FILE", num_args = 0..=1, default_missing_value = "-")]
    pub dump_pdg: Option<PathBuf>,
    /// Write per-contract facts as NDJSON (stderr by default).
    #[arg(long, value_name = "FILE", num_args = 0..=1, default_missing_value = "-")]
    pub dump_facts: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl ScanArgs {
    pub fn config(&self) -> Result<ScanConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => {
                let mut c = ScanConfig::default();
                let f = ConfigFile::read(p).map_err(|e| e.to_string())?;
                c.apply_file(f, p.parent().unwrap_or(Path::new("."))).map_err(|e| e.to_string())?;
                c
            }
            None => ScanConfig::from_env().map_err(|e| format!("{e} (from ${CONFIG_ENV})"))?,
        };
        if let Some(r) = &self.rules {
            cfg.rules = config::parse_rules(r.iter().map(String::as_str)).map_err(|e| e.to_string())?;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(m) = &self.metadata {
            cfg.metadata = Some(m.clone());
        }
        if let Some(n) = self.min_tx {
            cfg.min_tx_count = n;
        }
        if let Some(u) = self.unsupported {
            cfg.unsupported = u;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = Some(j);
        }
        cfg.dedup &= !self.no_dedup;
        cfg.ior_distinct_sites |= self.ior_distinct_sites;
        cfg.ior_respect_guards |= self.ior_respect_guards;
        cfg.exclude_privilege_vars |= self.exclude_privilege_vars;
        if self.crosschain.is_some() {
            cfg.crosschain = self.crosschain.clone();
            cfg.governors = self.governors.clone();
        }
        Ok(cfg)
    }
}

fn write_dump(target: &Path, docs: &[Value], err: &mut dyn Write) -> std::io::Result<()> {
    let mut text = String::new();
    for d in docs {
        text.push_str(&serde_json::to_string(d).expect("dump serializes"));
        text.push('\n');
    }
    if target == Path::new("-") {
        err.write_all(text.as_bytes())
    } else {
        std::fs::write(target, text)
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 clean, 1 defects found, 2 errors.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Rules => {
            for k in DefectKind::ALL {
                let _ = writeln!(out, "{:<4} {}\n     {}\n     fix: {}", k.code(), k.title(), k.description(), k.remediation());
            }
            0
        }
        Command::Scan(args) => scan(&args, out, err),
    }
}

fn scan(args: &ScanArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "cdsentry: {e}");
            return 2;
        }
    };
    let dumps = DumpOptions { pdg: args.dump_pdg.is_some(), facts: args.dump_facts.is_some() };
    let outcome = match run_scan(&cfg, &args.paths, dumps) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "cdsentry: {e}");
            return 2;
        }
    };
    for (target, docs) in [(&args.dump_pdg, &outcome.pdg_dump), (&args.dump_facts, &outcome.facts_dump)] {
        if let Some(t) = target {
            if let Err(e) = write_dump(t, docs, err) {
                let _ = writeln!(err, "cdsentry: cannot write {}: {e}", t.display());
                return 2;
            }
        }
    }
    let text = super::render(&outcome.report, cfg.format);
    let written = match &args.output {
        Some(p) => std::fs::write(p, &text),
        None => out.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "cdsentry: cannot write report: {e}");
        return 2;
    }
    outcome.report.exit_code()
}
