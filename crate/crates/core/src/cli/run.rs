//! Batch scanning of a prepared corpus.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{self, AnalysisOptions};
use crate::crosschain::{self, Handover, MalformedRecord};
use crate::detector::{DefectKind, Finding, ScanReport};
use crate::frontend::{Diagnostic, DiagnosticKind, SourceFile, Span};

use super::config::ScanConfig;
use super::ingest::{self, CorpusSummary, Metadata};

pub const TOOL_NAME: &str = "cdsentry";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    /// Defect code, or `All` for contracts with at least one defect.
    pub kind: String,
    pub count: usize,
    /// Share of scanned contracts, rounded to two decimals.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosschainSummary {
    pub records: usize,
    pub malformed: Vec<MalformedRecord>,
    pub handovers: Vec<Handover>,
    pub suppressed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub tool: String,
    pub version: String,
    pub corpus: CorpusSummary,
    pub reports: Vec<ScanReport>,
    pub contracts: usize,
    pub counts: Vec<CountRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosschain: Option<CrosschainSummary>,
}

impl BatchReport {
    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.reports.iter().flat_map(|r| r.findings())
    }

    pub fn has_errors(&self) -> bool {
        !self.corpus.io_errors.is_empty() || self.reports.iter().any(ScanReport::has_errors)
    }

    /// 2 when any file could not be read or parsed, else 1 when an
    /// unsuppressed defect was found, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.has_errors() {
            2
        } else if self.reports.iter().any(ScanReport::has_defect) {
            1
        } else {
            0
        }
    }
}

/// Empty when nothing was scanned.
pub fn count_table(reports: &[ScanReport]) -> (usize, Vec<CountRow>) {
    let contracts: Vec<_> = reports.iter().flat_map(|r| &r.contracts).collect();
    let total = contracts.len();
    if total == 0 {
        return (0, Vec::new());
    }
    let pct = |n: usize| (n as f64 * 10000.0 / total as f64).round() / 100.0;
    let mut rows: Vec<CountRow> = DefectKind::ALL
        .into_iter()
        .map(|k| {
            let n = contracts.iter().filter(|c| c.has(k)).count();
            CountRow { kind: k.code().into(), count: n, percent: pct(n) }
        })
        .collect();
    let any = contracts.iter().filter(|c| c.defects.values().any(|&b| b)).count();
    rows.push(CountRow { kind: "All".into(), count: any, percent: pct(any) });
    (total, rows)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DumpOptions {
    pub pdg: bool,
    pub facts: bool,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub report: BatchReport,
    /// One document per function, each tagged with its file.
    pub pdg_dump: Vec<Value>,
    pub facts_dump: Vec<Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Registry(#[from] crosschain::RegistryError),
    #[error("--crosschain and --governors must be given together")]
    CrosschainPair,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

struct FileResult {
    report: ScanReport,
    pdg: Vec<Value>,
    facts: Vec<Value>,
}

fn tag(file: &str, v: Value) -> Vec<Value> {
    let items = match v {
        Value::Array(a) => a,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|mut d| {
            if let Value::Object(m) = &mut d {
                m.insert("file".into(), Value::String(file.into()));
            }
            d
        })
        .collect()
}

fn scan_one(file: &SourceFile, opts: &AnalysisOptions, dumps: DumpOptions) -> FileResult {
    let display = ingest::display_path(&file.path);
    let named = SourceFile { path: PathBuf::from(&display), ..file.clone() };
    match std::panic::catch_unwind(|| analysis::analyze(&named, opts)) {
        Ok(a) => FileResult {
            pdg: if dumps.pdg { tag(&display, analysis::dump_pdg(&a)) } else { Vec::new() },
            facts: if dumps.facts { tag(&display, analysis::dump_facts(&a)) } else { Vec::new() },
            report: a.report,
        },
        Err(_) => FileResult {
            report: ScanReport {
                file: display,
                content_hash: file.content_hash,
                contracts: Vec::new(),
                diagnostics: vec![Diagnostic::error(DiagnosticKind::Internal, Span::default(), "analysis aborted on this file")],
            },
            pdg: Vec::new(),
            facts: Vec::new(),
        },
    }
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| RunError::Read { path: path.to_path_buf(), source })
}

pub fn run_scan(cfg: &ScanConfig, inputs: &[PathBuf], dumps: DumpOptions) -> Result<ScanOutcome, RunError> {
    let metadata = cfg
        .metadata
        .as_deref()
        .map(|p| Metadata::read(p).map_err(|source| RunError::Read { path: p.to_path_buf(), source }))
        .transpose()?;
    let corpus = ingest::prepare(inputs, metadata.as_ref(), cfg.min_tx_count, cfg.dedup);
    let opts = cfg.analysis_options();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let results: Vec<FileResult> = pool.install(|| corpus.files.par_iter().map(|f| scan_one(f, &opts, dumps)).collect());

    let mut reports = Vec::with_capacity(results.len());
    let (mut pdg_dump, mut facts_dump) = (Vec::new(), Vec::new());
    for r in results {
        reports.push(r.report);
        pdg_dump.extend(r.pdg);
        facts_dump.extend(r.facts);
    }

    let crosschain = match (&cfg.crosschain, &cfg.governors) {
        (None, None) => None,
        (Some(records), Some(governors)) => {
            let set = crosschain::parse_records(&read(records)?);
            let registry = crosschain::parse_registry(&read(governors)?, governors.parent().unwrap_or(Path::new(".")))?;
            let hs = crosschain::handovers(&set.records, &registry);
            let mut suppressed = 0;
            for rep in &mut reports {
                let Some(meta) = corpus.metadata.get(&rep.file) else { continue };
                let Some(addr) = meta.address else { continue };
                if let Some(h) = hs.get(&addr) {
                    suppressed += crosschain::apply(rep, meta.contract.as_deref(), h);
                }
            }
            Some(CrosschainSummary {
                records: set.records.len(),
                malformed: set.malformed,
                handovers: hs.into_values().flatten().collect(),
                suppressed,
            })
        }
        _ => return Err(RunError::CrosschainPair),
    };

    let (contracts, counts) = count_table(&reports);
    let report = BatchReport {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        corpus: corpus.summary,
        reports,
        contracts,
        counts,
        crosschain,
    };
    Ok(ScanOutcome { report, pdg_dump, facts_dump })
}
