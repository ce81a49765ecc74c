//! Text and JSON rendering of batch results.

use std::fmt::Write as _;

use crate::frontend::Severity;

use super::run::BatchReport;

pub fn to_json(r: &BatchReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(s: &str) -> serde_json::Result<BatchReport> {
    serde_json::from_str(s)
}

pub fn to_text(r: &BatchReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    for rep in &r.reports {
        let _ = writeln!(w, "{}", rep.file);
        for d in &rep.diagnostics {
            let sev = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Info => "info",
            };
            let _ = writeln!(w, "  {sev} {}: {}", d.span, d.message);
        }
        for c in &rep.contracts {
            if c.findings.is_empty() && c.notes.is_empty() {
                let _ = writeln!(w, "  contract {}: no defects", c.name);
                continue;
            }
            let _ = writeln!(w, "  contract {}", c.name);
            for f in &c.findings {
                let what = match &f.variable {
                    Some(v) if *v != f.subject => format!("{} ({v})", f.subject),
                    _ => f.subject.clone(),
                };
                let _ = writeln!(w, "    {} {} at {}: {}", f.kind, what, f.span, f.kind.title());
                if let Some(s) = &f.suppressed_by_crosschain {
                    let _ = writeln!(w, "      suppressed: {s}");
                }
                for e in &f.evidence {
                    let _ = writeln!(w, "      {} at {}: {}", e.premise, e.span, e.note);
                }
                let _ = writeln!(w, "      rules: {}", f.rule_trace.join(" -> "));
                let _ = writeln!(w, "      fix: {}", f.remediation);
            }
            for n in &c.notes {
                let _ = writeln!(w, "    note {} at {}: {}", n.subject, n.span, n.message);
            }
        }
    }
    for e in &r.corpus.io_errors {
        let _ = writeln!(w, "{}: error: {}", e.path, e.message);
    }
    for e in &r.corpus.metadata_errors {
        let _ = writeln!(w, "metadata: {e}");
    }
    if let Some(x) = &r.crosschain {
        let _ = writeln!(
            w,
            "transaction records: {} read, {} malformed, {} handovers, {} findings suppressed",
            x.records,
            x.malformed.len(),
            x.handovers.len(),
            x.suppressed
        );
    }
    let c = &r.corpus;
    let _ = writeln!(
        w,
        "\nfiles: {} discovered, {} scanned, {} duplicates dropped, {} below activity threshold, {} unreadable",
        c.discovered,
        c.scanned.len(),
        c.duplicates.iter().map(|d| d.dropped.len()).sum::<usize>(),
        c.filtered.len(),
        c.io_errors.len()
    );
    let _ = writeln!(w, "contracts: {}", r.contracts);
    let _ = writeln!(w, "{:<6}{:>8}{:>10}", "kind", "count", "percent");
    for row in &r.counts {
        let _ = writeln!(w, "{:<6}{:>8}{:>9.2}%", row.kind, row.count, row.percent);
    }
    out
}
