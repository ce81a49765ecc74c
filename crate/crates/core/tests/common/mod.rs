#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cdsentry::analysis::{scan_source, AnalysisOptions};
use cdsentry::cli::{output, run_scan, DumpOptions, ScanConfig};
use cdsentry::detector::{DefectKind, ScanReport};
use cdsentry::frontend::{parse_source, ParseOptions, SourceFile};
use cdsentry::ir::{lower, ContractUnit};
use cdsentry::pdg::{self, compute_dominators, derive_perm_facts, DomInfo, FactTable, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Labels = BTreeMap<String, BTreeMap<String, BTreeSet<DefectKind>>>;

pub fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn corpus_dir() -> PathBuf {
    tests_dir().join("corpus")
}

pub fn labels() -> Labels {
    let text = std::fs::read_to_string(corpus_dir().join("labels.toml")).expect("labels.toml");
    let raw: BTreeMap<String, BTreeMap<String, Vec<String>>> = toml::from_str(&text).expect("labels parse");
    raw.into_iter()
        .map(|(file, cs)| {
            let cs = cs.into_iter().map(|(c, ks)| (c, ks.iter().map(|k| k.parse().expect("kind")).collect())).collect();
            (file, cs)
        })
        .collect()
}

pub fn scan_file(path: &Path) -> ScanReport {
    let f = SourceFile::read(path).expect("fixture readable");
    scan_source(&f, &AnalysisOptions::default())
}

pub fn scan_corpus_file(name: &str) -> ScanReport {
    scan_file(&corpus_dir().join(name))
}

/// Contracts with at least one unsuppressed defect, and their kinds.
pub fn kinds_by_contract(r: &ScanReport) -> BTreeMap<String, BTreeSet<DefectKind>> {
    r.contracts
        .iter()
        .map(|c| (c.name.clone(), c.defects.iter().filter(|(_, &b)| b).map(|(k, _)| *k).collect::<BTreeSet<_>>()))
        .filter(|(_, ks)| !ks.is_empty())
        .collect()
}

fn fmt_kinds(m: &BTreeMap<String, BTreeSet<DefectKind>>) -> String {
    let parts: Vec<String> = m
        .iter()
        .map(|(c, ks)| format!("{c}: {}", ks.iter().map(|k| k.code()).collect::<Vec<_>>().join("+")))
        .collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(", ")
    }
}

fn compare(file: &str, expected: &BTreeMap<String, BTreeSet<DefectKind>>) -> Option<String> {
    let r = scan_corpus_file(file);
    if r.has_errors() {
        return Some(format!("{file}: parse errors {:?}", r.diagnostics));
    }
    let want: BTreeMap<_, _> = expected.iter().filter(|(_, ks)| !ks.is_empty()).map(|(c, k)| (c.clone(), k.clone())).collect();
    let got = kinds_by_contract(&r);
    (got != want).then(|| format!("{file}: expected {}, got {}", fmt_kinds(&want), fmt_kinds(&got)))
}

pub struct Outcome {
    pub ok: bool,
    pub detail: String,
}

impl Outcome {
    fn from(errors: Vec<String>, summary: String, elapsed: Duration, limit: Option<Duration>) -> Self {
        let slow = limit.is_some_and(|l| elapsed > l);
        let mut detail = format!("{summary}; {:.0} ms", elapsed.as_secs_f64() * 1000.0);
        if slow {
            detail.push_str(&format!(" (limit {} ms)", limit.unwrap().as_millis()));
        }
        if !errors.is_empty() {
            detail.push_str(&format!("; {}", errors.join("; ")));
        }
        Outcome { ok: errors.is_empty() && !slow, detail }
    }
}

pub const CANONICAL: [(&str, &[DefectKind]); 6] = [
    ("canonical_mint.sol", &[DefectKind::MFS]),
    ("canonical_crivar.sol", &[DefectKind::CVS, DefectKind::MT]),
    ("canonical_proxy.sol", &[DefectKind::SPA]),
    ("canonical_selfdestruct.sol", &[DefectKind::SS]),
    ("canonical_output.sol", &[DefectKind::IOR]),
    ("canonical_crivar_onlyafter.sol", &[DefectKind::CVS]),
];

pub fn canonical_fidelity() -> Outcome {
    let t = Instant::now();
    let mut errors = Vec::new();
    for (file, kinds) in CANONICAL {
        let r = scan_corpus_file(file);
        let got: BTreeSet<DefectKind> = r.findings().filter(|f| f.suppressed_by_crosschain.is_none()).map(|f| f.kind).collect();
        let want: BTreeSet<DefectKind> = kinds.iter().copied().collect();
        if got != want || r.has_errors() {
            errors.push(format!("{file}: expected {want:?}, got {got:?}"));
        }
    }
    Outcome::from(errors, format!("{} canonical contracts", CANONICAL.len()), t.elapsed(), Some(Duration::from_secs(1)))
}

/// Canonical contract, fixed variant, kind the fix removes.
pub const FIXES: [(&str, &str, DefectKind); 6] = [
    ("canonical_mint.sol", "fix_mint_multisig.sol", DefectKind::MFS),
    ("canonical_crivar.sol", "fix_crivar_multisig.sol", DefectKind::CVS),
    ("canonical_crivar.sol", "fix_crivar_timelock.sol", DefectKind::MT),
    ("canonical_proxy.sol", "fix_proxy_multisig.sol", DefectKind::SPA),
    ("canonical_selfdestruct.sol", "fix_selfdestruct_multisig.sol", DefectKind::SS),
    ("canonical_output.sol", "fix_output_second_source.sol", DefectKind::IOR),
];

pub fn remediation_fidelity() -> Outcome {
    let t = Instant::now();
    let mut errors = Vec::new();
    for (base, fix, kind) in FIXES {
        let before = scan_corpus_file(base).findings().filter(|f| f.kind == kind).count();
        let after = scan_corpus_file(fix);
        let left = after.findings().filter(|f| f.kind == kind).count();
        if before == 0 {
            errors.push(format!("{base} has no {kind} to fix"));
        }
        if left != 0 || after.has_errors() {
            errors.push(format!("{fix}: {left} {kind} findings remain"));
        }
    }
    Outcome::from(errors, format!("{} fix patterns", FIXES.len()), t.elapsed(), None)
}

pub fn labeled_corpus() -> Outcome {
    let t = Instant::now();
    let labels = labels();
    let on_disk: BTreeSet<String> = std::fs::read_dir(corpus_dir())
        .expect("corpus dir")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".sol"))
        .collect();
    let mut errors: Vec<String> = on_disk.iter().filter(|f| !labels.contains_key(*f)).map(|f| format!("{f}: unlabeled")).collect();
    errors.extend(labels.keys().filter(|f| !on_disk.contains(*f)).map(|f| format!("{f}: labeled but missing")));
    errors.extend(labels.iter().filter_map(|(file, expected)| compare(file, expected)));
    if on_disk.len() < 30 {
        errors.push(format!("only {} fixtures", on_disk.len()));
    }
    Outcome::from(errors, format!("{} labeled fixtures", on_disk.len()), t.elapsed(), Some(Duration::from_secs(5)))
}

// ---- dominators -------------------------------------------------------

/// Random digraph on `n` nodes where every node is reachable from 0.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut succs = vec![Vec::new(); n];
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        succs[parent].push(v);
    }
    let extra = rng.gen_range(0..=n * 2);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if !succs[a].contains(&b) {
            succs[a].push(b);
        }
    }
    succs
}

fn reachable_without(succs: &[Vec<usize>], cut: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; succs.len()];
    if cut == Some(0) {
        return seen;
    }
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &succs[v] {
            if Some(w) != cut && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// `d` dominates `b` iff `b == d` or `b` is unreachable once `d` is removed.
pub fn brute_force_dominates(succs: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let n = succs.len();
    (0..n)
        .map(|d| {
            let r = reachable_without(succs, Some(d));
            (0..n).map(|b| b == d || !r[b]).collect()
        })
        .collect()
}

pub fn dominators_agree(succs: &[Vec<usize>]) -> Result<(), String> {
    let info: DomInfo = compute_dominators(succs, 0);
    let oracle = brute_force_dominates(succs);
    for (d, row) in oracle.iter().enumerate() {
        for (b, &want) in row.iter().enumerate() {
            if info.dominates(d, b) != want {
                return Err(format!("graph {succs:?}: dominates({d}, {b}) = {}, oracle {want}", info.dominates(d, b)));
            }
        }
    }
    Ok(())
}

pub fn dominator_oracle(graphs: usize, seed: u64) -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    for _ in 0..graphs {
        let n = rng.gen_range(1..=12);
        let g = random_graph(&mut rng, n);
        if let Err(e) = dominators_agree(&g) {
            errors.push(e);
            break;
        }
    }
    Outcome::from(errors, format!("{graphs} graphs, seed {seed}"), t.elapsed(), Some(Duration::from_secs(5)))
}

// ---- permission facts ---------------------------------------------------

pub struct LabeledUnit {
    pub unit: ContractUnit,
    pub labels: Vec<Vec<pdg::BlockLabels>>,
    pub doms: Vec<DomInfo>,
}

/// Every unit of the labeled corpus with its computed block labels.
pub fn golden_units() -> Vec<LabeledUnit> {
    let mut out = Vec::new();
    for file in labels().keys() {
        let src = std::fs::read_to_string(corpus_dir().join(file)).expect("fixture");
        let ast = parse_source(&src, &ParseOptions::default());
        for unit in lower(&ast).units {
            let token = cdsentry::sensors::detect_token(&unit);
            let p = pdg::build(&unit, &token.balance_vars);
            out.push(LabeledUnit { unit, labels: p.labels, doms: p.doms });
        }
    }
    out
}

pub type Flags = Vec<[bool; 4]>;

pub fn flags(t: &FactTable) -> Flags {
    t.iter().map(|f| [f.multisig, f.timelock, f.limited, f.limited_public]).collect()
}

/// Randomly drops and adds P/M/T labels; the result of a second call with
/// `grow_only` is a superset of its input.
pub fn perturb(rng: &mut ChaCha8Rng, labels: &[Vec<pdg::BlockLabels>], grow_only: bool) -> Vec<Vec<pdg::BlockLabels>> {
    let mut out = labels.to_vec();
    for blocks in &mut out {
        for b in blocks.iter_mut() {
            for l in [Label::P, Label::M, Label::T] {
                let roll = rng.gen_range(0..10);
                if roll == 0 {
                    b.labels.insert(l);
                    b.labels.remove(&Label::O);
                } else if roll == 1 && !grow_only {
                    b.labels.remove(&l);
                }
            }
            if b.labels.is_empty() {
                b.labels.insert(Label::O);
            }
        }
    }
    out
}

fn leq(a: &Flags, b: &Flags) -> bool {
    a.iter().zip(b).all(|(x, y)| x.iter().zip(y).all(|(p, q)| !p || *q))
}

pub fn fixpoint_properties(rounds: usize, seed: u64) -> Outcome {
    let t = Instant::now();
    let units = golden_units();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    for round in 0..rounds {
        let u = &units[rng.gen_range(0..units.len())];
        let low = perturb(&mut rng, &u.labels, false);
        let high = perturb(&mut rng, &low, true);
        let f_low = derive_perm_facts(&u.unit, &low, &u.doms);
        let f_high = derive_perm_facts(&u.unit, &high, &u.doms);
        let again = pdg::propagate(&u.unit, f_low.clone());
        if again != f_low {
            errors.push(format!("round {round} ({}): not idempotent", u.unit.name));
        }
        if !leq(&flags(&f_low), &flags(&f_high)) {
            errors.push(format!("round {round} ({}): adding labels removed a fact", u.unit.name));
        }
    }
    Outcome::from(errors, format!("{rounds} perturbations over {} units, seed {seed}", units.len()), t.elapsed(), None)
}

// ---- batch ------------------------------------------------------------------

pub fn preprocess_dir() -> PathBuf {
    tests_dir().join("fixtures/preprocess")
}

pub fn preprocessing() -> Outcome {
    let t = Instant::now();
    let dir = preprocess_dir();
    let cfg = ScanConfig { metadata: Some(dir.join("metadata.ndjson")), ..ScanConfig::default() };
    let mut errors = Vec::new();
    match run_scan(&cfg, std::slice::from_ref(&dir), DumpOptions::default()) {
        Ok(o) => {
            let c = &o.report.corpus;
            let dropped: usize = c.duplicates.iter().map(|d| d.dropped.len()).sum();
            if c.discovered != 5 {
                errors.push(format!("discovered {}", c.discovered));
            }
            if c.scanned.len() != 3 {
                errors.push(format!("scanned {:?}", c.scanned));
            }
            if dropped != 1 || c.filtered.len() != 1 {
                errors.push(format!("dropped {dropped} duplicates, filtered {}", c.filtered.len()));
            }
        }
        Err(e) => errors.push(e.to_string()),
    }
    Outcome::from(errors, "5 files, 2 identical, 1 with one transaction".into(), t.elapsed(), None)
}

/// Scans the corpus twice, once single-threaded with inputs in reverse
/// order, and compares the JSON bytes.
pub fn determinism() -> Outcome {
    let t = Instant::now();
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sol"))
        .collect();
    files.sort();
    let a = run_scan(&ScanConfig::default(), &[corpus_dir()], DumpOptions::default()).map(|o| output::to_json(&o.report));
    files.reverse();
    let cfg = ScanConfig { jobs: Some(1), ..ScanConfig::default() };
    let b = run_scan(&cfg, &files, DumpOptions::default()).map(|o| output::to_json(&o.report));
    let errors = match (a, b) {
        (Ok(a), Ok(b)) if a == b => Vec::new(),
        (Ok(_), Ok(_)) => vec!["JSON differs between runs".to_string()],
        (Err(e), _) | (_, Err(e)) => vec![e.to_string()],
    };
    Outcome::from(errors, format!("{} files scanned twice", files.len()), t.elapsed(), None)
}
