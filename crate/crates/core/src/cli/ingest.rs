//! Corpus preparation: discovery, duplicate removal, activity filter.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::crosschain::Address;
use crate::frontend::{ContentHash, SourceFile};

/// One line of the metadata file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub path: String,
    pub tx_count: u64,
    /// Deployed address, used to match transaction records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<Address>,
    /// Which contract of the file is deployed there; all of them if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Metadata {
    by_path: BTreeMap<PathBuf, MetadataRecord>,
    pub malformed: Vec<String>,
}

fn lookup_key(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

impl Metadata {
    /// Paths are taken relative to `base` (usually the metadata file's
    /// directory) and, failing that, to the working directory.
    pub fn parse(text: &str, base: &Path) -> Self {
        let mut m = Metadata::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<MetadataRecord>(line) {
                Ok(r) => {
                    let rel = Path::new(&r.path);
                    let joined = base.join(rel);
                    let key = if joined.exists() { lookup_key(&joined) } else { lookup_key(rel) };
                    m.by_path.insert(key, r);
                }
                Err(e) => m.malformed.push(format!("line {}: {e}", i + 1)),
            }
        }
        m
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text, path.parent().unwrap_or(Path::new("."))))
    }

    pub fn get(&self, p: &Path) -> Option<&MetadataRecord> {
        self.by_path.get(&lookup_key(p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub content_hash: ContentHash,
    pub kept: String,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filtered {
    pub path: String,
    pub tx_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoFailure {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub discovered: usize,
    pub scanned: Vec<String>,
    pub duplicates: Vec<DuplicateGroup>,
    pub filtered: Vec<Filtered>,
    pub io_errors: Vec<IoFailure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metadata_errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub files: Vec<SourceFile>,
    /// Metadata of each scanned file, by display path.
    pub metadata: BTreeMap<String, MetadataRecord>,
    pub summary: CorpusSummary,
}

pub fn display_path(p: &Path) -> String {
    let s = p.to_string_lossy().replace('\\', "/");
    s.strip_prefix("./").map(str::to_string).unwrap_or(s)
}

/// Files named directly are taken whatever their extension; directories
/// contribute every `*.sol` below them.
pub fn discover(inputs: &[PathBuf]) -> (Vec<PathBuf>, Vec<IoFailure>) {
    let mut found = BTreeMap::new();
    let mut errors = Vec::new();
    for input in inputs {
        if input.is_file() {
            found.entry(lookup_key(input)).or_insert_with(|| input.clone());
            continue;
        }
        if !input.exists() {
            errors.push(IoFailure { path: display_path(input), message: "no such file or directory".into() });
            continue;
        }
        for entry in WalkDir::new(input).follow_links(true) {
            match entry {
                Ok(e) if e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "sol") => {
                    found.entry(lookup_key(e.path())).or_insert_with(|| e.path().to_path_buf());
                }
                Ok(_) => {}
                Err(e) => errors.push(IoFailure {
                    path: e.path().map(display_path).unwrap_or_else(|| display_path(input)),
                    message: e.to_string(),
                }),
            }
        }
    }
    let mut paths: Vec<PathBuf> = found.into_values().collect();
    paths.sort_by_key(|p| display_path(p));
    (paths, errors)
}

/// Reads the inputs, keeps the first path (in sorted order) of each set of
/// byte-identical files, then drops files whose metadata shows fewer than
/// `min_tx` transactions. Files without metadata are kept.
pub fn prepare(inputs: &[PathBuf], metadata: Option<&Metadata>, min_tx: u64, dedup: bool) -> Corpus {
    let (paths, mut io_errors) = discover(inputs);
    let mut summary = CorpusSummary { discovered: paths.len(), ..Default::default() };
    let mut read = Vec::new();
    for p in paths {
        match SourceFile::read(&p) {
            Ok(f) => read.push(f),
            Err(e) => io_errors.push(IoFailure { path: display_path(&p), message: e.to_string() }),
        }
    }

    let mut groups: BTreeMap<ContentHash, Vec<SourceFile>> = BTreeMap::new();
    let mut order = Vec::new();
    for f in read {
        if !dedup || !groups.contains_key(&f.content_hash) {
            order.push(f.content_hash);
        }
        groups.entry(f.content_hash).or_default().push(f);
    }

    let mut files = Vec::new();
    let mut meta_of = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for hash in order {
        let members = if dedup {
            if !seen.insert(hash) {
                continue;
            }
            std::mem::take(groups.get_mut(&hash).expect("group"))
        } else {
            let g = groups.get_mut(&hash).expect("group");
            vec![g.remove(0)]
        };
        let tx = |f: &SourceFile| metadata.and_then(|m| m.get(&f.path));
        let active = |f: &SourceFile| tx(f).is_none_or(|r| r.tx_count >= min_tx);
        // prefer a member that passes the activity filter
        let keep = members.iter().position(active);
        match keep {
            Some(k) => {
                if members.len() > 1 {
                    summary.duplicates.push(DuplicateGroup {
                        content_hash: hash,
                        kept: display_path(&members[k].path),
                        dropped: members.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, f)| display_path(&f.path)).collect(),
                    });
                }
                let f = members[k].clone();
                if let Some(r) = tx(&f) {
                    meta_of.insert(display_path(&f.path), r.clone());
                }
                files.push(f);
            }
            None => {
                if members.len() > 1 {
                    summary.duplicates.push(DuplicateGroup {
                        content_hash: hash,
                        kept: display_path(&members[0].path),
                        dropped: members[1..].iter().map(|f| display_path(&f.path)).collect(),
                    });
                }
                let f = &members[0];
                summary.filtered.push(Filtered { path: display_path(&f.path), tx_count: tx(f).map_or(0, |r| r.tx_count) });
            }
        }
    }
    files.sort_by_key(|f| display_path(&f.path));
    summary.scanned = files.iter().map(|f| display_path(&f.path)).collect();
    summary.duplicates.sort_by(|a, b| a.kept.cmp(&b.kept));
    summary.filtered.sort_by(|a, b| a.path.cmp(&b.path));
    io_errors.sort_by(|a, b| a.path.cmp(&b.path));
    summary.io_errors = io_errors;
    if let Some(m) = metadata {
        summary.metadata_errors = m.malformed.clone();
    }
    Corpus { files, metadata: meta_of, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_keeps_first_sorted_path_and_filters_inactive() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        for (name, body) in [("a.sol", "contract A {}"), ("b.sol", "contract A {}"), ("c.sol", "contract C {}"), ("d.txt", "x")] {
            std::fs::write(d.join(name), body).unwrap();
        }
        let meta = Metadata::parse("{\"path\":\"c.sol\",\"tx_count\":1}\n", d);
        let c = prepare(&[d.to_path_buf()], Some(&meta), 2, true);
        assert_eq!(c.summary.discovered, 3);
        assert_eq!(c.files.len(), 1);
        assert!(c.summary.scanned[0].ends_with("a.sol"));
        assert!(c.summary.duplicates[0].dropped[0].ends_with("b.sol"));
        assert!(c.summary.filtered[0].path.ends_with("c.sol"));

        let all = prepare(&[d.to_path_buf()], Some(&meta), 0, false);
        assert_eq!(all.files.len(), 3);
    }

    #[test]
    fn missing_input_is_an_io_error() {
        let c = prepare(&[PathBuf::from("/definitely/not/here")], None, 2, true);
        assert_eq!(c.summary.io_errors.len(), 1);
        assert!(c.files.is_empty());
    }
}
