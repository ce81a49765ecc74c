//! Transaction-record check for ownership that was handed to a multisig
//! wallet or timelock after deployment. Such a handover makes the
//! corresponding source-level findings moot, so they are marked suppressed.
//!
//! Records are NDJSON, one transaction per line:
//!
//! ```json
//! {"tx_hash":"0x..","from":"0x..","to":"0x..","input":"0xf2fde38b..","timestamp":1690000000}
//! ```
//!
//! `selector` and `args_addresses` may be given instead of `input`.
//!
//! The governor registry is line based; `#` starts a comment:
//!
//! ```text
//! 0x1111111111111111111111111111111111111111 multisig
//! 0x2222222222222222222222222222222222222222 timelock
//! 0x3333333333333333333333333333333333333333 source governors/Safe.sol
//! ```
//!
//! A `source` entry is classified by scanning the file: any function with a
//! multisig check makes it a multisig, any with a timelock check a timelock.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Keccak256};

use crate::analysis::{analyze, AnalysisOptions};
use crate::detector::{DefectKind, ScanReport};
use crate::frontend::SourceFile;

/// Ownership or admin transfers recognised in transaction input.
pub const TRANSFER_FUNCTIONS: [&str; 4] =
    ["transferOwnership(address)", "setOwner(address)", "changeAdmin(address)", "transferAdmin(address)"];

pub fn selector(signature: &str) -> [u8; 4] {
    let h = Keccak256::digest(signature.as_bytes());
    [h[0], h[1], h[2], h[3]]
}

fn transfer_function(sel: [u8; 4]) -> Option<&'static str> {
    TRANSFER_FUNCTIONS.into_iter().find(|s| selector(s) == sel)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Address(pub [u8; 20]);

impl FromStr for Address {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let h = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
        let bytes = hex::decode(h).map_err(|e| format!("bad address `{s}`: {e}"))?;
        let arr: [u8; 20] = bytes.try_into().map_err(|_| format!("bad address `{s}`: expected 20 bytes"))?;
        Ok(Address(arr))
    }
}

impl TryFrom<String> for Address {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Address> for String {
    fn from(a: Address) -> String {
        a.to_string()
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub tx_hash: String,
    pub from: Address,
    pub to: Address,
    pub selector: [u8; 4],
    pub args_addresses: Vec<Address>,
    pub timestamp: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    tx_hash: String,
    #[serde(alias = "from_addr")]
    from: String,
    #[serde(alias = "to_addr")]
    to: String,
    #[serde(default)]
    input: Option<String>,
    #[serde(default)]
    selector: Option<String>,
    #[serde(default)]
    args_addresses: Vec<String>,
    timestamp: u64,
}

fn decode_hex(s: &str) -> Result<Vec<u8>, String> {
    let h = s.trim().strip_prefix("0x").unwrap_or(s.trim());
    hex::decode(h).map_err(|e| format!("bad hex: {e}"))
}

impl TryFrom<RawRecord> for TxRecord {
    type Error = String;

    fn try_from(r: RawRecord) -> Result<Self, String> {
        let from = r.from.parse()?;
        let to = r.to.parse()?;
        let input = r.input.as_deref().map(decode_hex).transpose()?;
        let selector: [u8; 4] = match (&r.selector, &input) {
            (Some(s), _) => decode_hex(s)?.try_into().map_err(|_| "selector must be 4 bytes".to_string())?,
            (None, Some(i)) if i.len() >= 4 => [i[0], i[1], i[2], i[3]],
            (None, Some(_)) => return Err("input shorter than a selector".into()),
            (None, None) => return Err("record has neither input nor selector".into()),
        };
        let mut args_addresses = r.args_addresses.iter().map(|a| a.parse()).collect::<Result<Vec<Address>, _>>()?;
        if args_addresses.is_empty() && transfer_function(selector).is_some() {
            if let Some(i) = &input {
                let word = i.get(4..36).ok_or("input too short for an address argument")?;
                if word[..12].iter().any(|&b| b != 0) {
                    return Err("address argument has non-zero padding".into());
                }
                args_addresses.push(Address(word[12..].try_into().expect("20 bytes")));
            }
        }
        Ok(TxRecord { tx_hash: r.tx_hash, from, to, selector, args_addresses, timestamp: r.timestamp })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordSet {
    pub records: Vec<TxRecord>,
    /// Skipped lines, 1-based.
    pub malformed: Vec<MalformedRecord>,
}

pub fn parse_records(text: &str) -> RecordSet {
    let mut out = RecordSet::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(line).map_err(|e| e.to_string()).and_then(TxRecord::try_from);
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => out.malformed.push(MalformedRecord { line: i + 1, message }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GovernorKind {
    Multisig,
    Timelock,
}

impl GovernorKind {
    /// Defect kinds a handover to this kind of governor resolves.
    pub fn resolves(self, k: DefectKind) -> bool {
        match self {
            GovernorKind::Multisig => k.needs_multisig(),
            GovernorKind::Timelock => k == DefectKind::MT,
        }
    }
}

impl fmt::Display for GovernorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GovernorKind::Multisig => "multisig wallet",
            GovernorKind::Timelock => "timelock",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    pub governors: BTreeMap<Address, BTreeSet<GovernorKind>>,
}

impl Registry {
    pub fn insert(&mut self, a: Address, k: GovernorKind) {
        self.governors.entry(a).or_default().insert(k);
    }

    pub fn kinds(&self, a: &Address) -> impl Iterator<Item = GovernorKind> + '_ {
        self.governors.get(a).into_iter().flatten().copied()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("governor registry line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("governor source {}: {message}", path.display())]
    Source { path: PathBuf, message: String },
}

/// `base` resolves relative `source` paths.
pub fn parse_registry(text: &str, base: &Path) -> Result<Registry, RegistryError> {
    let mut reg = Registry::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| RegistryError::Syntax { line: i + 1, message };
        let mut parts = line.split_whitespace();
        let addr: Address = parts.next().unwrap_or_default().parse().map_err(err)?;
        match (parts.next(), parts.next(), parts.next()) {
            (Some("multisig"), None, _) => reg.insert(addr, GovernorKind::Multisig),
            (Some("timelock"), None, _) => reg.insert(addr, GovernorKind::Timelock),
            (Some("source"), Some(p), None) => {
                let path = base.join(p);
                let file = SourceFile::read(&path)
                    .map_err(|e| RegistryError::Source { path: path.clone(), message: e.to_string() })?;
                for k in classify_source(&file) {
                    reg.insert(addr, k);
                }
            }
            _ => return Err(err(format!("expected `<address> multisig|timelock|source <path>`, got `{line}`"))),
        }
    }
    Ok(reg)
}

/// Governor kinds implemented by the contracts in `file`.
pub fn classify_source(file: &SourceFile) -> BTreeSet<GovernorKind> {
    let a = analyze(file, &AnalysisOptions::default());
    let mut out = BTreeSet::new();
    for u in &a.units {
        for f in u.pdg.facts.iter() {
            if f.multisig {
                out.insert(GovernorKind::Multisig);
            }
            if f.timelock {
                out.insert(GovernorKind::Timelock);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handover {
    pub contract: Address,
    pub governor: Address,
    pub kind: GovernorKind,
    pub function: String,
    pub tx_hash: String,
    pub timestamp: u64,
}

impl Handover {
    pub fn describe(&self) -> String {
        format!("{} {} passed control to {} {} in {}", self.contract, self.function, self.kind, self.governor, self.tx_hash)
    }
}

/// For each contract, the latest recognised transfer decides: if its new
/// owner is a registered governor the result holds one entry per kind of
/// that governor.
pub fn handovers(records: &[TxRecord], registry: &Registry) -> BTreeMap<Address, Vec<Handover>> {
    let mut latest: BTreeMap<Address, &TxRecord> = BTreeMap::new();
    for r in records {
        if transfer_function(r.selector).is_none() || r.args_addresses.is_empty() {
            continue;
        }
        let e = latest.entry(r.to).or_insert(r);
        if (r.timestamp, &r.tx_hash) > (e.timestamp, &e.tx_hash) {
            *e = r;
        }
    }
    latest
        .into_iter()
        .filter_map(|(contract, r)| {
            let governor = r.args_addresses[0];
            let hs: Vec<Handover> = registry
                .kinds(&governor)
                .map(|kind| Handover {
                    contract,
                    governor,
                    kind,
                    function: transfer_function(r.selector).unwrap_or_default().to_string(),
                    tx_hash: r.tx_hash.clone(),
                    timestamp: r.timestamp,
                })
                .collect();
            (!hs.is_empty()).then_some((contract, hs))
        })
        .collect()
}

/// Marks findings in `report` resolved by `hs`. `contract` limits the
/// effect to one contract of the file. Returns the number newly suppressed.
pub fn apply(report: &mut ScanReport, contract: Option<&str>, hs: &[Handover]) -> usize {
    let mut n = 0;
    for c in report.contracts.iter_mut().filter(|c| contract.is_none_or(|n| n == c.name)) {
        for f in c.findings.iter_mut().filter(|f| f.suppressed_by_crosschain.is_none()) {
            if let Some(h) = hs.iter().find(|h| h.kind.resolves(f.kind)) {
                f.suppressed_by_crosschain = Some(h.describe());
                n += 1;
            }
        }
        c.refresh_flags();
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    const OWNER: &str = "0x1111111111111111111111111111111111111111";
    const TOKEN: &str = "0x2222222222222222222222222222222222222222";
    const SAFE: &str = "0x3333333333333333333333333333333333333333";

    fn input(sig: &str, a: &str) -> String {
        format!("0x{}{:0>64}", hex::encode(selector(sig)), a.trim_start_matches("0x"))
    }

    #[test]
    fn selectors_match_known_values() {
        assert_eq!(hex::encode(selector("transferOwnership(address)")), "f2fde38b");
        assert_eq!(hex::encode(selector("transfer(address,uint256)")), "a9059cbb");
    }

    #[test]
    fn decodes_transfer_argument_and_skips_bad_lines() {
        let text = format!(
            "{{\"tx_hash\":\"0xaa\",\"from\":\"{OWNER}\",\"to\":\"{TOKEN}\",\"input\":\"{}\",\"timestamp\":5}}\nnot json\n\n{{\"tx_hash\":\"0xbb\",\"from\":\"{OWNER}\",\"to\":\"0x12\",\"selector\":\"0xf2fde38b\",\"timestamp\":6}}\n",
            input("transferOwnership(address)", SAFE)
        );
        let set = parse_records(&text);
        assert_eq!(set.records.len(), 1);
        assert_eq!(set.records[0].args_addresses, vec![SAFE.parse().unwrap()]);
        assert_eq!(set.malformed.iter().map(|m| m.line).collect::<Vec<_>>(), vec![2, 4]);
    }

    #[test]
    fn latest_transfer_wins() {
        let rec = |t, to: &str| TxRecord {
            tx_hash: format!("0x{t}"),
            from: OWNER.parse().unwrap(),
            to: TOKEN.parse().unwrap(),
            selector: selector("transferOwnership(address)"),
            args_addresses: vec![to.parse().unwrap()],
            timestamp: t,
        };
        let reg = parse_registry(&format!("{SAFE} multisig # the safe\n"), Path::new(".")).unwrap();
        let hs = handovers(&[rec(1, OWNER), rec(2, SAFE)], &reg);
        assert_eq!(hs[&TOKEN.parse().unwrap()][0].kind, GovernorKind::Multisig);
        assert!(handovers(&[rec(2, OWNER), rec(1, SAFE)], &reg).is_empty());
    }

    #[test]
    fn registry_rejects_garbage() {
        assert!(parse_registry("0x12 multisig", Path::new(".")).is_err());
        assert!(parse_registry(&format!("{SAFE} wallet"), Path::new(".")).is_err());
    }
}
