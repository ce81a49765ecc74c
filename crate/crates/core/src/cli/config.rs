//! Scan configuration. Sources, lowest precedence first: defaults, the TOML
//! file named by `CDSENTRY_CONFIG`, command-line flags.
//!
//! The file uses the flag names with underscores:
//!
//! ```toml
//! rules = ["MFS", "CVS", "MT"]   # or "MFS,CVS,MT"
//! format = "json"                # text | json | sarif
//! min_tx = 2
//! metadata = "meta.ndjson"
//! dedup = true
//! ior_distinct_sites = false
//! ior_respect_guards = false
//! exclude_privilege_vars = false
//! unsupported = "warn"           # warn | error
//! jobs = 4
//! crosschain = "records.ndjson"
//! governors = "governors.txt"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::analysis::AnalysisOptions;
use crate::detector::DefectKind;
use crate::frontend::{ParseOptions, Severity};
use crate::sensors::{SensorOptions, TaintOptions};

pub const CONFIG_ENV: &str = "CDSENTRY_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Sarif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UnsupportedLevel {
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanConfig {
    pub rules: BTreeSet<DefectKind>,
    pub ior_distinct_sites: bool,
    pub ior_respect_guards: bool,
    pub exclude_privilege_vars: bool,
    pub unsupported: UnsupportedLevel,
    pub min_tx_count: u64,
    pub dedup: bool,
    pub metadata: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    pub crosschain: Option<PathBuf>,
    pub governors: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            rules: DefectKind::ALL.into(),
            ior_distinct_sites: false,
            ior_respect_guards: false,
            exclude_privilege_vars: false,
            unsupported: UnsupportedLevel::Warn,
            min_tx_count: 2,
            dedup: true,
            metadata: None,
            format: Format::Text,
            jobs: None,
            crosschain: None,
            governors: None,
        }
    }
}

impl ScanConfig {
    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            rules: self.rules.clone(),
            sensors: SensorOptions {
                exclude_privilege_vars: self.exclude_privilege_vars,
                taint: TaintOptions { distinct_sites: self.ior_distinct_sites, respect_guards: self.ior_respect_guards },
            },
            parse: ParseOptions {
                unsupported_severity: match self.unsupported {
                    UnsupportedLevel::Warn => Severity::Warning,
                    UnsupportedLevel::Error => Severity::Error,
                },
            },
        }
    }

    /// Overlays the settings present in `file`. Relative paths in the file
    /// are resolved against `base`.
    pub fn apply_file(&mut self, file: ConfigFile, base: &Path) -> Result<(), ConfigError> {
        if let Some(r) = file.rules {
            self.rules = r.parse()?;
        }
        let path = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = file.$field { self.$target = v; })*
            };
        }
        set!(ior_distinct_sites => ior_distinct_sites, ior_respect_guards => ior_respect_guards,
             exclude_privilege_vars => exclude_privilege_vars, unsupported => unsupported,
             min_tx => min_tx_count, dedup => dedup, format => format);
        if let Some(j) = file.jobs {
            self.jobs = Some(j);
        }
        self.metadata = file.metadata.map(path).or(self.metadata.take());
        self.crosschain = file.crosschain.map(path).or(self.crosschain.take());
        self.governors = file.governors.map(path).or(self.governors.take());
        Ok(())
    }

    /// Reads the file named by `CDSENTRY_CONFIG` when it is set.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut cfg = ScanConfig::default();
        if let Some(p) = std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()) {
            let p = PathBuf::from(p);
            let file = ConfigFile::read(&p)?;
            cfg.apply_file(file, p.parent().unwrap_or(Path::new(".")))?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RulesValue {
    List(Vec<String>),
    Csv(String),
}

impl RulesValue {
    fn parse(self) -> Result<BTreeSet<DefectKind>, ConfigError> {
        let items: Vec<String> = match self {
            RulesValue::List(v) => v,
            RulesValue::Csv(s) => s.split(',').map(str::to_string).collect(),
        };
        parse_rules(items.iter().map(String::as_str))
    }
}

pub fn parse_rules<'a>(items: impl Iterator<Item = &'a str>) -> Result<BTreeSet<DefectKind>, ConfigError> {
    items.filter(|s| !s.trim().is_empty()).map(|s| DefectKind::from_str(s).map_err(ConfigError::from)).collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub rules: Option<RulesValue>,
    pub format: Option<Format>,
    pub min_tx: Option<u64>,
    pub metadata: Option<PathBuf>,
    pub dedup: Option<bool>,
    pub ior_distinct_sites: Option<bool>,
    pub ior_respect_guards: Option<bool>,
    pub exclude_privilege_vars: Option<bool>,
    pub unsupported: Option<UnsupportedLevel>,
    pub jobs: Option<usize>,
    pub crosschain: Option<PathBuf>,
    pub governors: Option<PathBuf>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Syntax { message, .. } => ConfigError::Syntax { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax { path: PathBuf::new(), message: e.message().to_string() })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error(transparent)]
    Rule(#[from] crate::detector::UnknownKind),
}
