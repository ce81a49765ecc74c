use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DefectKind {
    MFS,
    CVS,
    MT,
    SPA,
    SS,
    IOR,
}

impl DefectKind {
    pub const ALL: [DefectKind; 6] = [DefectKind::MFS, DefectKind::CVS, DefectKind::MT, DefectKind::SPA, DefectKind::SS, DefectKind::IOR];

    pub fn code(self) -> &'static str {
        match self {
            DefectKind::MFS => "MFS",
            DefectKind::CVS => "CVS",
            DefectKind::MT => "MT",
            DefectKind::SPA => "SPA",
            DefectKind::SS => "SS",
            DefectKind::IOR => "IOR",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            DefectKind::MFS => "Mint Function with Single Signature",
            DefectKind::CVS => "Critical Variables Manipulation with Single Signature",
            DefectKind::MT => "Management without Timelock",
            DefectKind::SPA => "Single Proxy Admin",
            DefectKind::SS => "Self-destruct with Single Signature",
            DefectKind::IOR => "Individual Contract Output Reliance",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            DefectKind::MFS => "There are functions for arbitrary token minting controlled by a single-signature address.",
            DefectKind::CVS => "Critical variables can be manipulated with a single-signature address.",
            DefectKind::MT => "Management functions can be executed without time delay.",
            DefectKind::SPA => "The admin of the proxy contract is a single-signature address.",
            DefectKind::SS => "The self-destruct function can be executed by a single-signature address.",
            DefectKind::IOR => "Existing logic relies on the output of an individual external contract.",
        }
    }

    pub fn remediation(self) -> &'static str {
        match self {
            DefectKind::MFS => "Eliminate the mint function or implement multi-signature verification prior to minting.",
            DefectKind::CVS => "Implement multi-signature verification prior to modifying critical variables.",
            DefectKind::MT => "Implement timelock mechanism prior to the execution of management functions.",
            DefectKind::SPA => "Transfer administrative permissions of a proxy contract to a multi-signature wallet contract.",
            DefectKind::SS => "Eliminate self-destruct or implement multi-signature verification prior to self-destruct.",
            DefectKind::IOR => "Implement verification of contract output or combine multiple contract outputs.",
        }
    }

    /// Kinds whose negative premise is the absence of a multisig check.
    pub fn needs_multisig(self) -> bool {
        matches!(self, DefectKind::MFS | DefectKind::CVS | DefectKind::SPA | DefectKind::SS)
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown defect code `{0}` (expected one of MFS, CVS, MT, SPA, SS, IOR)")]
pub struct UnknownKind(pub String);

impl FromStr for DefectKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DefectKind::ALL.into_iter().find(|k| k.code().eq_ignore_ascii_case(s.trim())).ok_or_else(|| UnknownKind(s.to_string()))
    }
}
