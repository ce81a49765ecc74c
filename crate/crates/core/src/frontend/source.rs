use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FrontendError;

/// SHA-256 of a file's raw bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        ContentHash(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self.to_hex())
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<ContentHash> for String {
    fn from(h: ContentHash) -> String {
        h.to_hex()
    }
}

impl TryFrom<String> for ContentHash {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let bytes = hex::decode(&s).map_err(|e| e.to_string())?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| format!("expected 32-byte digest, got `{s}`"))?;
        Ok(ContentHash(arr))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub content: String,
    pub content_hash: ContentHash,
}

impl SourceFile {
    pub fn new(path: impl Into<PathBuf>, content: impl Into<String>) -> Self {
        let content = content.into();
        let content_hash = ContentHash::of(content.as_bytes());
        SourceFile { path: path.into(), content, content_hash }
    }

    pub fn from_bytes(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Result<Self, FrontendError> {
        let path = path.into();
        let content_hash = ContentHash::of(&bytes);
        let content = String::from_utf8(bytes).map_err(|e| FrontendError::InvalidUtf8 {
            path: path.clone(),
            offset: e.utf8_error().valid_up_to(),
        })?;
        Ok(SourceFile { path, content, content_hash })
    }

    pub fn read(path: &Path) -> Result<Self, FrontendError> {
        let bytes = std::fs::read(path).map_err(|source| FrontendError::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(path, bytes)
    }

    /// Source text covered by `span`, or "" when the span is out of range.
    pub fn snippet(&self, span: crate::frontend::Span) -> &str {
        self.content.get(span.start..span.end).unwrap_or("")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_only_on_bytes() {
        let a = SourceFile::new("a.sol", "contract A {}");
        let b = SourceFile::new("elsewhere/b.sol", "contract A {}");
        let c = SourceFile::new("a.sol", "contract A { }");
        assert_eq!(a.content_hash, b.content_hash);
        assert_ne!(a.content_hash, c.content_hash);
    }

    #[test]
    fn rejects_invalid_utf8() {
        let err = SourceFile::from_bytes("x.sol", vec![b'a', 0xff, b'b']).unwrap_err();
        assert!(matches!(err, FrontendError::InvalidUtf8 { offset: 1, .. }));
    }

    #[test]
    fn hash_hex_round_trips() {
        let h = ContentHash::of(b"abc");
        assert_eq!(h.to_hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let back = ContentHash::try_from(h.to_hex()).unwrap();
        assert_eq!(back, h);
    }
}
