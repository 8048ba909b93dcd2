//! Run manifests: everything needed to reproduce an output directory.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// SHA-256 of the input file, when there is one.
    pub input_digest: Option<String>,
    pub version: String,
    /// Seconds since the Unix epoch. Kept out of the data files so reruns
    /// stay byte-identical.
    pub timestamp: u64,
    /// Values derived during the run (tuning constants, selected λ).
    pub derived: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, flags: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            flags,
            seed,
            input_digest: None,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            derived: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, path: &Path) -> io::Result<Self> {
        self.input_digest = Some(file_digest(path)?);
        Ok(self)
    }

    pub fn derive(&mut self, key: &str, value: impl ToString) {
        self.derived.insert(key.to_owned(), value.to_string());
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        crate::report::write_json(&dir.join("manifest.json"), self)
    }
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(file_digest(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
