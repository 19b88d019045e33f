//! Per-run manifest: what ran, with which inputs and seed, producing which
//! artifact hashes. Re-running a command with the inputs and seed recorded
//! here reproduces the output files byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub base_seed: u64,
    pub configs: Vec<(PathBuf, String)>,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<(PathBuf, String)>,
    pub timestamp: String,
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>, base_seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            base_seed,
            configs: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn add_config(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.configs.push((path.to_path_buf(), sha256_file(path)?));
        Ok(())
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.push((path.to_path_buf(), sha256_file(path)?));
        Ok(())
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.outputs.push((path.to_path_buf(), sha256_file(path)?));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("subcommand={}\n", self.subcommand));
        s.push_str(&format!("seed={}\n", self.base_seed));
        s.push_str(&format!("timestamp={}\n", self.timestamp));
        for (label, list) in
            [("config", &self.configs), ("input", &self.inputs), ("output", &self.outputs)]
        {
            for (path, hash) in list {
                s.push_str(&format!("{label}={} sha256:{hash}\n", path.display()));
            }
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn hashes_and_renders() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"abc").unwrap();
        f.flush().unwrap();
        let h = sha256_file(f.path()).unwrap();
        // Known SHA-256 of "abc".
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let mut m = RunManifest::new("rank", 42);
        m.add_input(f.path()).unwrap();
        let text = m.render();
        assert!(text.contains("subcommand=rank"));
        assert!(text.contains(&h));
    }
}
