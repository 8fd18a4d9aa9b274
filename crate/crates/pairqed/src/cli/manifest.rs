//! Deterministic run manifests: every run echoes its resolved config and
//! records a SHA-256 digest per emitted file, so identical configs can be
//! verified to reproduce byte-identical outputs.

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files during a run and renders the manifest.
pub struct RunManifest {
    command: String,
    out_dir: PathBuf,
    files: Vec<(String, String)>,
    start: std::time::Instant,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(RunManifest {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
            start: std::time::Instant::now(),
            warnings: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Write a file into the run directory and record its digest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files
            .push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    /// Digests of all files written so far, in write order.
    pub fn digests(&self) -> &[(String, String)] {
        &self.files
    }

    /// Render and write `manifest.txt`; consumes the manifest.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        text.push_str("# pairqed run manifest\n");
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!(
            "duration_ms = {}\n",
            self.start.elapsed().as_millis()
        ));
        text.push_str("\n[outputs]\n");
        for (name, digest) in &self.files {
            text.push_str(&format!("{name} = sha256:{digest}\n"));
        }
        if !self.warnings.is_empty() {
            text.push_str("\n[warnings]\n");
            for w in &self.warnings {
                text.push_str(&format!("# {w}\n"));
            }
        }
        let path = self.out_dir.join("manifest.txt");
        std::fs::write(&path, &text)
            .map_err(|e| CliError::Io(format!("cannot write manifest: {e}")))?;
        self.files.clear();
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"hello"),
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
    }
}
