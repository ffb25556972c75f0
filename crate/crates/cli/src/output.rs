//! Provenance header and the two output encodings.
//!
//! Outputs carry no timestamps or host data, so identical inputs give
//! identical bytes.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the effective configuration, serialized as compact JSON.
    pub config_sha256: String,
    /// Relations of the model exercised by this run.
    pub relations: Vec<&'static str>,
}

impl Provenance {
    pub fn new<C: Serialize>(
        command: &str,
        config: &C,
        relations: &[&'static str],
    ) -> anyhow::Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        let digest = Sha256::digest(&canonical);
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            tool: "qemerge",
            version: VERSION,
            command: command.to_string(),
            config_sha256,
            relations: relations.to_vec(),
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# config-sha256: {}\n# relations: {}\n",
            self.tool,
            self.version,
            self.command,
            self.config_sha256,
            self.relations.join(", ")
        )
    }
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Pretty JSON object with `provenance` as its first key.
pub fn json<T: Serialize>(
    path: Option<&Path>,
    provenance: &Provenance,
    body: &T,
) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(&WithProvenance { provenance, body })?;
    bytes.push(b'\n');
    write_out(path, &bytes)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(provenance: &Provenance, columns: &[S]) -> Self {
        let mut text = provenance.csv_header();
        let columns: Vec<&str> = columns.iter().map(AsRef::as_ref).collect();
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn comment(&mut self, line: &str) {
        self.text.push_str("# ");
        self.text.push_str(line);
        self.text.push('\n');
    }

    pub fn finish(self, path: Option<&Path>) -> anyhow::Result<()> {
        write_out(path, self.text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        let a = Provenance::new("demo", &serde_json::json!({"x": 1}), &[]).unwrap();
        let b = Provenance::new("demo", &serde_json::json!({"x": 1}), &[]).unwrap();
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
