//! Atomic artifact writing with provenance headers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, VERSION};

/// Identifies the inputs behind an artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_text: &[u8], seed: u64) -> Self {
        Self {
            tool_version: VERSION,
            config_sha256: hex::encode(Sha256::digest(config_text)),
            seed,
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# minmax-lab {} config-sha256={} seed={}\n",
            self.tool_version, self.config_sha256, self.seed
        )
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// A CSV document: provenance comment, optional extra comments, header,
/// then rows. Fields are quoted only when needed.
pub fn csv_document(
    prov: &Provenance,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<u8>, CliError> {
    let mut out = prov.comment_line().into_bytes();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Versioned JSON envelope around a payload.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format: &'a str,
    format_version: u32,
    #[serde(flatten)]
    provenance: &'a Provenance,
    result: &'a T,
}

pub const JSON_FORMAT_VERSION: u32 = 1;

pub fn json_document<T: Serialize>(format: &str, prov: &Provenance, result: &T) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        format,
        format_version: JSON_FORMAT_VERSION,
        provenance: prov,
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}
