//! Dataset manifests: plain text, one utterance per line,
//! `id <TAB> feature-or-audio path [<TAB> transcript path]`.
//!
//! Paths are resolved relative to the manifest's directory, so a manifest can
//! be generated once and used from anywhere. All referenced paths must exist
//! at load time.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: expected `id<TAB>path[<TAB>transcript]`, found {found} field(s)")]
    FieldCount { line: usize, found: usize },
    #[error("manifest line {line}: duplicate utterance id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("manifest references missing file(s): {0}")]
    MissingFiles(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct ManifestEntry {
    pub id: String,
    pub data_path: PathBuf,
    pub transcript_path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut missing: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() {
                return Err(ManifestError::FieldCount {
                    line: idx + 1,
                    found: fields.len(),
                });
            }
            let id = fields[0].to_string();
            if !seen.insert(id.clone()) {
                return Err(ManifestError::DuplicateId { line: idx + 1, id });
            }
            let data_path = base.join(fields[1]);
            if !data_path.is_file() {
                missing.push(data_path.display().to_string());
            }
            let transcript_path = match fields.get(2) {
                Some(t) if !t.is_empty() => {
                    let p = base.join(t);
                    if !p.is_file() {
                        missing.push(p.display().to_string());
                    }
                    Some(p)
                }
                _ => None,
            };
            entries.push(ManifestEntry {
                id,
                data_path,
                transcript_path,
            });
        }

        if !missing.is_empty() {
            return Err(ManifestError::MissingFiles(missing.join(", ")));
        }
        Ok(Manifest { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}
