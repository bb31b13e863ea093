use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, DatasetSpec, DatasetStats, SampleRecord};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Writes through a temp file in the target directory, then renames.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), DatasetError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), DatasetError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(&dir))?;
    let file = tmp.reopen().map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(io_err(path))?;
    drop(w);
    tmp.persist(path).map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub(crate) fn write_record<W: Write>(w: &mut W, r: &SampleRecord) -> Result<(), DatasetError> {
    serde_json::to_writer(&mut *w, r)?;
    w.write_all(b"\n").map_err(|source| DatasetError::Io { path: PathBuf::new(), source })
}

pub fn write_jsonl(path: &Path, records: &[SampleRecord]) -> Result<(), DatasetError> {
    write_atomic(path, |w| records.iter().try_for_each(|r| write_record(w, r)))
}

/// Reads a JSONL dataset; blank lines are skipped, errors carry the 1-based
/// line number.
pub fn read_jsonl(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| DatasetError::Parse { line: i + 1, source })?;
        out.push(rec);
    }
    Ok(out)
}

/// Hex SHA-256 of the file's bytes.
pub fn digest_file(path: &Path) -> Result<String, DatasetError> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn manifest_path(dataset: &Path) -> PathBuf {
    let mut s = dataset.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub generated_at: String,
    pub spec: Option<DatasetSpec>,
    pub dataset_file: PathBuf,
    pub records: usize,
    pub sha256: String,
    pub stats: DatasetStats,
}

impl Manifest {
    pub fn new(spec: &DatasetSpec, dataset: &Path, stats: DatasetStats) -> Result<Self, DatasetError> {
        Self::describe(Some(spec.clone()), dataset, stats)
    }

    /// Manifest for a dataset file that did not come from a spec.
    pub fn describe(spec: Option<DatasetSpec>, dataset: &Path, stats: DatasetStats) -> Result<Self, DatasetError> {
        Ok(Manifest {
            tool_version: TOOL_VERSION.to_string(),
            generated_at: chrono::Utc::now().to_rfc3339(),
            spec,
            dataset_file: dataset.file_name().map_or_else(|| dataset.to_path_buf(), PathBuf::from),
            records: stats.records,
            sha256: digest_file(dataset)?,
            stats,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            w.write_all(b"\n").map_err(io_err(path))
        })
    }

    /// True when `dataset` still hashes to the recorded digest.
    pub fn verify(&self, dataset: &Path) -> Result<bool, DatasetError> {
        Ok(digest_file(dataset)? == self.sha256)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}
