//! Dataset CSV reading and writing, and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::points::Points;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// `path` with its extension replaced.
pub fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

pub fn dataset_header(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Header `x0,..,x{d-1}`, one point per row, LF line endings.
pub fn write_dataset(points: &Points) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(dataset_header(points.dim())).map_err(io)?;
    for row in points.rows() {
        w.write_record(row.iter().map(|x| format!("{x}"))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Parses a dataset CSV. Errors name the offending line.
pub fn read_dataset(text: &str) -> Result<Points> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(format!("dataset header: {e}")))?.clone();
    let d = header.len();
    let expected = dataset_header(d);
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse(format!("dataset header must be {}", expected.join(","))));
    }
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("dataset: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("dataset line {line}, column x{j}: {field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("dataset line {line}, column x{j}: non-finite value")));
            }
            data.push(v);
        }
    }
    if data.is_empty() {
        return Err(Error::Parse("dataset has no rows".into()));
    }
    Points::from_flat(d, data)
}
