//! Atomic file output: headered CSV tables, JSON summaries, per-edge profile
//! files, and MatrixMarket matrix dumps.
//!
//! Every write lands in a temporary file in the destination directory and is
//! renamed into place, so readers never observe a partial file. Numbers are
//! formatted with the standard shortest round-trip representation, which
//! makes repeated runs byte-identical.

use crate::error::{Error, Result};
use crate::graph::GraphFunction;
use crate::linalg::Csr;
use std::fmt::Write as _;
use std::path::Path;

/// Writes `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("not a file path: {}", path.display())))?;
    let mut tmp = dir.join(file_name);
    tmp.set_extension("tmp-partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// An in-memory CSV table with a fixed column count.
#[derive(Clone, Debug)]
pub struct CsvTable {
    buf: String,
    cols: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        CsvTable { buf, cols: header.len() }
    }

    /// Appends one row; cell count must match the header.
    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        if cells.len() != self.cols {
            return Err(Error::Validation(format!(
                "csv row has {} cells, header has {}",
                cells.len(),
                self.cols
            )));
        }
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
        Ok(())
    }

    pub fn contents(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.buf.as_bytes())
    }
}

/// Writes a JSON value as the run summary (pretty-printed; object keys are
/// emitted in sorted order, so output is deterministic).
pub fn write_summary(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("summary serialization: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes one `<edge-id>.csv` profile file per edge with columns `x,<label>`
/// (a second `im` column for complex data is the caller's concern: pass the
/// prepared columns through `extra`). Returns the written file names.
pub fn write_profile_csvs(
    dir: &Path,
    f: &GraphFunction,
    label: &str,
) -> Result<Vec<String>> {
    let domain = f.domain();
    let mut names = Vec::new();
    for (k, edge) in domain.graph.edges().iter().enumerate() {
        let em = domain.mesh.edge(k);
        let mut t = CsvTable::new(&["x", label]);
        for (i, v) in f.values()[k].iter().enumerate() {
            t.row(&[(i as f64 * em.h).to_string(), v.to_string()])?;
        }
        let name = format!("{}.csv", edge.id);
        t.write(&dir.join(&name))?;
        names.push(name);
    }
    Ok(names)
}

/// Dumps a sparse matrix in MatrixMarket coordinate format (1-based indices),
/// for inspection with external tools.
pub fn write_matrix_market(path: &Path, m: &Csr, comment: &str) -> Result<()> {
    let mut buf = String::new();
    buf.push_str("%%MatrixMarket matrix coordinate real general\n");
    for line in comment.lines() {
        let _ = writeln!(buf, "% {line}");
    }
    let _ = writeln!(buf, "{} {} {}", m.n(), m.n(), m.nnz());
    for i in 0..m.n() {
        let (cols, vals) = m.row(i);
        for (j, v) in cols.iter().zip(vals) {
            let _ = writeln!(buf, "{} {} {v}", i + 1, j + 1);
        }
    }
    write_atomic(path, buf.as_bytes())
}
