//! Output files of one run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Result, RunError};

/// An output directory that remembers what was written to it.
pub struct Sink {
    dir: PathBuf,
    files: Vec<String>,
}

impl Sink {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
        Ok(Sink {
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Record a file that a worker wrote straight into the directory.
    pub fn register(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::io(&path, e))?;
        self.files.push(name.to_owned());
        Ok(BufWriter::new(file))
    }

    /// One row per record; the header comes from the record's field names.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()
            .map_err(|e| RunError::io(self.dir.join(name), e))?;
        Ok(())
    }

    /// Like [`Sink::csv`] with an explicit header, for headers that are not identifiers.
    pub fn csv_with_header<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(self.open(name)?);
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()
            .map_err(|e| RunError::io(self.dir.join(name), e))?;
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| RunError::io(self.dir.join(name), e))
    }

    pub fn jsonl<T: Serialize>(
        &mut self,
        name: &str,
        lines: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let mut w = self.open(name)?;
        for line in lines {
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w).map_err(|e| RunError::io(self.dir.join(name), e))?;
        }
        w.flush().map_err(|e| RunError::io(self.dir.join(name), e))
    }
}

/// Write a CSV file outside a [`Sink`] (from a worker thread).
pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let file = File::create(path).map_err(|e| RunError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| RunError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| RunError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: Option<f64>,
    }

    #[test]
    fn csv_header_and_empty_options() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = Sink::create(dir.path().join("x")).unwrap();
        sink.csv("r.csv", [Row { a: 1, b: None }, Row { a: 2, b: Some(0.5) }])
            .unwrap();
        sink.csv_with_header("h.csv", &["pair", "ζ"], [(0u32, Some(3u64)), (1, None)])
            .unwrap();
        assert_eq!(sink.files(), ["r.csv", "h.csv"]);
        let text = std::fs::read_to_string(sink.dir().join("r.csv")).unwrap();
        assert_eq!(text, "a,b\n1,\n2,0.5\n");
        let text = std::fs::read_to_string(sink.dir().join("h.csv")).unwrap();
        assert_eq!(text, "pair,ζ\n0,3\n1,\n");
    }
}
