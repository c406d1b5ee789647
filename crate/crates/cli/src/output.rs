//! JSON and CSV writers targeting stdout or `--out`.

use crate::config::RunConfig;
use crate::Failure;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};

/// A real in scientific notation with 17 significant digits, enough for a
/// lossless round trip of any `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn sink(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize + ?Sized>(cfg: &RunConfig, value: &T) -> Result<(), Failure> {
    let mut w = sink(cfg)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Other(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows of preformatted cells under a header.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn write(&self, cfg: &RunConfig) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(sink(cfg)?);
        let csv_err = |e: csv::Error| Failure::Other(e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}
