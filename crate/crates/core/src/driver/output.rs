use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::AdaptiveRecord;
use crate::{Error, Result};

pub fn csv_header(n_q: usize) -> Vec<String> {
    let mut h: Vec<String> = ["level", "n_elements", "eta_total", "zeta_total", "rho", "classical_rho"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n_q).map(|i| format!("p_{i}")));
    h.extend(["p_error", "marked_count", "wall_time_ms"].iter().map(|s| s.to_string()));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_row(r: &AdaptiveRecord, n_q: usize) -> Vec<String> {
    let mut row = vec![
        r.level.to_string(),
        r.n_elements.to_string(),
        r.eta_total.to_string(),
        r.zeta_total.to_string(),
        r.rho.to_string(),
        opt(r.classical_rho),
    ];
    match &r.p_estimate {
        Some(p) => row.extend(p.iter().map(|x| x.to_string())),
        None => row.extend(std::iter::repeat_n(String::new(), n_q)),
    }
    row.push(opt(r.p_error));
    row.push(r.marked_count.to_string());
    row.push(format!("{:.3}", r.wall_time_ms));
    row
}

/// Writes records as they arrive, flushing after every row.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
    n_q: usize,
}

impl RecordWriter<File> {
    pub fn create(path: &Path, n_q: usize) -> Result<Self> {
        Self::new(File::create(path)?, n_q)
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W, n_q: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(csv_header(n_q))?;
        inner.flush()?;
        Ok(Self { inner, n_q })
    }

    pub fn write(&mut self, record: &AdaptiveRecord) -> Result<()> {
        self.inner.write_record(csv_row(record, self.n_q))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records<W: Write>(out: W, records: &[AdaptiveRecord], n_q: usize) -> Result<()> {
    let mut w = RecordWriter::new(out, n_q)?;
    records.iter().try_for_each(|r| w.write(r))
}

/// `(n_elements, column)` pairs of a results file; rows with an empty entry are skipped.
pub fn read_column(path: &Path, column: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("no column '{name}' in {}", path.display())))
    };
    let n_col = find("n_elements")?;
    let q_col = find(column)?;
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{s}'")));
    let mut n = Vec::new();
    let mut q = Vec::new();
    for row in reader.records() {
        let row = row?;
        let value = row.get(q_col).unwrap_or("");
        if value.is_empty() {
            continue;
        }
        n.push(parse(row.get(n_col).unwrap_or(""))?);
        q.push(parse(value)?);
    }
    Ok((n, q))
}
