//! Result rows and the append-only CSV they live in.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// Fixed column order of every result file.
pub const HEADER: [&str; 11] = [
    "selector",
    "seed",
    "imbalance",
    "budget",
    "eta",
    "gamma_i",
    "gamma_l",
    "relearn_accuracy",
    "class_variance",
    "final_reservoir_n",
    "wall_ms",
];

/// One run of one configuration on one seed. Parameters a selector does not
/// use are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub selector: String,
    pub seed: u64,
    pub imbalance: usize,
    pub budget: usize,
    pub eta: Option<f64>,
    pub gamma_i: Option<f64>,
    pub gamma_l: Option<f64>,
    pub relearn_accuracy: f64,
    pub class_variance: f64,
    pub final_reservoir_n: u64,
    pub wall_ms: f64,
}

/// Identity of a row for resuming sweeps: everything but the measurements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowKey(String);

impl RowKey {
    pub fn new(
        selector: &str,
        seed: u64,
        imbalance: usize,
        budget: usize,
        eta: Option<f64>,
        gamma_i: Option<f64>,
        gamma_l: Option<f64>,
    ) -> Self {
        RowKey(format!("{selector}|{seed}|{imbalance}|{budget}|{eta:?}|{gamma_i:?}|{gamma_l:?}"))
    }
}

impl ResultRow {
    pub fn key(&self) -> RowKey {
        RowKey::new(&self.selector, self.seed, self.imbalance, self.budget, self.eta, self.gamma_i, self.gamma_l)
    }
}

pub enum Sink {
    File(csv::Writer<File>),
    Stdout(csv::Writer<io::Stdout>),
}

impl Sink {
    pub fn write(&mut self, row: &ResultRow) -> anyhow::Result<()> {
        match self {
            Sink::File(w) => {
                w.serialize(row)?;
                w.flush()?;
            }
            Sink::Stdout(w) => {
                w.serialize(row)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

pub fn stdout_sink() -> Sink {
    println!("{}", HEADER.join(","));
    Sink::Stdout(csv::WriterBuilder::new().has_headers(false).from_writer(io::stdout()))
}

/// Opens `path` for appending. A new or empty file gets the header; an
/// existing one must already carry it.
pub fn open_append(path: &Path) -> anyhow::Result<Sink> {
    let existing = read_rows(path)?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    if existing.is_none() {
        writeln!(file, "{}", HEADER.join(",")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Sink::File(csv::WriterBuilder::new().has_headers(false).from_writer(file)))
}

/// Rows already in `path`, or `None` when the file is missing or empty.
pub fn read_rows(path: &Path) -> anyhow::Result<Option<Vec<ResultRow>>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e).with_context(|| format!("cannot read {}", path.display())),
    };
    if bytes.is_empty() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers().with_context(|| format!("{}: unreadable header", path.display()))?;
    if header.iter().ne(HEADER) {
        bail!("{}: header {:?} does not match the result columns", path.display(), header);
    }
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .with_context(|| format!("{}: malformed result row", path.display()))?;
    Ok(Some(rows))
}

pub fn existing_keys(path: &Path) -> anyhow::Result<HashSet<RowKey>> {
    Ok(read_rows(path)?.unwrap_or_default().iter().map(ResultRow::key).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64) -> ResultRow {
        ResultRow {
            selector: "infors".into(),
            seed,
            imbalance: 10,
            budget: 200,
            eta: Some(1.0),
            gamma_i: Some(f64::NEG_INFINITY),
            gamma_l: None,
            relearn_accuracy: 0.75,
            class_variance: 12.5,
            final_reservoir_n: 4000,
            wall_ms: 3.25,
        }
    }

    #[test]
    fn rows_round_trip_through_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        open_append(&path).unwrap().write(&row(0)).unwrap();
        open_append(&path).unwrap().write(&row(1)).unwrap();
        let rows = read_rows(&path).unwrap().unwrap();
        assert_eq!(rows, vec![row(0), row(1)]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        assert_eq!(text.lines().count(), 3);
        assert!(existing_keys(&path).unwrap().contains(&row(1).key()));
    }

    #[test]
    fn foreign_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(open_append(&path).is_err());
    }
}
