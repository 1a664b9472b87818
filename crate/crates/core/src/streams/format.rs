//! On-disk dataset formats.
//!
//! Binary (little-endian): `b"MSL1"`, `u32 n`, `u32 d0`, `u32 K`, then
//! `n·d0` `f32` features row-major, then `n` `u32` labels.
//!
//! CSV: a header line `n,d0,K`, then `n` lines `label,f1,…,f_d0`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{DataError, Dataset};

pub const BINARY_MAGIC: [u8; 4] = *b"MSL1";
pub const HEADER_LEN: u64 = 16;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

pub fn save_binary(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(io_err(path));
    write(&BINARY_MAGIC)?;
    write(&(dataset.len() as u32).to_le_bytes())?;
    write(&(dataset.d0() as u32).to_le_bytes())?;
    write(&(dataset.n_classes() as u32).to_le_bytes())?;
    for v in dataset.features() {
        write(&v.to_le_bytes())?;
    }
    for l in dataset.labels() {
        write(&l.to_le_bytes())?;
    }
    out.flush().map_err(io_err(path))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path).map_err(io_err(path))?.read_to_end(&mut bytes).map_err(io_err(path))?;
    parse_binary(&bytes)
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

pub(crate) fn parse_binary(bytes: &[u8]) -> Result<Dataset, DataError> {
    if bytes.len() < 4 || bytes[..4] != BINARY_MAGIC {
        return Err(DataError::BadMagic { found: bytes[..bytes.len().min(4)].to_vec() });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(DataError::Header {
            offset: bytes.len() as u64,
            message: format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len()),
        });
    }
    let n = u32_at(bytes, 4) as u64;
    let d0 = u32_at(bytes, 8) as u64;
    let k = u32_at(bytes, 12) as u64;
    if n == 0 {
        return Err(DataError::Empty);
    }
    if d0 == 0 {
        return Err(DataError::Header { offset: 8, message: "feature dimension is zero".into() });
    }
    if k == 0 {
        return Err(DataError::Header { offset: 12, message: "class count is zero".into() });
    }
    let expected = HEADER_LEN + n * d0 * 4 + n * 4;
    if bytes.len() as u64 != expected {
        return Err(DataError::SizeMismatch { expected, actual: bytes.len() as u64 });
    }
    let (n, d0, k) = (n as usize, d0 as usize, k as usize);
    let feature_bytes = &bytes[HEADER_LEN as usize..HEADER_LEN as usize + n * d0 * 4];
    let mut features = Vec::with_capacity(n * d0);
    for (i, chunk) in feature_bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        if !v.is_finite() {
            return Err(DataError::NonFinite { offset: HEADER_LEN + 4 * i as u64, row: i / d0, column: i % d0 });
        }
        features.push(v);
    }
    let label_start = HEADER_LEN as usize + n * d0 * 4;
    let mut labels = Vec::with_capacity(n);
    for row in 0..n {
        let offset = label_start + 4 * row;
        let label = u32_at(bytes, offset);
        if label as usize >= k {
            return Err(DataError::LabelOutOfRange { offset: offset as u64, row, label: label.into(), n_classes: k });
        }
        labels.push(label);
    }
    Dataset::new(features, labels, d0, k)
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(file);
    let csv_err = |e: csv::Error| DataError::Csv { offset: 0, message: e.to_string() };
    writer
        .write_record([dataset.len().to_string(), dataset.d0().to_string(), dataset.n_classes().to_string()])
        .map_err(csv_err)?;
    for i in 0..dataset.len() {
        let mut record = vec![dataset.label(i).to_string()];
        // `{}` on f32 prints the shortest round-tripping representation.
        record.extend(dataset.row(i).iter().map(|v| v.to_string()));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut records = reader.records();
    let csv_err = |e: csv::Error| {
        let offset = e.position().map(|p| p.byte()).unwrap_or(0);
        DataError::Csv { offset, message: e.to_string() }
    };

    let header = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(DataError::Header { offset: 0, message: "missing `n,d0,K` header".into() }),
    };
    let header_offset = header.position().map(|p| p.byte()).unwrap_or(0);
    if header.len() != 3 {
        return Err(DataError::Header {
            offset: header_offset,
            message: format!("expected 3 header fields, found {}", header.len()),
        });
    }
    let parse_dim = |i: usize| -> Result<usize, DataError> {
        header[i].parse::<usize>().map_err(|e| DataError::Header {
            offset: header_offset,
            message: format!("header field {} ('{}'): {e}", i + 1, &header[i]),
        })
    };
    let (n, d0, k) = (parse_dim(0)?, parse_dim(1)?, parse_dim(2)?);
    if n == 0 {
        return Err(DataError::Empty);
    }
    if d0 == 0 || k == 0 {
        return Err(DataError::Header { offset: header_offset, message: "d0 and K must be positive".into() });
    }

    let mut features = Vec::with_capacity(n * d0);
    let mut labels = Vec::with_capacity(n);
    for record in records.by_ref().take(n) {
        let record = record.map_err(csv_err)?;
        let row = labels.len();
        let offset = record.position().map(|p| p.byte()).unwrap_or(0);
        if record.len() != d0 + 1 {
            return Err(DataError::Csv {
                offset,
                message: format!("row {row}: expected {} fields, found {}", d0 + 1, record.len()),
            });
        }
        let label: u64 = record[0]
            .parse()
            .map_err(|e| DataError::Csv { offset, message: format!("row {row}: label '{}': {e}", &record[0]) })?;
        if label >= k as u64 {
            return Err(DataError::LabelOutOfRange { offset, row, label, n_classes: k });
        }
        labels.push(label as u32);
        for (column, field) in record.iter().skip(1).enumerate() {
            let v: f32 = field.parse().map_err(|e| DataError::Csv {
                offset,
                message: format!("row {row}, column {column}: '{field}': {e}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { offset, row, column });
            }
            features.push(v);
        }
    }
    if labels.len() != n {
        return Err(DataError::SizeMismatch { expected: n as u64, actual: labels.len() as u64 });
    }
    if let Some(extra) = records.next() {
        let offset = extra.ok().and_then(|r| r.position().map(|p| p.byte())).unwrap_or(0);
        return Err(DataError::Csv { offset, message: format!("more than the declared {n} rows") });
    }
    Dataset::new(features, labels, d0, k)
}
