use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::RawSeries;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DATASET_MAGIC: &[u8; 4] = b"RPMX";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 * 4 + 8;

/// How empty or NaN cells are handled when reading CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    #[default]
    Reject,
    /// Repeat the node's previous value; a missing first row is still an error.
    ForwardFill,
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub interval_minutes: u32,
    pub start_timestamp: i64,
    pub missing: MissingPolicy,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            interval_minutes: 5,
            start_timestamp: 0,
            missing: MissingPolicy::Reject,
        }
    }
}

/// Reads a CSV whose columns are nodes and rows are time steps, with a header
/// row of node ids. Row and column numbers in errors are 1-based and count
/// the header as row 1.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file), path, options)
}

fn read_csv(reader: impl Read, path: &Path, options: &CsvOptions) -> Result<RawSeries> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().any(str::is_empty) {
        return Err(parse_err("malformed header: expected one non-empty node id per column".into()));
    }
    let n = header.len();
    let mut columns: Vec<Vec<f32>> = vec![Vec::new(); n];
    for (r, record) in rdr.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| parse_err(format!("row {line}: {e}")))?;
        if record.len() != n {
            return Err(parse_err(format!(
                "row {line}: expected {n} columns, found {}",
                record.len()
            )));
        }
        for (c, cell) in record.iter().enumerate() {
            let value = if cell.is_empty() {
                f32::NAN
            } else {
                cell.parse::<f32>().map_err(|_| {
                    parse_err(format!("row {line}, column {}: '{cell}' is not a number", c + 1))
                })?
            };
            let value = if value.is_nan() {
                match (options.missing, columns[c].last()) {
                    (MissingPolicy::ForwardFill, Some(&prev)) => prev,
                    (MissingPolicy::ForwardFill, None) => {
                        return Err(parse_err(format!(
                            "row {line}, column {}: missing value with nothing to fill from",
                            c + 1
                        )))
                    }
                    (MissingPolicy::Reject, _) => {
                        return Err(parse_err(format!("row {line}, column {}: missing value", c + 1)))
                    }
                }
            } else if !value.is_finite() {
                return Err(parse_err(format!("row {line}, column {}: non-finite value", c + 1)));
            } else {
                value
            };
            columns[c].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }
    RawSeries::from_node_rows(&columns, options.interval_minutes, options.start_timestamp)
}

/// Writes feature 0 in the CSV layout read by [`load_csv`], with node ids 0..n.
pub fn save_csv(raw: &RawSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record((0..raw.nodes()).map(|i| i.to_string())).map_err(to_err)?;
    for s in 0..raw.steps() {
        w.write_record((0..raw.nodes()).map(|i| raw.value(i, 0, s).to_string()))
            .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Encodes the series in the binary dataset layout.
pub fn encode_binary(raw: &RawSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * raw.values.len());
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    for dim in [raw.nodes(), raw.features(), raw.steps()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&raw.interval_minutes.to_le_bytes());
    out.extend_from_slice(&raw.start_timestamp.to_le_bytes());
    for v in raw.values.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<RawSeries> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(bad("missing RPMX magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DATASET_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let (n, d, t) = (u32_at(6) as usize, u32_at(10) as usize, u32_at(14) as usize);
    let interval = u32_at(18);
    let start = i64::from_le_bytes(bytes[22..30].try_into().expect("8 bytes"));
    let count = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(t))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 4 {
        return Err(bad(format!(
            "expected {} value bytes for {n}×{d}×{t}, found {}",
            count * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    RawSeries::new(Tensor::new(vec![n, d, t], data)?, interval, start).map_err(|e| bad(e.to_string()))
}

pub fn save_binary(raw: &RawSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_binary(raw)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<RawSeries> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_binary(&bytes, path)
}

/// Loads a dataset by extension: `.csv` as CSV, anything else as binary.
pub fn load_dataset(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawSeries> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path, options),
        _ => load_binary(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, missing: MissingPolicy) -> Result<RawSeries> {
        let options = CsvOptions {
            missing,
            ..CsvOptions::default()
        };
        read_csv(text.as_bytes(), Path::new("fixture.csv"), &options)
    }

    #[test]
    fn csv_fixture_shape() {
        let s = parse("a,b\n1,2\n3,4\n5,6\n", MissingPolicy::Reject).unwrap();
        assert_eq!((s.nodes(), s.features(), s.steps()), (2, 1, 3));
        assert_eq!(s.row(1, 0), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn csv_errors_name_location() {
        let err = parse("a,b\n1,2\n3,x\n", MissingPolicy::Reject).unwrap_err().to_string();
        assert!(err.contains("row 3") && err.contains("column 2"), "{err}");
        let err = parse("a,b\n1,2\n3\n", MissingPolicy::Reject).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        let err = parse("a,b\n1,NaN\n", MissingPolicy::Reject).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column 2"), "{err}");
        assert!(parse("a,,c\n1,2,3\n", MissingPolicy::Reject).is_err());
        assert!(parse("a,b\n", MissingPolicy::Reject).is_err());
    }

    #[test]
    fn csv_forward_fill() {
        let s = parse("a,b\n1,2\n,NaN\n5,6\n", MissingPolicy::ForwardFill).unwrap();
        assert_eq!(s.row(0, 0), &[1.0, 1.0, 5.0]);
        assert_eq!(s.row(1, 0), &[2.0, 2.0, 6.0]);
        assert!(parse("a\n\n", MissingPolicy::ForwardFill).is_err());
    }

    #[test]
    fn binary_roundtrip_is_bit_identical() {
        let data: Vec<f32> = (0..24).map(|i| (i as f32).sin() * 1e3 + f32::EPSILON).collect();
        let s = RawSeries::new(Tensor::new(vec![2, 3, 4], data).unwrap(), 15, -12345).unwrap();
        let bytes = encode_binary(&s);
        let back = decode_binary(&bytes, Path::new("x")).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_binary(&back), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.rpmx");
        save_binary(&s, &path).unwrap();
        assert_eq!(load_binary(&path).unwrap(), s);
    }

    #[test]
    fn binary_rejects_corruption() {
        let s = RawSeries::from_node_rows(&[vec![1.0, 2.0]], 5, 0).unwrap();
        let bytes = encode_binary(&s);
        assert!(decode_binary(&bytes[..bytes.len() - 1], Path::new("x")).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_binary(&wrong, Path::new("x")).is_err());
    }

    #[test]
    fn csv_save_load_roundtrip() {
        let s = RawSeries::from_node_rows(&[vec![1.5, 2.0], vec![0.25, -3.0]], 5, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&s, &path).unwrap();
        assert_eq!(load_dataset(&path, &CsvOptions::default()).unwrap(), s);
    }
}
