//! `FMAT1` binary matrices and plain CSV.
//!
//! `FMAT1` layout: the 8-byte magic `FMAT\x01\x00\x00\x00`, the row count and
//! column count as little-endian `u64`, then `rows * cols` little-endian IEEE-754
//! binary64 values in row-major order. Nothing follows the last value.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

pub const FMAT_MAGIC: [u8; 8] = *b"FMAT\x01\x00\x00\x00";

pub fn write_fmat<W: Write>(m: &DenseMatrix, mut w: W) -> Result<()> {
    w.write_all(&FMAT_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fmat<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated FMAT1 header: {e}")))?;
    if header[..8] != FMAT_MAGIC {
        return Err(Error::Format("bad FMAT1 magic".into()));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .filter(|n| n.checked_mul(8).is_some())
        .ok_or_else(|| Error::Format(format!("FMAT1 dimensions {rows}x{cols} too large")))?;

    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "FMAT1 payload has {} bytes, expected {} for {rows}x{cols}",
            bytes.len(),
            count * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    DenseMatrix::from_vec(rows as usize, cols as usize, data)
}

/// Plain decimal CSV, one row per line, no header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(m: &DenseMatrix, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in 0..m.rows() {
        out.write_record(m.row(r).iter().map(|v| v.to_string()))
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: `{f}` is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads CSV when the extension is `.csv`, `FMAT1` otherwise.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let f = BufReader::new(File::open(path)?);
    if is_csv(path) {
        read_csv(f)
    } else {
        read_fmat(f)
    }
}

/// Writes CSV when the extension is `.csv`, `FMAT1` otherwise.
pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_csv(m, f)
    } else {
        write_fmat(m, f)
    }
}
