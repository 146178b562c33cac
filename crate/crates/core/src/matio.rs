//! Snapshot matrix files.
//!
//! Three formats are supported:
//!
//! * `Csv`: one matrix row per line, comma-separated decimals. Written with
//!   17 significant digits so values round-trip exactly.
//! * `MessBin`: the bytes `MESS`, a little-endian `u16` version (1), `u64`
//!   row and column counts, then `m * n` little-endian `f64` in column-major
//!   order. Nothing may follow the payload.
//! * `Pgm`: binary (P5) 8-bit grayscale. Image rows are matrix rows, so each
//!   image column is one snapshot; pixels are scaled into `[0, 1]`.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MessError, Result};
use crate::matrix::SnapshotMatrix;

pub const MESSBIN_MAGIC: &[u8; 4] = b"MESS";
pub const MESSBIN_VERSION: u16 = 1;
pub const MESSBIN_HEADER_LEN: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    MessBin,
    Pgm,
}

impl MatrixFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Some(MatrixFormat::Csv),
            "bin" | "mess" | "messbin" => Some(MatrixFormat::MessBin),
            "pgm" => Some(MatrixFormat::Pgm),
            _ => None,
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::MessBin => "bin",
            MatrixFormat::Pgm => "pgm",
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = MessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "messbin" | "bin" => Ok(MatrixFormat::MessBin),
            "pgm" => Ok(MatrixFormat::Pgm),
            other => Err(MessError::Parameter(format!(
                "unknown matrix format `{other}`"
            ))),
        }
    }
}

pub fn read_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<SnapshotMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| MessError::io(path, e))?;
    decode_matrix(&bytes, format)
}

pub fn write_matrix(
    x: &SnapshotMatrix,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_matrix(x, format)?;
    let mut file = fs::File::create(path).map_err(|e| MessError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| MessError::io(path, e))
}

pub fn decode_matrix(bytes: &[u8], format: MatrixFormat) -> Result<SnapshotMatrix> {
    match format {
        MatrixFormat::Csv => decode_csv(bytes),
        MatrixFormat::MessBin => decode_messbin(bytes),
        MatrixFormat::Pgm => decode_pgm(bytes),
    }
}

pub fn encode_matrix(x: &SnapshotMatrix, format: MatrixFormat) -> Result<Vec<u8>> {
    match format {
        MatrixFormat::Csv => encode_csv(x),
        MatrixFormat::MessBin => Ok(encode_messbin(x)),
        MatrixFormat::Pgm => Ok(encode_pgm(x)),
    }
}

fn decode_csv(bytes: &[u8]) -> Result<SnapshotMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let offset = reader.position().byte();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let at = e.position().map(|p| p.byte()).unwrap_or(offset);
                return Err(MessError::format(at, format!("malformed CSV: {e}")));
            }
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                MessError::format(
                    offset,
                    format!(
                        "row {}, column {col}: `{field}` is not a number",
                        rows.len()
                    ),
                )
            })?;
            if !value.is_finite() {
                return Err(MessError::Validation(format!(
                    "row {}, column {col}: non-finite value `{field}` (byte {offset})",
                    rows.len()
                )));
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(MessError::format(
                    offset,
                    format!(
                        "row {} has {} fields, expected {}",
                        rows.len(),
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MessError::format(
            bytes.len() as u64,
            "CSV contains no rows",
        ));
    }
    SnapshotMatrix::from_rows(&rows)
}

fn encode_csv(x: &SnapshotMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if j > 0 {
                out.push(b',');
            }
            write!(out, "{:.16e}", x.get(i, j)).expect("writing to a Vec cannot fail");
        }
        out.push(b'\n');
    }
    Ok(out)
}

fn read_u64(bytes: &[u8], at: usize) -> Result<u64> {
    let slice = bytes
        .get(at..at + 8)
        .ok_or_else(|| MessError::format(bytes.len() as u64, "truncated MESS header"))?;
    Ok(u64::from_le_bytes(slice.try_into().expect("8-byte slice")))
}

fn decode_messbin(bytes: &[u8]) -> Result<SnapshotMatrix> {
    if bytes.len() < 4 {
        return Err(MessError::format(
            bytes.len() as u64,
            "truncated MESS magic",
        ));
    }
    if &bytes[..4] != MESSBIN_MAGIC {
        return Err(MessError::format(0, "missing MESS magic"));
    }
    let version = bytes
        .get(4..6)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| MessError::format(bytes.len() as u64, "truncated MESS version"))?;
    if version != MESSBIN_VERSION {
        return Err(MessError::format(
            4,
            format!("unsupported MESS version {version}"),
        ));
    }
    let m = read_u64(bytes, 6)?;
    let n = read_u64(bytes, 14)?;
    if m == 0 || n == 0 {
        return Err(MessError::format(
            6,
            format!("empty matrix dimensions {m} x {n}"),
        ));
    }
    let payload = bytes.len() - MESSBIN_HEADER_LEN;
    let expected = m
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .filter(|&b| b <= usize::MAX as u64)
        .ok_or_else(|| MessError::format(6, format!("matrix dimensions {m} x {n} overflow")))?;
    if (payload as u64) < expected {
        return Err(MessError::format(
            bytes.len() as u64,
            format!("payload truncated: {m} x {n} needs {expected} bytes, found {payload}"),
        ));
    }
    if (payload as u64) > expected {
        return Err(MessError::format(
            MESSBIN_HEADER_LEN as u64 + expected,
            format!("{} trailing bytes after payload", payload as u64 - expected),
        ));
    }
    let data = bytes[MESSBIN_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    SnapshotMatrix::from_col_major(m as usize, n as usize, data)
}

fn encode_messbin(x: &SnapshotMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(MESSBIN_HEADER_LEN + 8 * x.as_col_major().len());
    out.extend_from_slice(MESSBIN_MAGIC);
    out.extend_from_slice(&MESSBIN_VERSION.to_le_bytes());
    out.extend_from_slice(&(x.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(x.ncols() as u64).to_le_bytes());
    for v in x.as_col_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Cursor over the whitespace-separated tokens of a netpbm header.
struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(MessError::format(
                start as u64,
                format!("expected PGM {what}"),
            ));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ASCII digits")
            .parse()
            .map_err(|_| MessError::format(start as u64, format!("PGM {what} out of range")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<SnapshotMatrix> {
    if bytes.len() < 2 {
        return Err(MessError::format(bytes.len() as u64, "truncated PGM magic"));
    }
    if &bytes[..2] != b"P5" {
        return Err(MessError::format(0, "not a binary PGM (P5) file"));
    }
    let mut header = PgmHeader { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(MessError::format(
            header.pos as u64,
            format!("empty PGM image {width} x {height}"),
        ));
    }
    if !(1..=255).contains(&maxval) {
        return Err(MessError::format(
            header.pos as u64,
            format!("only 8-bit PGM is supported, maxval {maxval}"),
        ));
    }
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => {
            return Err(MessError::format(
                header.pos as u64,
                "missing whitespace after PGM header",
            ))
        }
    }
    let raster = &bytes[header.pos..];
    let pixels = width
        .checked_mul(height)
        .ok_or_else(|| MessError::format(header.pos as u64, "PGM dimensions overflow"))?;
    if raster.len() < pixels {
        return Err(MessError::format(
            bytes.len() as u64,
            format!(
                "PGM raster truncated: expected {pixels} bytes, found {}",
                raster.len()
            ),
        ));
    }
    if raster.len() > pixels {
        return Err(MessError::format(
            (header.pos + pixels) as u64,
            "trailing bytes after PGM raster",
        ));
    }
    let scale = maxval as f64;
    let mut data = vec![0.0; pixels];
    for (idx, &p) in raster.iter().enumerate() {
        if usize::from(p) > maxval {
            return Err(MessError::format(
                (header.pos + idx) as u64,
                format!("pixel value {p} exceeds maxval {maxval}"),
            ));
        }
        let (row, col) = (idx / width, idx % width);
        data[col * height + row] = f64::from(p) / scale;
    }
    SnapshotMatrix::from_col_major(height, width, data)
}

fn encode_pgm(x: &SnapshotMatrix) -> Vec<u8> {
    let (height, width) = (x.nrows(), x.ncols());
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let mut clamped = 0usize;
    for i in 0..height {
        for j in 0..width {
            let v = x.get(i, j);
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} values outside [0, 1] were clamped when writing PGM");
    }
    out
}
