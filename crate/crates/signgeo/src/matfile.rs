//! Binary weight-matrix file format.
//!
//! Layout: 4-byte magic `"SGM1"`, `m` and `n` as little-endian u32, then
//! `m·n` little-endian IEEE-754 f32 values, row-major. f32 on disk (lossless
//! for exported model weights, half the size), f64 in memory.

use std::fs;
use std::io;
use std::path::Path;

use signgeo_core::Matrix;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"SGM1";
const HEADER_LEN: u64 = 12;

#[derive(Debug, Error)]
pub enum MatFileError {
    #[error("bad magic at byte offset 0: expected \"SGM1\", found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error(
        "truncated file at byte offset {offset}: header declares {m}×{n} \
         ({expected} bytes total), file has {actual}"
    )]
    TruncatedFile {
        offset: u64,
        m: u32,
        n: u32,
        expected: u64,
        actual: u64,
    },
    #[error("non-finite entry ({value}) at byte offset {offset} (row {row}, col {col})")]
    NonFiniteEntry {
        offset: u64,
        row: u32,
        col: u32,
        value: f32,
    },
    #[error("declared dimensions {m}×{n} are degenerate or overflow")]
    BadDimensions { m: u32, n: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes a matrix, downcasting entries to f32.
pub fn write_matrix(path: &Path, w: &Matrix) -> io::Result<()> {
    let (m, n) = (w.rows() as u32, w.cols() as u32);
    let mut buf = Vec::with_capacity(HEADER_LEN as usize + w.as_slice().len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&m.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    for &v in w.as_slice() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf)
}

/// Reads and validates a matrix file, upcasting entries to f64.
pub fn read_matrix(path: &Path) -> Result<Matrix, MatFileError> {
    let bytes = fs::read(path)?;
    parse_matrix(&bytes)
}

/// Parses the raw byte layout. Exposed for round-trip tests.
pub fn parse_matrix(bytes: &[u8]) -> Result<Matrix, MatFileError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(MatFileError::BadMagic {
            found: bytes.iter().take(4).copied().collect(),
        });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(MatFileError::TruncatedFile {
            offset: bytes.len() as u64,
            m: 0,
            n: 0,
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let count = (m as u64).checked_mul(n as u64);
    let payload = count.and_then(|c| c.checked_mul(4));
    let (count, payload) = match (m, n, count, payload) {
        (0, _, _, _) | (_, 0, _, _) => return Err(MatFileError::BadDimensions { m, n }),
        (_, _, Some(c), Some(p)) if c <= (u32::MAX as u64) => (c, p),
        _ => return Err(MatFileError::BadDimensions { m, n }),
    };
    let expected = HEADER_LEN + payload;
    if (bytes.len() as u64) != expected {
        return Err(MatFileError::TruncatedFile {
            offset: bytes.len().min(expected as usize) as u64,
            m,
            n,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut data = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let off = (HEADER_LEN + idx * 4) as usize;
        let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        if !v.is_finite() {
            return Err(MatFileError::NonFiniteEntry {
                offset: off as u64,
                row: (idx / n as u64) as u32,
                col: (idx % n as u64) as u32,
                value: v,
            });
        }
        data.push(v as f64);
    }
    Ok(Matrix::from_rows(m as usize, n as usize, data).expect("validated shape"))
}
