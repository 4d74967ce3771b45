//! Matrix file formats.
//!
//! `LRMX` binary layout (all little-endian):
//!
//! | offset | size | field                           |
//! |--------|------|---------------------------------|
//! | 0      | 4    | magic `b"LRMX"`                 |
//! | 4      | 4    | `u32` version, currently 1      |
//! | 8      | 8    | `u64` rows                      |
//! | 16     | 8    | `u64` cols                      |
//! | 24     | 8·rows·cols | `f64` entries, row-major |
//!
//! CSV is header-free, one comma-separated row per line.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

pub const LRMX_MAGIC: &[u8; 4] = b"LRMX";
pub const LRMX_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Serializes a matrix as `LRMX`.
pub fn write_lrmx<W: Write>(w: &mut W, m: &Matrix) -> std::io::Result<()> {
    w.write_all(LRMX_MAGIC)?;
    w.write_all(&LRMX_VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn to_lrmx_bytes(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.data().len() * 8);
    write_lrmx(&mut out, m).expect("writing to a Vec cannot fail");
    out
}

/// Parses an `LRMX` byte buffer.
pub fn from_lrmx_bytes(bytes: &[u8]) -> Result<Matrix> {
    let bad = |detail: String| Error::Format { what: "LRMX", detail };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != LRMX_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != LRMX_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("dimension overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(bad(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows, cols, data)
}

pub fn read_lrmx<R: Read>(r: &mut R) -> Result<Matrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<reader>", e))?;
    from_lrmx_bytes(&bytes)
}

pub fn save_lrmx(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_lrmx_bytes(m)).map_err(|e| Error::io(path, e))
}

pub fn load_lrmx(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_lrmx_bytes(&bytes)
}

/// Header-free CSV. Values use Rust's shortest round-trip formatting.
pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(text: &str) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Format {
                    what: "CSV matrix",
                    detail: format!("line {}: {e}", lineno + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            what: "CSV matrix",
            detail: "no rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

pub fn save_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lrmx_header_layout() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let b = to_lrmx_bytes(&m);
        assert_eq!(&b[0..4], b"LRMX");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..16], &1u64.to_le_bytes());
        assert_eq!(&b[16..24], &3u64.to_le_bytes());
        assert_eq!(&b[24..32], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 24 + 24);
    }

    #[test]
    fn lrmx_rejects_corruption() {
        let m = Matrix::identity(2);
        let mut b = to_lrmx_bytes(&m);
        assert!(from_lrmx_bytes(&b[..30]).is_err());
        b[0] = b'X';
        assert!(from_lrmx_bytes(&b).is_err());
        let mut v = to_lrmx_bytes(&m);
        v[4] = 2;
        assert!(from_lrmx_bytes(&v).is_err());
    }

    #[test]
    fn csv_parse_errors() {
        assert!(from_csv("1,2\n3,x\n").is_err());
        assert!(from_csv("1,2\n3\n").is_err());
        assert!(from_csv("\n").is_err());
    }

    proptest! {
        #[test]
        fn lrmx_and_csv_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let mut rng = crate::rng::stream(seed, "io");
            let m = crate::rng::gaussian_matrix(&mut rng, rows, cols);
            prop_assert_eq!(&from_lrmx_bytes(&to_lrmx_bytes(&m)).unwrap(), &m);
            prop_assert_eq!(&from_csv(&to_csv(&m)).unwrap(), &m);
        }
    }
}
