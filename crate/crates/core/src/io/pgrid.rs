//! PGRID: a one-line text header followed by little-endian f64 samples.
//!
//! ```text
//! PGRID v1 n=2 dims=64,64 extent=-1,1,-1,1
//! <8·64·64 bytes>
//! ```
//!
//! The first axis varies slowest; samples sit on the nodes of the extent as
//! in [`GridField`].

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::medium::GridField;

const MAGIC: &str = "PGRID v1";
const MAX_HEADER: usize = 4096;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Serializes a grid.
pub fn encode(grid: &GridField) -> Vec<u8> {
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",");
    let header = format!(
        "{MAGIC} n={} dims={} extent={}\n",
        grid.dims().len(),
        join(&mut grid.dims().iter().map(|d| d.to_string())),
        join(&mut grid.extent().iter().map(|e| format!("{e:?}"))),
    );
    let mut out = Vec::with_capacity(header.len() + 8 * grid.data().len());
    out.extend_from_slice(header.as_bytes());
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn field<'a>(token: Option<&'a str>, key: &str, offset: usize) -> Result<&'a str> {
    token
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| format_err(offset, format!("expected `{key}=`")))
}

/// Parses a grid, reporting the byte offset of the first problem.
pub fn decode(bytes: &[u8]) -> Result<GridField> {
    let end = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err(bytes.len().min(MAX_HEADER), "header line is not terminated"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|e| format_err(e.valid_up_to(), "header is not UTF-8"))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| format_err(0, format!("missing `{MAGIC}` magic")))?;
    let pos = |s: &str| s.as_ptr() as usize - header.as_ptr() as usize;
    let mut tokens = rest.split_whitespace();

    let tok = tokens.next();
    let at = tok.map_or(end, pos);
    let n: usize = field(tok, "n", at)?
        .parse()
        .map_err(|_| format_err(at, "n is not an integer"))?;
    if !(n == 2 || n == 3) {
        return Err(format_err(at, format!("n must be 2 or 3, got {n}")));
    }

    let tok = tokens.next();
    let at = tok.map_or(end, pos);
    let dims: Vec<usize> = field(tok, "dims", at)?
        .split(',')
        .map(|d| d.parse().map_err(|_| format_err(at, format!("bad dimension `{d}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != n {
        return Err(format_err(at, format!("expected {n} dims, got {}", dims.len())));
    }

    let tok = tokens.next();
    let at = tok.map_or(end, pos);
    let extent: Vec<f64> = field(tok, "extent", at)?
        .split(',')
        .map(|d| d.parse().map_err(|_| format_err(at, format!("bad extent value `{d}`"))))
        .collect::<Result<_>>()?;
    if extent.len() != 2 * n {
        return Err(format_err(at, format!("expected {} extent values, got {}", 2 * n, extent.len())));
    }
    if let Some(t) = tokens.next() {
        return Err(format_err(pos(t), format!("unexpected header field `{t}`")));
    }

    let start = end + 1;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| format_err(at, "grid size overflows"))?;
    let payload = &bytes[start..];
    if payload.len() != 8 * count {
        let offset = start + payload.len().min(8 * count);
        return Err(format_err(
            offset,
            format!("payload holds {} bytes, expected {}", payload.len(), 8 * count),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if !v.is_finite() {
            return Err(format_err(start + 8 * i, format!("non-finite sample {v}")));
        }
        data.push(v);
    }
    GridField::new(dims, extent, data).map_err(|e| format_err(0, e.to_string()))
}

/// Writes a grid to `path`.
pub fn write_pgrid(path: &Path, grid: &GridField) -> Result<()> {
    fs::write(path, encode(grid)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads a grid from `path`.
pub fn read_pgrid(path: &Path) -> Result<GridField> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}

/// Checks that a grid's extent covers `[lo, hi]` on every axis.
pub fn check_covers(grid: &GridField, lo: &[f64], hi: &[f64]) -> Result<()> {
    let e = grid.extent();
    if lo.len() != grid.dims().len() {
        return Err(format_err(
            0,
            format!("grid has {} axes, the domain has {}", grid.dims().len(), lo.len()),
        ));
    }
    let slack = 1e-9;
    for a in 0..lo.len() {
        if e[2 * a] > lo[a] + slack || e[2 * a + 1] < hi[a] - slack {
            return Err(format_err(
                0,
                format!(
                    "extent [{}, {}] on axis {a} does not cover the domain [{}, {}]",
                    e[2 * a],
                    e[2 * a + 1],
                    lo[a],
                    hi[a]
                ),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GridField {
        GridField::new(vec![2, 2], vec![-1.0, 1.0, -1.0, 1.0], vec![0.1, -2.5, 3.0e-300, 7.0]).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let g = small();
        let bytes = encode(&g);
        let back = decode(&bytes).unwrap();
        assert_eq!(encode(&back), bytes);
        for (a, b) in g.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn nan_is_rejected_with_offset() {
        let mut bytes = encode(&small());
        let start = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        bytes[start + 16..start + 24].copy_from_slice(&f64::NAN.to_le_bytes());
        match decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset as usize, start + 16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_payload_and_bad_headers() {
        let bytes = encode(&small());
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::Format { .. })));
        assert!(matches!(decode(b"PGRID v2 n=2\n"), Err(Error::Format { offset: 0, .. })));
        match decode(b"PGRID v1 n=2 dims=2,x extent=0,1,0,1\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("{other:?}"),
        }
        assert!(decode(b"PGRID v1 n=2 dims=2,2").is_err());
    }

    #[test]
    fn extent_must_cover_the_domain() {
        let g = small();
        assert!(check_covers(&g, &[-1.0, -1.0], &[1.0, 1.0]).is_ok());
        assert!(matches!(
            check_covers(&g, &[-2.0, -1.0], &[1.0, 1.0]),
            Err(Error::Format { .. })
        ));
    }
}
