//! Dense matrix I/O.
//!
//! Text format: one matrix row per line, whitespace-separated decimal values.
//! Lines starting with `#` are comments and blank lines are skipped. Values are
//! written with Rust's shortest round-trip float formatting, so text files
//! reload bit-exactly.
//!
//! Binary format (little endian): the magic bytes `SGLM`, `u32` rows,
//! `u32` cols, then `rows * cols` `f64` values in row-major order.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SGLM";

pub fn write_text<W: Write>(mut out: W, m: &DMatrix<f64>, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("`{tok}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn write_binary<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(m.nrows() as u32).to_le_bytes())?;
    out.write_all(&(m.ncols() as u32).to_le_bytes())?;
    for i in 0..m.nrows() {
        for v in m.row(i).iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "bad magic bytes".into(),
        });
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let nrows = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let ncols = u32::from_le_bytes(word) as usize;
    let mut values = Vec::with_capacity(nrows * ncols);
    let mut buf = [0u8; 8];
    for _ in 0..nrows * ncols {
        input.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}
