//! Matrix Market reader and writer (`array` and `coordinate`, real, general).
//!
//! Values are written with 17 significant digits, so a write/read cycle
//! reproduces every `f64` exactly.

use super::{CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

const ARRAY_HEADER: &str = "%%MatrixMarket matrix array real general";
const COORDINATE_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Contents of a Matrix Market file.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixMarket {
    Array(DenseMatrix),
    Coordinate { rows: usize, cols: usize, entries: Vec<(usize, usize, f64)> },
}

impl MatrixMarket {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            MatrixMarket::Array(m) => m.clone(),
            MatrixMarket::Coordinate { rows, cols, entries } => {
                let mut m = DenseMatrix::zeros(*rows, *cols);
                for &(i, j, v) in entries {
                    m.set(i, j, m.get(i, j) + v);
                }
                m
            }
        }
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Array format, column-major as the format prescribes.
pub fn write_array<W: Write>(out: &mut W, m: &DenseMatrix) -> Result<()> {
    let mut s = String::with_capacity(m.rows() * m.cols() * 24 + 64);
    writeln!(s, "{ARRAY_HEADER}").unwrap();
    writeln!(s, "{} {}", m.rows(), m.cols()).unwrap();
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(s, "{}", fmt_value(m.get(i, j))).unwrap();
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Coordinate format with 1-based indices, entries in the given order.
pub fn write_coordinate<W: Write>(
    out: &mut W,
    rows: usize,
    cols: usize,
    entries: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<()> {
    let entries: Vec<_> = entries.into_iter().collect();
    let mut s = String::with_capacity(entries.len() * 32 + 64);
    writeln!(s, "{COORDINATE_HEADER}").unwrap();
    writeln!(s, "{rows} {cols} {}", entries.len()).unwrap();
    for (i, j, v) in entries {
        writeln!(s, "{} {} {}", i + 1, j + 1, fmt_value(v)).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_csr<W: Write>(out: &mut W, m: &CsrMatrix) -> Result<()> {
    write_coordinate(out, m.rows(), m.cols(), m.triplets())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

pub fn read<R: BufRead>(input: R) -> Result<MatrixMarket> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad(format!("bad header line '{header}'")));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(bad(format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(bad(format!("unsupported symmetry '{}'", tokens[4])));
    }
    let mut body = lines.filter_map(|l| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        other => Some(other),
    });
    let size_line = body.next().ok_or_else(|| bad("missing size line"))??;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;
    let parse_f = |t: &str| t.parse::<f64>().map_err(|_| bad(format!("bad value '{t}'")));
    match tokens[2].as_str() {
        "array" => {
            let [rows, cols] = sizes[..] else { return Err(bad("array size line needs 2 fields")) };
            let mut m = DenseMatrix::zeros(rows, cols);
            for j in 0..cols {
                for i in 0..rows {
                    let line = body.next().ok_or_else(|| bad("truncated array data"))??;
                    m.set(i, j, parse_f(line.trim())?);
                }
            }
            Ok(MatrixMarket::Array(m))
        }
        "coordinate" => {
            let [rows, cols, nnz] = sizes[..] else { return Err(bad("coordinate size line needs 3 fields")) };
            let mut entries = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let line = body.next().ok_or_else(|| bad("truncated coordinate data"))??;
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(bad(format!("bad entry line '{line}'")));
                }
                let i: usize = f[0].parse().map_err(|_| bad(format!("bad row '{}'", f[0])))?;
                let j: usize = f[1].parse().map_err(|_| bad(format!("bad column '{}'", f[1])))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(bad(format!("index ({i}, {j}) out of range")));
                }
                entries.push((i - 1, j - 1, parse_f(f[2])?));
            }
            Ok(MatrixMarket::Coordinate { rows, cols, entries })
        }
        other => Err(bad(format!("unsupported format '{other}'"))),
    }
}

pub fn read_file(path: &std::path::Path) -> Result<MatrixMarket> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}
