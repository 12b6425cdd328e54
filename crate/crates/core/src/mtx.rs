//! Matrix Market `coordinate real general` reader and writer, plus the plain
//! text vector format used for solution files.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseNonnegMatrix;

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse a Matrix Market coordinate file with 1-based indices.
///
/// `integer` fields are accepted alongside `real`. Explicit zero values are
/// structural zeros and are dropped.
pub fn parse_matrix_market<R: Read>(input: R) -> Result<SparseNonnegMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected a %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(parse_err(1, format!("unsupported symmetry '{}'", tokens[4])));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "expected 'rows cols nnz'"));
                }
                let mut nums = [0usize; 3];
                for (slot, f) in nums.iter_mut().zip(&fields) {
                    *slot = f
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad size field '{f}'")))?;
                }
                dims = Some((nums[0], nums[1], nums[2]));
                entries.reserve(nums[2]);
            }
            Some((m, n, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "expected 'row col value'"));
                }
                let row: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad row index '{}'", fields[0])))?;
                let col: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad column index '{}'", fields[1])))?;
                let value: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad value '{}'", fields[2])))?;
                if row == 0 || col == 0 || row > m || col > n {
                    return Err(parse_err(
                        line_no,
                        format!("index ({row}, {col}) outside {m}x{n}"),
                    ));
                }
                seen += 1;
                if seen > nnz {
                    return Err(parse_err(line_no, format!("more than {nnz} entries")));
                }
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        row: row - 1,
                        col: col - 1,
                    });
                }
                if value < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: row - 1,
                        col: col - 1,
                    });
                }
                if value != 0.0 {
                    entries.push((row - 1, col - 1, value));
                }
            }
        }
    }
    let (m, n, nnz) = dims.ok_or_else(|| parse_err(1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            0,
            format!("header declares {nnz} entries, found {seen}"),
        ));
    }
    SparseNonnegMatrix::from_triplets(m, n, entries)
}

/// Render in Matrix Market coordinate format, row-major, 17 significant
/// digits per value.
pub fn write_matrix_market(a: &SparseNonnegMatrix) -> String {
    let mut out = String::with_capacity(32 * (a.nnz() + 2));
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz());
    for (r, c, v) in a.iter_by_row() {
        let _ = writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v);
    }
    out
}

pub fn read_matrix_market_file(path: &Path) -> Result<SparseNonnegMatrix> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(file)
}

pub fn write_matrix_market_file(path: &Path, a: &SparseNonnegMatrix) -> Result<()> {
    std::fs::write(path, write_matrix_market(a))?;
    Ok(())
}

/// One value per line, 17 significant digits.
pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(26 * v.len());
    for x in v {
        let _ = writeln!(out, "{x:.16e}");
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad value '{}'", l.trim())))
        })
        .collect()
}
