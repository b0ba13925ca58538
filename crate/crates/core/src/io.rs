//! File formats: numeric CSV ingestion with diagnostics, TSV emitters for
//! matrices and forest edge lists, and content hashing for output headers.
//!
//! CSV dialect: comma separated, decimal point only, `#` lines are comments,
//! and a single leading header row is auto-detected when its fields do not
//! parse as numbers.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::DataMatrix;
use crate::error::{FdeError, Result};
use crate::forest::{Edge, Forest};
use crate::mi::MiMatrix;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn sha256_hex_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Twelve significant digits, scientific notation.
pub fn format_sig12(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // never print -0
    format!("{v:.11e}")
}

/// Parse a numeric CSV file into a data matrix.
pub fn read_csv_matrix(path: &Path) -> Result<DataMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_csv_matrix(&text)
}

pub fn parse_csv_matrix(text: &str) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut saw_data_row = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let mut parsed = Vec::with_capacity(fields.len());
        let mut failed_at = None;
        for (col, field) in fields.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                _ => {
                    failed_at = Some(col);
                    break;
                }
            }
        }
        if let Some(col) = failed_at {
            if !saw_data_row {
                // single header row
                continue;
            }
            return Err(FdeError::Parse {
                line: line_no,
                column: Some(col + 1),
                detail: format!("field {:?} is not a finite number", fields[col]),
            });
        }
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(FdeError::Parse {
                    line: line_no,
                    column: None,
                    detail: format!("row has {} fields, expected {w}", parsed.len()),
                })
            }
            _ => {}
        }
        saw_data_row = true;
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(FdeError::Parse {
            line: 0,
            column: None,
            detail: "no numeric rows found".into(),
        });
    }
    DataMatrix::from_rows(rows)
}

fn open_with_header(path: &Path, comments: &[String]) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for line in comments {
        writeln!(w, "# {line}")?;
    }
    Ok(w)
}

/// Rows of comma-separated values, preceded by comment lines.
pub fn write_csv_matrix(path: &Path, data: &DataMatrix, comments: &[String]) -> Result<()> {
    let mut w = open_with_header(path, comments)?;
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|&v| format_sig12(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Symmetric matrix as `d` rows of `d` tab-separated decimals with twelve
/// significant digits.
pub fn write_mi_tsv(path: &Path, matrix: &MiMatrix, comments: &[String]) -> Result<()> {
    let mut w = open_with_header(path, comments)?;
    for i in 0..matrix.d() {
        let line: Vec<String> = (0..matrix.d())
            .map(|j| format_sig12(matrix.get(i, j)))
            .collect();
        writeln!(w, "{}", line.join("\t"))?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list as `i<TAB>j<TAB>weight`, led by the `# d=<d> k=<k>` header line
/// and any further comment lines.
pub fn write_forest_tsv(path: &Path, forest: &Forest, comments: &[String]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "# d={} k={}", forest.d, forest.edges.len())?;
    for line in comments {
        writeln!(w, "# {line}")?;
    }
    for e in &forest.edges {
        writeln!(w, "{}\t{}\t{}", e.i, e.j, format_sig12(e.weight))?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a forest edge list written by [`write_forest_tsv`].
pub fn read_forest_tsv(path: &Path) -> Result<Forest> {
    let text = std::fs::read_to_string(path)?;
    let mut d = None;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if d.is_none() {
                for token in rest.split_whitespace() {
                    if let Some(v) = token.strip_prefix("d=") {
                        d = v.parse::<usize>().ok();
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(FdeError::Parse {
                line: line_no,
                column: None,
                detail: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let parse_idx = |f: &str, col: usize| {
            f.parse::<usize>().map_err(|_| FdeError::Parse {
                line: line_no,
                column: Some(col),
                detail: format!("bad vertex id {f:?}"),
            })
        };
        let i = parse_idx(fields[0], 1)?;
        let j = parse_idx(fields[1], 2)?;
        let weight = fields[2].parse::<f64>().map_err(|_| FdeError::Parse {
            line: line_no,
            column: Some(3),
            detail: format!("bad weight {:?}", fields[2]),
        })?;
        edges.push(Edge::new(i.min(j), i.max(j), weight));
    }
    let d = d.ok_or_else(|| FdeError::Parse {
        line: 0,
        column: None,
        detail: "missing `# d=<d> k=<k>` header".into(),
    })?;
    Ok(Forest { d, edges })
}

/// Truth edge list: `i<TAB>j` pairs under a `# d=<d>` header.
pub fn write_truth_tsv(path: &Path, d: usize, truth: &[(usize, usize)], comments: &[String]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "# d={} edges={}", d, truth.len())?;
    for line in comments {
        writeln!(w, "# {line}")?;
    }
    for &(i, j) in truth {
        writeln!(w, "{i}\t{j}")?;
    }
    w.flush()?;
    Ok(())
}

/// Selection curve as `k,score` rows.
pub fn write_curve_csv(path: &Path, curve: &[f64], comments: &[String]) -> Result<()> {
    let mut w = open_with_header(path, comments)?;
    writeln!(w, "k,heldout_loglik")?;
    for (k, &score) in curve.iter().enumerate() {
        writeln!(w, "{k},{}", format_sig12(score))?;
    }
    w.flush()?;
    Ok(())
}
