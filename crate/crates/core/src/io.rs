//! Plain-text formats.
//!
//! * Matrices: one row per line, entries `re+imj` separated by whitespace.
//!   Several matrices in one file (Kraus lists) are separated by blank lines.
//! * Structure-function tables: two columns `q S`, q in Å⁻¹.
//!
//! `#` starts a comment in both. Floats are written with 17 significant
//! digits so that they read back bit-exact.

use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::lindblad::Trajectory;
use crate::operator::ComplexMatrix;
use crate::optics::StructureFunction;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses `re+imj`, `re-imj`, `re` or `imj`.
pub fn parse_complex(token: &str) -> Result<Complex64, String> {
    let t = token.trim();
    let bad = || format!("cannot parse `{token}` as a complex number (expected re+imj)");
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // the sign separating the parts is the last +/- not at the start and not after an exponent marker
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| bad())?;
            let im_str = &body[i..];
            let im = match im_str {
                "+" => 1.0,
                "-" => -1.0,
                s => s.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => s.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}

/// 17 significant digits, `.` decimal separator, exponent notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_complex(z: Complex64) -> String {
    let im = format_f64(z.im);
    if im.starts_with('-') {
        format!("{}{}j", format_f64(z.re), im)
    } else {
        format!("{}+{}j", format_f64(z.re), im)
    }
}

fn parse_rows(lines: &[(usize, &str)]) -> Result<ComplexMatrix, ParseError> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for &(no, text) in lines {
        let row = text
            .split_whitespace()
            .map(|tok| parse_complex(tok).map_err(|m| err(no, m)))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(err(no, format!("row has {} entries, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let first_line = lines.first().map(|l| l.0).unwrap_or(1);
    if n == 0 {
        return Err(err(first_line, "no matrix rows"));
    }
    if rows[0].len() != n {
        return Err(err(
            first_line,
            format!("matrix is {}x{}, expected square", n, rows[0].len()),
        ));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// One or more matrices separated by blank lines.
pub fn parse_matrix_list(text: &str) -> Result<Vec<ComplexMatrix>, ParseError> {
    let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    for (i, raw) in text.lines().enumerate() {
        let is_comment = raw.trim_start().starts_with('#');
        let line = strip_comment(raw);
        if line.is_empty() {
            if !is_comment && !blocks.last().expect("non-empty").is_empty() {
                blocks.push(Vec::new());
            }
            continue;
        }
        blocks.last_mut().expect("non-empty").push((i + 1, line));
    }
    let blocks: Vec<_> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
    if blocks.is_empty() {
        return Err(err(1, "no matrix rows"));
    }
    let mats = blocks.iter().map(|b| parse_rows(b)).collect::<Result<Vec<_>, _>>()?;
    let d = mats[0].nrows();
    for (b, m) in blocks.iter().zip(&mats) {
        if m.nrows() != d {
            return Err(err(b[0].0, format!("matrix is {0}x{0}, expected {d}x{d}", m.nrows())));
        }
    }
    Ok(mats)
}

/// Exactly one matrix.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix, ParseError> {
    let mut mats = parse_matrix_list(text)?;
    if mats.len() != 1 {
        return Err(err(1, format!("expected one matrix, found {}", mats.len())));
    }
    Ok(mats.pop().expect("one"))
}

pub fn write_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Two-column `q S` table.
pub fn parse_structure_table(text: &str) -> Result<StructureFunction, ParseError> {
    let mut q = Vec::new();
    let mut s = Vec::new();
    let mut last_line = 1;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        last_line = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(err(i + 1, format!("expected 2 columns (q S), found {}", cols.len())));
        }
        let parse = |c: &str| c.parse::<f64>().map_err(|_| err(i + 1, format!("cannot parse `{c}`")));
        let (qv, sv) = (parse(cols[0])?, parse(cols[1])?);
        if sv < 0.0 {
            return Err(err(i + 1, format!("negative structure value {sv}")));
        }
        if let Some(&prev) = q.last() {
            if qv <= prev {
                return Err(err(i + 1, "q grid must be strictly increasing"));
            }
        }
        q.push(qv);
        s.push(sv);
    }
    StructureFunction::tabulated(q, s).map_err(|e| err(last_line, e.to_string()))
}

/// Columns `t, trace_dev, min_eig, herm_residual`, then the row-major
/// `re_ij, im_ij` state entries when `include_states` is set.
pub fn trajectory_csv(traj: &Trajectory, include_states: bool) -> String {
    let mut out = String::from("t,trace_dev,min_eig,herm_residual");
    let d = traj.states.first().map(|w| w.dim()).unwrap_or(0);
    if include_states {
        for i in 0..d {
            for j in 0..d {
                out.push_str(&format!(",re_{i}_{j},im_{i}_{j}"));
            }
        }
    }
    out.push('\n');
    for ((t, m), w) in traj.times.iter().zip(&traj.monitors).zip(&traj.states) {
        let mut fields = vec![
            format_f64(*t),
            format_f64(m.trace_dev),
            format_f64(m.min_eig),
            format_f64(m.herm_residual),
        ];
        if include_states {
            let mat = w.matrix();
            for i in 0..d {
                for j in 0..d {
                    fields.push(format_f64(mat[(i, j)].re));
                    fields.push(format_f64(mat[(i, j)].im));
                }
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_json(traj: &Trajectory, include_states: bool) -> Value {
    let samples: Vec<Value> = traj
        .times
        .iter()
        .zip(&traj.monitors)
        .zip(&traj.states)
        .map(|((t, m), w)| {
            let mut v = json!({
                "t": t,
                "trace_dev": m.trace_dev,
                "min_eig": m.min_eig,
                "herm_residual": m.herm_residual,
            });
            if include_states {
                let mat = w.matrix();
                let rows: Vec<Vec<[f64; 2]>> = (0..mat.nrows())
                    .map(|i| (0..mat.ncols()).map(|j| [mat[(i, j)].re, mat[(i, j)].im]).collect())
                    .collect();
                v["state"] = json!(rows);
            }
            v
        })
        .collect();
    json!({
        "samples": samples,
        "positivity_breaches": traj.breaches,
    })
}
