//! Text formats for matrices and singular-value spectra.
//!
//! Matrix: a header line `N K`, then N lines of K whitespace-separated floats
//! (row-major). Spectrum: a header line `count alpha`, then one singular value
//! per line. Writers emit 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::SpectralProfile;
use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::real::Real;

fn parse_err(path: &Path, line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        detail: detail.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_float(path: &Path, line: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("invalid number `{token}`")))
}

pub fn parse_matrix<T: Real>(text: &str, path: &Path) -> Result<DMatrix<T>> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hl, "header must be `N K`"));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|d| *d > 0)
            .ok_or_else(|| parse_err(path, hl, format!("invalid dimension `{s}`")))
    };
    let (n, k) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut values = Vec::with_capacity(n * k);
    let mut rows = 0;
    for (ln, line) in lines {
        if rows == n {
            return Err(parse_err(path, ln, "more rows than declared"));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(T::lit(parse_float(path, ln, tok)?));
        }
        if values.len() - before != k {
            return Err(parse_err(
                path,
                ln,
                format!("expected {k} values, found {}", values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {n} rows, found {rows}"),
        ));
    }
    Ok(DMatrix::from_row_iterator(n, k, values))
}

pub fn format_matrix<T: Real>(h: &DMatrix<T>) -> String {
    let mut out = format!("{} {}\n", h.nrows(), h.ncols());
    for row in h.row_iter() {
        let mut first = true;
        for x in row.iter() {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{:.16e}", x.to_f64()).expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text, path)
}

pub fn write_matrix<T: Real>(path: &Path, h: &DMatrix<T>) -> Result<()> {
    atomic_write(path, format_matrix(h).as_bytes())
}

pub fn parse_profile<T: Real>(text: &str, path: &Path) -> Result<SpectralProfile<T>> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(path, hl, "header must be `count alpha`"));
    }
    let count = fields[0]
        .parse::<usize>()
        .ok()
        .filter(|c| *c > 0)
        .ok_or_else(|| parse_err(path, hl, format!("invalid count `{}`", fields[0])))?;
    let alpha = parse_float(path, hl, fields[1])?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(parse_err(path, hl, format!("invalid alpha `{}`", fields[1])));
    }
    let mut values = Vec::with_capacity(count);
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let tok = toks.next().expect("non-empty line");
        if toks.next().is_some() {
            return Err(parse_err(path, ln, "one value per line expected"));
        }
        values.push(T::lit(parse_float(path, ln, tok)?));
    }
    if values.len() != count {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {count} values, found {}", values.len()),
        ));
    }
    // min(N, K) = count; the other dimension follows from alpha = N/K
    let (n, k) = if alpha <= 1.0 {
        (count, (count as f64 / alpha).round() as usize)
    } else {
        ((count as f64 * alpha).round() as usize, count)
    };
    SpectralProfile::empirical(values, n, k)
        .map_err(|e| parse_err(path, hl, e.to_string()))
}

pub fn format_profile<T: Real>(profile: &SpectralProfile<T>) -> Result<String> {
    match profile {
        SpectralProfile::Empirical {
            singular_values, ..
        } => {
            let mut out = format!(
                "{} {:.16e}\n",
                singular_values.len(),
                profile.alpha().to_f64()
            );
            for s in singular_values {
                writeln!(out, "{:.16e}", s.to_f64()).expect("write to string");
            }
            Ok(out)
        }
        _ => Err(Error::invalid(
            "only empirical profiles can be written as a spectrum file",
        )),
    }
}

pub fn read_profile<T: Real>(path: &Path) -> Result<SpectralProfile<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_profile(&text, path)
}

pub fn write_profile<T: Real>(path: &Path, profile: &SpectralProfile<T>) -> Result<()> {
    atomic_write(path, format_profile(profile)?.as_bytes())
}
