//! Plain-text model files.
//!
//! Tabulated classical model:
//!
//! ```text
//! # theta0=0.6 order=2
//! a 0.36 1.2 2
//! b 0.64 -1.2 -2
//! ```
//!
//! One line per support point with columns `label p d1 … dn`.
//!
//! Density stack:
//!
//! ```text
//! dim 2
//! theta0 0.1
//! order 1
//! rho
//! 0.5 0 0 0
//! 0 0 0.5 0
//! d1
//! ...
//! ```
//!
//! Each matrix section holds `dim` rows of `dim` whitespace-separated
//! `re im` pairs. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DerivativeStack;
use crate::quantum::{CMatrix, DensityStack};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Tabulated(DerivativeStack),
    Density(DensityStack),
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number '{tok}'")));
    }
    Ok(v)
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_header(line: &str, lineno: usize) -> Result<(f64, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(lineno, "expected header '# theta0=<v> order=<n>'"))?;
    let (mut theta0, mut order) = (None, None);
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("theta0", v)) => theta0 = Some(parse_f64(v, lineno)?),
            Some(("order", v)) => {
                order = Some(
                    v.parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("invalid order '{v}'")))?,
                )
            }
            _ => return Err(parse_err(lineno, format!("unexpected header field '{tok}'"))),
        }
    }
    match (theta0, order) {
        (Some(t), Some(n)) => Ok((t, n)),
        _ => Err(parse_err(lineno, "header needs theta0 and order")),
    }
}

pub fn parse_tabulated(text: &str) -> Result<DerivativeStack> {
    let (header_line, header) = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| parse_err(1, "empty model file"))?;
    let (theta0, order) = parse_header(header, header_line)?;
    let mut labels = Vec::new();
    let mut rows = vec![Vec::new(); order + 1];
    for (lineno, line) in content_lines(text).filter(|&(n, _)| n != header_line) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != order + 2 {
            return Err(parse_err(
                lineno,
                format!("expected {} columns, found {}", order + 2, toks.len()),
            ));
        }
        labels.push(toks[0].to_string());
        for (k, tok) in toks[1..].iter().enumerate() {
            rows[k].push(parse_f64(tok, lineno)?);
        }
    }
    if labels.len() < 2 {
        return Err(Error::DegenerateModel(format!(
            "model file has {} support points, need at least 2",
            labels.len()
        )));
    }
    if let Some((i, p)) = rows[0].iter().enumerate().find(|(_, &p)| p < 0.0) {
        return Err(Error::InvalidInput(format!("negative probability {p} at '{}'", labels[i])));
    }
    DerivativeStack::from_rows(theta0, &rows, labels)
}

pub fn write_tabulated(stack: &DerivativeStack) -> String {
    let mut out = format!("# theta0={} order={}\n", stack.theta0(), stack.order());
    for (i, label) in stack.labels().iter().enumerate() {
        out.push_str(label);
        for k in 0..=stack.order() {
            let _ = write!(out, " {:e}", stack.table()[(k, i)]);
        }
        out.push('\n');
    }
    out
}

fn keyed<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str)> {
    let (n, line) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing '{key}' line")))?;
    let mut toks = line.split_whitespace();
    match (toks.next(), toks.next(), toks.next()) {
        (Some(k), Some(v), None) if k == key => Ok((n, v)),
        _ => Err(parse_err(n, format!("expected '{key} <value>'"))),
    }
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &str,
    dim: usize,
) -> Result<CMatrix> {
    let (n, title) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing section '{name}'")))?;
    if title != name {
        return Err(parse_err(n, format!("expected section '{name}', found '{title}'")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let (n, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("section '{name}' has fewer than {dim} rows")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 * dim {
            return Err(parse_err(
                n,
                format!("expected {} numbers ({dim} re/im pairs), found {}", 2 * dim, toks.len()),
            ));
        }
        for j in 0..dim {
            m[(i, j)] = Complex64::new(parse_f64(toks[2 * j], n)?, parse_f64(toks[2 * j + 1], n)?);
        }
    }
    Ok(m)
}

pub fn parse_density(text: &str) -> Result<DensityStack> {
    let mut lines = content_lines(text);
    let (n, dim) = keyed(&mut lines, "dim")?;
    let dim: usize = dim
        .parse()
        .ok()
        .filter(|&d| d >= 1)
        .ok_or_else(|| parse_err(n, format!("invalid dimension '{dim}'")))?;
    let (n, theta0) = keyed(&mut lines, "theta0")?;
    let theta0 = parse_f64(theta0, n)?;
    let (n, order) = keyed(&mut lines, "order")?;
    let order: usize = order
        .parse()
        .map_err(|_| parse_err(n, format!("invalid order '{order}'")))?;
    let rho = read_matrix(&mut lines, "rho", dim)?;
    let derivs = (1..=order)
        .map(|k| read_matrix(&mut lines, &format!("d{k}"), dim))
        .collect::<Result<Vec<_>>>()?;
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "unexpected trailing content"));
    }
    DensityStack::new(theta0, rho, derivs)
}

pub fn write_density(stack: &DensityStack) -> String {
    let dim = stack.dim();
    let mut out = format!("dim {dim}\ntheta0 {}\norder {}\n", stack.theta0(), stack.order());
    let mut section = |name: String, m: &CMatrix| {
        out.push_str(&name);
        out.push('\n');
        for i in 0..dim {
            let row: Vec<String> = (0..dim)
                .map(|j| format!("{:e} {:e}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    };
    section("rho".into(), stack.rho());
    for (k, d) in stack.derivs().iter().enumerate() {
        section(format!("d{}", k + 1), d);
    }
    out
}

/// Chooses the format from the first non-blank line: `# theta0=…` for a
/// tabulated model, `dim …` for a density stack.
pub fn parse_model_file(text: &str) -> Result<ModelFile> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.starts_with("dim") {
        parse_density(text).map(ModelFile::Density)
    } else if first.starts_with('#') && first.contains("theta0=") {
        parse_tabulated(text).map(ModelFile::Tabulated)
    } else {
        Err(parse_err(1, "unrecognised model file: expected '# theta0=' or 'dim' header"))
    }
}

pub fn read_model_file(path: &std::path::Path) -> Result<ModelFile> {
    parse_model_file(&std::fs::read_to_string(path)?)
}
