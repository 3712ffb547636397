//! Delimited matrix files and atomic artifact writes.
//!
//! A data file starts with a header line `n m` or `n m labeled`, followed by
//! `n` rows of `m` numbers separated by whitespace, commas or tabs. Labeled
//! files carry one extra integer class id per row (0 = unlabeled). Blank
//! lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::DataSource;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

/// Parses the data file format from memory. `path` only labels errors.
pub fn parse_source(text: &str, path: &str) -> Result<DataSource> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_owned(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let head: Vec<&str> = tokens(header).collect();
    let (n, m, labeled) = match head.as_slice() {
        [n, m] => (*n, *m, false),
        [n, m, "labeled"] => (*n, *m, true),
        _ => return Err(err(hl, format!("header should be 'n m [labeled]', got '{header}'"))),
    };
    let n: usize = n.parse().map_err(|_| err(hl, format!("bad instance count '{n}'")))?;
    let m: usize = m.parse().map_err(|_| err(hl, format!("bad feature count '{m}'")))?;
    if n == 0 || m == 0 {
        return Err(err(hl, "instance and feature counts must be positive".into()));
    }

    let width = m + usize::from(labeled);
    let mut values = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(if labeled { n } else { 0 });
    for r in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(hl, format!("header promises {n} rows, file has {r}")))?;
        let row: Vec<&str> = tokens(line).collect();
        if row.len() != width {
            return Err(err(ln, format!("expected {width} fields, found {}", row.len())));
        }
        for t in &row[..m] {
            let v: f64 = t.parse().map_err(|_| err(ln, format!("non-numeric token '{t}'")))?;
            if !v.is_finite() {
                return Err(err(ln, format!("non-finite value '{t}'")));
            }
            values.push(v);
        }
        if labeled {
            let t = row[m];
            labels.push(t.parse::<u32>().map_err(|_| err(ln, format!("bad class id '{t}'")))?);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, format!("more than the {n} rows promised by the header")));
    }
    DataSource::new(Matrix::from_row_slice(n, m, &values), labeled.then_some(labels))
}

pub fn ingest(path: &Path) -> Result<DataSource> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_source(&text, &path.display().to_string())
}

/// Inverse of [`parse_source`]. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn format_source(src: &DataSource) -> String {
    let (n, m) = src.features.shape();
    let mut out = String::with_capacity(n * m * 12);
    let _ = writeln!(out, "{n} {m}{}", if src.labels.is_some() { " labeled" } else { "" });
    for p in 0..n {
        for j in 0..m {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", src.features[(p, j)]);
        }
        if let Some(labels) = &src.labels {
            let _ = write!(out, " {}", labels[p]);
        }
        out.push('\n');
    }
    out
}

pub fn emit(src: &DataSource, path: &Path) -> Result<()> {
    write_atomic(path, format_source(src).as_bytes())
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("'{}' is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// One predicted class id per line after a `# predicted` header.
pub fn format_predictions(pred: &[u32]) -> String {
    let mut out = String::from("# predicted\n");
    for p in pred {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn parse_predictions(text: &str, path: &str) -> Result<Vec<u32>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                msg: format!("bad class id '{}'", l.trim()),
            })
        })
        .collect()
}
