//! Plain-text numeric tables shared by the coefficient, light and color files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Fixed scientific notation with 17 significant digits (exact round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_row(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&fmt_f64(*v));
    }
    s
}

/// Parses whitespace-separated rows of exactly `cols` numbers. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_table(text: &str, cols: usize, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, i + 1, format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != cols {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {cols} values, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `key=value` pairs from leading `# ` comment lines.
pub fn comment_metadata(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
