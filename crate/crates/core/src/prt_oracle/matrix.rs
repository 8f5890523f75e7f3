use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::cga::blade_order_hash;
use crate::error::{Error, Result};
use crate::sh::SampleMode;
use crate::textio::{comment_metadata, fmt_row, parse_table};

/// Values per transfer row: 9 basis functions × 3 channels, index `3j + k`.
pub const ROW: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSource {
    Oracle,
    Predicted,
}

impl fmt::Display for TransferSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferSource::Oracle => "oracle",
            TransferSource::Predicted => "predicted",
        })
    }
}

impl FromStr for TransferSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(TransferSource::Oracle),
            "predicted" => Ok(TransferSource::Predicted),
            other => Err(Error::Format(format!("unknown transfer source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMeta {
    pub bands: usize,
    pub mode: SampleMode,
    pub sqrt_n: usize,
    pub seed: u64,
    pub shadowed: bool,
    pub source: TransferSource,
    /// `white`, an `r,g,b` triple, or `per-vertex`.
    pub albedo: String,
}

impl Default for TransferMeta {
    fn default() -> Self {
        TransferMeta {
            bands: 3,
            mode: SampleMode::Sphere,
            sqrt_n: 5,
            seed: 0,
            shadowed: false,
            source: TransferSource::Oracle,
            albedo: "white".into(),
        }
    }
}

impl TransferMeta {
    pub fn samples(&self) -> usize {
        self.sqrt_n * self.sqrt_n
    }
}

/// Per-vertex SH transfer rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub rows: Vec<[f64; ROW]>,
    pub meta: TransferMeta,
}

impl TransferMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Coefficient `t_{3j+k}` of vertex `i`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.rows[i][3 * j + k]
    }

    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut out = format!(
            "# ngash transfer\n# source={}\n# bands={}\n# mode={}\n# samples={}\n# sqrt_n={}\n# seed={}\n\
             # shadowed={}\n# albedo={}\n# blade_order_hash={}\n# vertices={}\n",
            m.source,
            m.bands,
            m.mode,
            m.samples(),
            m.sqrt_n,
            m.seed,
            m.shadowed,
            m.albedo,
            blade_order_hash(),
            self.rows.len()
        );
        for r in &self.rows {
            out.push_str(&fmt_row(r));
            out.push('\n');
        }
        out
    }

    /// Parses a coefficient file. Metadata lines are optional; absent keys take defaults.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let rows = parse_table(text, ROW, path)?
            .into_iter()
            .map(|r| <[f64; ROW]>::try_from(r.as_slice()).expect("row width checked"))
            .collect();
        let kv = comment_metadata(text);
        let mut meta = TransferMeta::default();
        let bad = |k: &str, v: &str| Error::Format(format!("{}: bad `{k}={v}`", path.display()));
        for (k, v) in &kv {
            match k.as_str() {
                "source" => meta.source = v.parse()?,
                "bands" => meta.bands = v.parse().map_err(|_| bad(k, v))?,
                "mode" => meta.mode = v.parse()?,
                "sqrt_n" => meta.sqrt_n = v.parse().map_err(|_| bad(k, v))?,
                "seed" => meta.seed = v.parse().map_err(|_| bad(k, v))?,
                "shadowed" => meta.shadowed = v.parse().map_err(|_| bad(k, v))?,
                "albedo" => meta.albedo = v.clone(),
                "blade_order_hash" if v != &blade_order_hash() => {
                    return Err(Error::Incompatible(format!(
                        "{} was written with blade order {v}, this build uses {}",
                        path.display(),
                        blade_order_hash()
                    )))
                }
                _ => {}
            }
        }
        if meta.bands != 3 {
            return Err(Error::Format(format!("{}: only 3 bands are supported", path.display())));
        }
        Ok(TransferMatrix { rows, meta })
    }
}

pub fn write_transfer_file(path: impl AsRef<Path>, t: &TransferMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_transfer_file(path: impl AsRef<Path>) -> Result<TransferMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TransferMatrix::from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TransferMatrix {
        let rows = (0..4)
            .map(|i| std::array::from_fn(|c| (i * 27 + c) as f64 / 7.0 - 1.3))
            .collect();
        let meta = TransferMeta {
            shadowed: true,
            seed: 9,
            mode: SampleMode::Hemisphere,
            ..Default::default()
        };
        TransferMatrix { rows, meta }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = sample();
        let back = TransferMatrix::from_text(&t.to_text(), Path::new("t")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bare_rows_parse_with_defaults() {
        let line = vec!["0.5"; 27].join(" ");
        let t = TransferMatrix::from_text(&format!("{line}\n{line}\n"), Path::new("t")).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.meta, TransferMeta::default());
    }

    #[test]
    fn foreign_blade_order_is_rejected() {
        let text = sample().to_text().replace(&blade_order_hash(), "0000000000000000");
        assert!(matches!(
            TransferMatrix::from_text(&text, Path::new("t")),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn short_row_reports_line() {
        let text = format!("# bands=3\n{}\n", vec!["1"; 26].join(" "));
        assert!(matches!(
            TransferMatrix::from_text(&text, Path::new("t")),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
