use std::fs;
use std::path::Path;

use super::{band_of, BANDS};
use crate::error::{Error, Result};
use crate::textio::{fmt_f64, parse_table};

/// SH projection of an environment: `values[j][k]` for basis `j`, channel `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightCoefficients {
    pub values: Vec<[f64; 3]>,
    pub bands: usize,
}

impl LightCoefficients {
    pub fn new(bands: usize, values: Vec<[f64; 3]>) -> Result<Self> {
        if bands == 0 || bands > BANDS || values.len() != bands * bands {
            return Err(Error::Contract(format!(
                "{} light coefficients do not form {bands} bands",
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("non-finite light coefficient".into()));
        }
        Ok(LightCoefficients { values, bands })
    }

    pub fn zeros(bands: usize) -> Self {
        LightCoefficients {
            values: vec![[0.0; 3]; bands * bands],
            bands,
        }
    }

    /// Euclidean norm of each band's coefficients across all channels.
    pub fn band_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.bands];
        for (j, c) in self.values.iter().enumerate() {
            sq[band_of(j)] += c.iter().map(|v| v * v).sum::<f64>();
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        LightCoefficients {
            values: self.values.iter().map(|c| c.map(|v| v * s)).collect(),
            bands: self.bands,
        }
    }

    /// Stable hash of the coefficient bits.
    pub fn content_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.bands.hash(&mut h);
        for v in self.values.iter().flatten() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Text form: `#` comment lines, then one `R G B` line per basis function.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        for c in &self.values {
            s.push_str(&format!("{} {} {}\n", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(c[2])));
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let rows = parse_table(text, 3, path)?;
        let bands = (1..=BANDS).find(|b| b * b == rows.len()).ok_or_else(|| {
            Error::Integrity(format!(
                "{}: {} coefficient lines, expected 9",
                path.display(),
                rows.len()
            ))
        })?;
        LightCoefficients::new(bands, rows.into_iter().map(|r| [r[0], r[1], r[2]]).collect())
    }
}

pub fn write_light_file(path: impl AsRef<Path>, light: &LightCoefficients, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, light.to_text(comments)).map_err(|e| Error::io(path, e))
}

pub fn read_light_file(path: impl AsRef<Path>) -> Result<LightCoefficients> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LightCoefficients::from_text(&text, path)
}
