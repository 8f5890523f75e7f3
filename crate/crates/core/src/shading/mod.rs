//! Vertex colors from transfer and light coefficients, with change detection.

mod preview;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh_io::Mesh;
use crate::prt_oracle::TransferMatrix;
use crate::sh::{LightCoefficients, BASIS};
use crate::textio::{fmt_row, parse_table};

pub use preview::{render_preview, write_ppm};

/// Divisor applied by the shading equation.
pub const DEFAULT_DIVISOR: f64 = 255.0;
/// Default intensity multiplier; cancels the divisor for physically scaled data.
pub const DEFAULT_INTENSITY: f64 = 255.0;

/// Linear RGB per vertex, unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexColors {
    pub rows: Vec<[f64; 3]>,
}

impl VertexColors {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * 72);
        for r in &self.rows {
            s.push_str(&fmt_row(r));
            s.push('\n');
        }
        s
    }
}

pub fn write_colors(path: impl AsRef<Path>, colors: &VertexColors) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, colors.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_colors(path: impl AsRef<Path>) -> Result<VertexColors> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_table(&text, 3, path)?
        .into_iter()
        .map(|r| [r[0], r[1], r[2]])
        .collect();
    Ok(VertexColors { rows })
}

/// `C_ik = intensity · (1/255) · Σ_j P_i,3j+k · L_jk`.
pub fn shade(transfer: &TransferMatrix, light: &LightCoefficients, intensity: f64) -> Result<VertexColors> {
    shade_with(transfer, light, intensity, DEFAULT_DIVISOR)
}

pub fn shade_with(
    transfer: &TransferMatrix,
    light: &LightCoefficients,
    intensity: f64,
    divisor: f64,
) -> Result<VertexColors> {
    if transfer.meta.bands != 3 || light.bands != 3 || light.values.len() != BASIS {
        return Err(Error::Contract(format!(
            "shading needs 3-band transfer and light, got {} and {}",
            transfer.meta.bands, light.bands
        )));
    }
    let scale = intensity * (1.0 / divisor);
    let l = &light.values;
    let rows = transfer
        .rows
        .par_iter()
        .map(|p| {
            std::array::from_fn(|k| {
                let mut sum = 0.0;
                for j in 0..BASIS {
                    sum += p[3 * j + k] * l[j][k];
                }
                scale * sum
            })
        })
        .collect();
    Ok(VertexColors { rows })
}

/// Colors from the last evaluation, keyed by geometry and light content.
#[derive(Debug, Clone, Default)]
pub struct ShadeCache {
    geometry: Option<u64>,
    light: Option<u64>,
    colors: Option<VertexColors>,
}

impl ShadeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn needs_update(&self, mesh: &Mesh, light: &LightCoefficients) -> bool {
        self.colors.is_none() || self.geometry != Some(mesh.geometry_hash()) || self.light != Some(light.content_hash())
    }

    pub fn colors(&self) -> Option<&VertexColors> {
        self.colors.as_ref()
    }

    /// Returns cached colors when inputs are unchanged, otherwise runs
    /// `compute` and stores its result. The flag reports a recompute.
    pub fn get_or_update(
        &mut self,
        mesh: &Mesh,
        light: &LightCoefficients,
        compute: impl FnOnce() -> Result<VertexColors>,
    ) -> Result<(&VertexColors, bool)> {
        let stale = self.needs_update(mesh, light);
        if stale {
            let colors = compute()?;
            self.geometry = Some(mesh.geometry_hash());
            self.light = Some(light.content_hash());
            self.colors = Some(colors);
        }
        Ok((self.colors.as_ref().expect("filled above"), stale))
    }
}
