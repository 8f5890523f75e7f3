//! Equirectangular HDR radiance maps and their SH projection.
//!
//! Directions are y-up. Longitude `φ = atan2(x, −z)` runs across the width
//! (`φ = π` at the image centre, looking down `+z`), colatitude `θ = acos(y)`
//! runs down the height with row 0 at the top.

mod rgbe;

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

pub use rgbe::{decode_hdr, load_hdr, rgb_to_rgbe, rgbe_to_rgb, write_hdr};

use crate::error::{Error, Result};
use crate::sh::{LightCoefficients, SampleMode, SampleSet, BANDS};

#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap {
    pub width: usize,
    pub height: usize,
    /// Row-major linear RGB, row 0 at the top.
    pub pixels: Vec<[f32; 3]>,
    top_mean: [f64; 3],
    bottom_mean: [f64; 3],
}

fn row_mean(row: &[[f32; 3]]) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for p in row {
        for k in 0..3 {
            acc[k] += f64::from(p[k]);
        }
    }
    acc.map(|a| a / row.len() as f64)
}

impl RadianceMap {
    pub fn new(width: usize, height: usize, pixels: Vec<[f32; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Contract(format!(
                "radiance map {width}×{height} with {} pixels",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Contract("radiance must be finite and non-negative".into()));
        }
        let top_mean = row_mean(&pixels[..width]);
        let bottom_mean = row_mean(&pixels[(height - 1) * width..]);
        Ok(RadianceMap {
            width,
            height,
            pixels,
            top_mean,
            bottom_mean,
        })
    }

    /// Fills each texel with `f` evaluated at the texel-centre direction.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(Vector3<f64>) -> [f32; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(texel_direction(width, height, x, y)));
            }
        }
        RadianceMap::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        RadianceMap::new(width, height, vec![rgb; width * height]).expect("valid constant map")
    }

    fn texel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x].map(f64::from)
    }

    /// Linear interpolation along row `y` at fractional column `px`, wrapping in longitude.
    fn row_sample(&self, y: usize, px: f64) -> [f64; 3] {
        let x0 = px.floor();
        let f = px - x0;
        let w = self.width as i64;
        let a = (x0 as i64).rem_euclid(w) as usize;
        let b = (x0 as i64 + 1).rem_euclid(w) as usize;
        lerp(self.texel(a, y), self.texel(b, y), f)
    }
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * t)
}

/// Direction through the centre of texel `(x, y)`.
pub fn texel_direction(width: usize, height: usize, x: usize, y: usize) -> Vector3<f64> {
    let phi = TAU * (x as f64 + 0.5) / width as f64;
    let theta = PI * (y as f64 + 0.5) / height as f64;
    Vector3::new(theta.sin() * phi.sin(), theta.cos(), -theta.sin() * phi.cos())
}

/// Bilinear lookup with longitudinal wrap.
///
/// Between a pole and the first (or last) row of texel centres the lookup
/// blends towards the mean of that row, so the pole itself returns the row
/// average regardless of longitude.
pub fn sample_radiance(map: &RadianceMap, dir: &Vector3<f64>) -> [f64; 3] {
    let theta = dir.y.clamp(-1.0, 1.0).acos();
    let phi = dir.x.atan2(-dir.z).rem_euclid(TAU);
    let px = phi / TAU * map.width as f64 - 0.5;
    let py = theta / PI * map.height as f64 - 0.5;
    let last = (map.height - 1) as f64;
    if py < 0.0 {
        let t = (2.0 * py + 1.0).max(0.0);
        return lerp(map.top_mean, map.row_sample(0, px), t);
    }
    if py > last {
        let t = (2.0 * (py - last)).min(1.0);
        return lerp(map.row_sample(map.height - 1, px), map.bottom_mean, t);
    }
    let y0 = py.floor().min(last - 1.0).max(0.0);
    if map.height == 1 {
        return map.row_sample(0, px);
    }
    let fy = py - y0;
    lerp(map.row_sample(y0 as usize, px), map.row_sample(y0 as usize + 1, px), fy)
}

/// Monte-Carlo SH projection `c_j = (4π/N) Σ L(ωᵢ) Y_j(ωᵢ)` per channel.
pub fn project_light(map: &RadianceMap, samples: &SampleSet, bands: usize) -> Result<LightCoefficients> {
    if samples.mode != SampleMode::Sphere {
        return Err(Error::Contract("light projection needs full-sphere samples".into()));
    }
    project_fn(samples, bands, |d| sample_radiance(map, d))
}

/// Same estimator for an arbitrary radiance function.
pub fn project_fn(
    samples: &SampleSet,
    bands: usize,
    radiance: impl Fn(&Vector3<f64>) -> [f64; 3],
) -> Result<LightCoefficients> {
    if bands == 0 || bands > BANDS {
        return Err(Error::Contract(format!("bands must be in 1..={BANDS}")));
    }
    let basis = bands * bands;
    let mut acc = vec![[0.0; 3]; basis];
    for (d, y) in samples.directions.iter().zip(&samples.sh_values) {
        let l = radiance(d);
        for j in 0..basis {
            for k in 0..3 {
                acc[j][k] += l[k] * y[j];
            }
        }
    }
    let w = samples.weight();
    LightCoefficients::new(bands, acc.into_iter().map(|c| c.map(|v| v * w)).collect())
}
