//! Real spherical harmonics up to band 2: basis evaluation, stratified
//! direction sampling and rotation of coefficient vectors.
//!
//! Coefficients are band-major: `l=0`; `l=1, m=-1,0,1`; `l=2, m=-2..2`.
//! Band 1 is proportional to `(y, z, x)`, and the zonal axis is `z`.

mod light;
mod rotation;
mod sampling;

pub use light::{read_light_file, write_light_file, LightCoefficients};
pub use rotation::{band_rotation_matrices, rotate_sh, BandRotation};
pub use sampling::{generate_samples, generate_samples_mode, SampleMode, SampleSet};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Number of bands the pipeline uses.
pub const BANDS: usize = 3;
/// Basis functions for [`BANDS`] bands.
pub const BASIS: usize = BANDS * BANDS;

const C0: f64 = 0.282_094_791_773_878_14; // 1 / (2√π)
const C1: f64 = 0.488_602_511_902_919_9; // √(3 / 4π)
const C2: f64 = 1.092_548_430_592_079_2; // ½ √(15 / π)
const C20: f64 = 0.315_391_565_252_520_05; // ¼ √(5 / π)
const C22: f64 = 0.546_274_215_296_039_6; // ¼ √(15 / π)

/// Fixed-size evaluation of all nine basis functions.
#[inline]
pub fn sh9(d: &Vector3<f64>) -> [f64; BASIS] {
    let (x, y, z) = (d.x, d.y, d.z);
    [
        C0,
        C1 * y,
        C1 * z,
        C1 * x,
        C2 * x * y,
        C2 * y * z,
        C20 * (3.0 * z * z - 1.0),
        C2 * x * z,
        C22 * (x * x - y * y),
    ]
}

/// Real SH basis values for `bands` bands (`bands²` values).
pub fn eval_sh_basis(dir: &Vector3<f64>, bands: usize) -> Result<Vec<f64>> {
    if bands == 0 || bands > BANDS {
        return Err(Error::Contract(format!("SH bands must be in 1..={BANDS}, got {bands}")));
    }
    if (dir.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "SH direction must be unit length, got |d| = {}",
            dir.norm()
        )));
    }
    Ok(sh9(dir)[..bands * bands].to_vec())
}

/// Band index of basis function `j`.
pub fn band_of(j: usize) -> usize {
    (j as f64).sqrt() as usize
}
