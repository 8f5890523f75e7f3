//! Real-SH rotation matrices via the Ivanic–Ruedenberg recurrence.

use nalgebra::{DMatrix, Matrix3};

use super::{LightCoefficients, BANDS};
use crate::cga::Quaternion;
use crate::error::{Error, Result};

/// Per-band rotation matrices of sizes 1, 3, 5, ...
///
/// For a rotation `R`, `sh(R·d) = M · sh(d)` band by band, so `M · c` are the
/// coefficients of a function rotated by `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRotation {
    pub matrices: Vec<DMatrix<f64>>,
}

impl BandRotation {
    pub fn bands(&self) -> usize {
        self.matrices.len()
    }

    /// Applies the block-diagonal rotation to a band-major coefficient vector.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; coeffs.len()];
        let mut offset = 0;
        for m in &self.matrices {
            let size = m.nrows();
            if offset + size > coeffs.len() {
                break;
            }
            for r in 0..size {
                out[offset + r] = (0..size).map(|c| m[(r, c)] * coeffs[offset + c]).sum();
            }
            offset += size;
        }
        out
    }

    /// Largest deviation of any `MᵀM` from identity.
    pub fn orthogonality_defect(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| (m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols())).amax())
            .fold(0.0, f64::max)
    }
}

fn check_rotation(rot: &Matrix3<f64>) -> Result<()> {
    let ortho = (rot.transpose() * rot - Matrix3::identity()).amax();
    let det = rot.determinant();
    if ortho > 1e-6 || (det - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "not a proper rotation (|RᵀR - I| = {ortho:e}, det = {det})"
        )));
    }
    Ok(())
}

/// Rotation matrices for the pipeline's three bands.
pub fn band_rotation_matrices(rot: &Matrix3<f64>) -> Result<BandRotation> {
    band_rotation_matrices_upto(rot, BANDS)
}

pub fn band_rotation_matrices_upto(rot: &Matrix3<f64>, bands: usize) -> Result<BandRotation> {
    check_rotation(rot)?;
    let mut matrices = vec![DMatrix::from_element(1, 1, 1.0)];
    if bands > 1 {
        // band 1 is (y, z, x): M1 = P R Pᵀ
        let p = [1usize, 2, 0];
        let m1 = DMatrix::from_fn(3, 3, |r, c| rot[(p[r], p[c])]);
        matrices.push(m1);
    }
    for l in 2..bands {
        let next = next_band(&matrices[1], &matrices[l - 1], l as i32);
        matrices.push(next);
    }
    Ok(BandRotation { matrices })
}

/// Centered access `M[m][n]` for `m, n ∈ [-l, l]`; zero outside.
fn centered(m: &DMatrix<f64>, i: i32, j: i32) -> f64 {
    let l = (m.nrows() as i32 - 1) / 2;
    if i.abs() > l || j.abs() > l {
        0.0
    } else {
        m[((i + l) as usize, (j + l) as usize)]
    }
}

fn p_term(r1: &DMatrix<f64>, prev: &DMatrix<f64>, i: i32, a: i32, b: i32, l: i32) -> f64 {
    if b == l {
        centered(r1, i, 1) * centered(prev, a, l - 1) - centered(r1, i, -1) * centered(prev, a, -l + 1)
    } else if b == -l {
        centered(r1, i, 1) * centered(prev, a, -l + 1) + centered(r1, i, -1) * centered(prev, a, l - 1)
    } else {
        centered(r1, i, 0) * centered(prev, a, b)
    }
}

fn next_band(r1: &DMatrix<f64>, prev: &DMatrix<f64>, l: i32) -> DMatrix<f64> {
    let size = (2 * l + 1) as usize;
    let p = |i, a, b| p_term(r1, prev, i, a, b, l);
    DMatrix::from_fn(size, size, |row, col| {
        let (m, n) = (row as i32 - l, col as i32 - l);
        let d = if m == 0 { 1.0 } else { 0.0 };
        let denom = if n.abs() < l {
            ((l + n) * (l - n)) as f64
        } else {
            (2 * l * (2 * l - 1)) as f64
        };
        let am = m.abs();
        let u = (((l + m) * (l - m)) as f64 / denom).sqrt();
        let v = 0.5 * ((1.0 + d) * ((l + am - 1) * (l + am)) as f64 / denom).sqrt() * (1.0 - 2.0 * d);
        let w = -0.5 * (((l - am - 1) * (l - am)) as f64 / denom).max(0.0).sqrt() * (1.0 - d);

        let mut value = 0.0;
        if u != 0.0 {
            value += u * p(0, m, n);
        }
        if v != 0.0 {
            let vt = if m == 0 {
                p(1, 1, n) + p(-1, -1, n)
            } else if m > 0 {
                let d1 = if m == 1 { 1.0 } else { 0.0 };
                p(1, m - 1, n) * (1.0f64 + d1).sqrt() - p(-1, -m + 1, n) * (1.0 - d1)
            } else {
                let d1 = if m == -1 { 1.0 } else { 0.0 };
                p(1, m + 1, n) * (1.0 - d1) + p(-1, -m - 1, n) * (1.0f64 + d1).sqrt()
            };
            value += v * vt;
        }
        if w != 0.0 {
            let wt = if m > 0 {
                p(1, m + 1, n) + p(-1, -m - 1, n)
            } else {
                p(1, m - 1, n) - p(-1, -m + 1, n)
            };
            value += w * wt;
        }
        value
    })
}

/// Rotates light coefficients by `q`: light that arrived from `d` now arrives
/// from `q·d`. Each channel is rotated independently.
pub fn rotate_sh(light: &LightCoefficients, q: &Quaternion) -> Result<LightCoefficients> {
    let rot = band_rotation_matrices_upto(&q.to_matrix(), light.bands)?;
    let mut values = light.values.clone();
    for k in 0..3 {
        let channel: Vec<f64> = light.values.iter().map(|c| c[k]).collect();
        for (dst, v) in values.iter_mut().zip(rot.apply(&channel)) {
            dst[k] = v;
        }
    }
    LightCoefficients::new(light.bands, values)
}
