//! Oracle-versus-network timing and accuracy on one mesh.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh_io::Mesh;
use crate::neural::{predict_mesh, ModelWeights};
use crate::prt_oracle::{compute_transfer, PrtConfig, TransferMatrix};

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub vertices: usize,
    pub sqrt_n: usize,
    pub mode: String,
    pub shadowed: bool,
    pub oracle_seconds: f64,
    pub predict_seconds: f64,
    /// `oracle_seconds / predict_seconds`.
    pub speedup: f64,
    /// Mean of the N·27 squared residuals.
    pub mse: f64,
    /// Population standard deviation of the N·27 residuals.
    pub std: f64,
}

/// Mean squared residual and residual standard deviation over every coefficient.
pub fn residual_stats(reference: &TransferMatrix, predicted: &TransferMatrix) -> Result<(f64, f64)> {
    if reference.len() != predicted.len() || reference.is_empty() {
        return Err(Error::Contract(format!(
            "cannot compare {} rows with {} rows",
            reference.len(),
            predicted.len()
        )));
    }
    let residuals: Vec<f64> = reference
        .rows
        .iter()
        .zip(&predicted.rows)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| y - x))
        .collect();
    let n = residuals.len() as f64;
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok((mse, var.sqrt()))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed()))
}

/// Runs the oracle (BVH build included) and the network on the same mesh.
/// Both timings exclude file I/O.
pub fn run_bench(
    mesh: &Mesh,
    weights: &ModelWeights,
    config: &PrtConfig,
) -> Result<(BenchReport, TransferMatrix, TransferMatrix)> {
    let mesh = mesh.clone().with_normals();
    let (oracle, t_oracle) = timed(|| compute_transfer(&mesh, config))?;
    let (predicted, t_predict) = timed(|| predict_mesh(weights, &mesh))?;
    let (mse, std) = residual_stats(&oracle, &predicted)?;
    let (o, p) = (t_oracle.as_secs_f64(), t_predict.as_secs_f64());
    let report = BenchReport {
        vertices: mesh.vertex_count(),
        sqrt_n: config.sqrt_n,
        mode: config.mode.to_string(),
        shadowed: config.shadowed,
        oracle_seconds: o,
        predict_seconds: p,
        speedup: o / p.max(f64::MIN_POSITIVE),
        mse,
        std,
    };
    Ok((report, oracle, predicted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prt_oracle::{TransferMeta, ROW};

    #[test]
    fn stats_against_hand_values() {
        let a = TransferMatrix {
            rows: vec![[0.0; ROW]; 2],
            meta: TransferMeta::default(),
        };
        let mut b = a.clone();
        b.rows[0][0] = 2.0;
        let (mse, std) = residual_stats(&a, &b).unwrap();
        let n = 54.0;
        assert!((mse - 4.0 / n).abs() < 1e-15);
        let mean = 2.0 / n;
        let var = ((2.0 - mean) * (2.0 - mean) + (n - 1.0) * mean * mean) / n;
        assert!((std - var.sqrt()).abs() < 1e-15);
    }
}
