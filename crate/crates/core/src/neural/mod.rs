//! The neural field: an MLP from 32 motor coefficients to 27 transfer
//! coefficients, trained from scratch.

mod io;
mod model;
mod train;

use ndarray::Array2;

use crate::cga::encode_vertex_normal;
use crate::error::Result;
use crate::mesh_io::{normalize_or_default, Mesh};
use crate::prt_oracle::{TransferMatrix, TransferMeta, TransferSource, ROW};

pub use io::{load_weights, manifest_text, save_weights, tensor_blob, weights_from_parts, FORMAT, MANIFEST};
pub use model::{
    init_model, init_model_with, Arch, BatchNorm, Gradients, Hidden, Linear, Mode, ModelWeights, BN_EPS, BN_MOMENTUM,
    INPUT, OUTPUT, VAR_FLOOR,
};
pub use train::{mse, pairs_to_arrays, train, train_with_progress, TrainConfig, TrainHistory, TrainOutcome, Trainer};

/// Rows evaluated per forward call during prediction.
const CHUNK: usize = 1024;

/// Network input rows for every vertex of a mesh (normals computed if absent).
pub fn mesh_inputs(mesh: &Mesh) -> Array2<f64> {
    let owned;
    let mesh = if mesh.has_normals() {
        mesh
    } else {
        owned = mesh.clone().with_normals();
        &owned
    };
    let mut x = Array2::zeros((mesh.vertex_count(), INPUT));
    for (i, (v, n)) in mesh.vertices.iter().zip(&mesh.normals).enumerate() {
        let m = encode_vertex_normal(*v, normalize_or_default(*n));
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&m.0[..]));
    }
    x
}

/// Eval-mode transfer prediction for every vertex.
pub fn predict_mesh(weights: &ModelWeights, mesh: &Mesh) -> Result<TransferMatrix> {
    let x = mesh_inputs(mesh);
    let mut rows = Vec::with_capacity(x.nrows());
    for start in (0..x.nrows()).step_by(CHUNK) {
        let end = (start + CHUNK).min(x.nrows());
        let out = weights.predict(x.slice(ndarray::s![start..end, ..]))?;
        for r in out.rows() {
            let mut row = [0.0; ROW];
            row.iter_mut().zip(r.iter()).for_each(|(d, s)| *d = *s);
            rows.push(row);
        }
    }
    let meta = TransferMeta {
        source: TransferSource::Predicted,
        ..weights.sampling.clone().unwrap_or_default()
    };
    Ok(TransferMatrix { rows, meta })
}
