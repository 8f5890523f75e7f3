//! Self-contained JSON document consumed by the browser viewer.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::cga::{blade_names, blade_order_hash};
use crate::error::{Error, Result};
use crate::mesh_io::Mesh;
use crate::neural::{manifest_text, tensor_blob, weights_from_parts, ModelWeights};
use crate::prt_oracle::{TransferMatrix, ROW};
use crate::sh::LightCoefficients;
use crate::shading::DEFAULT_DIVISOR;

pub const FORMAT: &str = "ngash-bundle-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMesh {
    pub positions: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub albedo: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleLight {
    pub name: String,
    /// Nine `[r, g, b]` rows in basis order.
    pub coefficients: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub file: String,
    /// Base64 of the little-endian `f32` blob.
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleWeights {
    pub manifest: String,
    pub tensors: Vec<BundleTensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub blade_order_hash: String,
    pub blades: Vec<String>,
    pub bands: usize,
    pub transfer_layout: String,
    pub transfer_source: String,
    pub intensity: f64,
    pub divisor: f64,
    /// Oracle settings behind the transfer rows.
    pub sampling: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerBundle {
    pub format: String,
    pub metadata: BundleMetadata,
    pub mesh: BundleMesh,
    pub transfer: Vec<Vec<f64>>,
    pub lights: Vec<BundleLight>,
    pub weights: Option<BundleWeights>,
}

impl ViewerBundle {
    /// Assembles a bundle; the mesh must carry normals.
    pub fn new(
        mesh: &Mesh,
        transfer: &TransferMatrix,
        lights: &[(String, LightCoefficients)],
        weights: Option<&ModelWeights>,
        intensity: f64,
    ) -> Result<Self> {
        let v3 = |v: &nalgebra::Vector3<f64>| [v.x, v.y, v.z];
        let m = &transfer.meta;
        let sampling = [
            ("mode", m.mode.to_string()),
            ("sqrt_n", m.sqrt_n.to_string()),
            ("seed", m.seed.to_string()),
            ("shadowed", m.shadowed.to_string()),
            ("albedo", m.albedo.clone()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let bundle = ViewerBundle {
            format: FORMAT.into(),
            metadata: BundleMetadata {
                blade_order_hash: blade_order_hash(),
                blades: blade_names(),
                bands: 3,
                transfer_layout: "3j+k".into(),
                transfer_source: m.source.to_string(),
                intensity,
                divisor: DEFAULT_DIVISOR,
                sampling,
            },
            mesh: BundleMesh {
                positions: mesh.vertices.iter().map(v3).collect(),
                normals: mesh.normals.iter().map(v3).collect(),
                triangles: mesh.triangles.clone(),
                albedo: mesh.albedo.clone(),
            },
            transfer: transfer.rows.iter().map(|r| r.to_vec()).collect(),
            lights: lights
                .iter()
                .map(|(name, l)| BundleLight {
                    name: name.clone(),
                    coefficients: l.values.clone(),
                })
                .collect(),
            weights: weights.map(embed_weights),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Lists every count mismatch.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let n = self.mesh.positions.len();
        if self.format != FORMAT {
            problems.push(format!("format is `{}`, expected `{FORMAT}`", self.format));
        }
        if n == 0 {
            problems.push("mesh has no vertices".into());
        }
        if self.mesh.normals.len() != n {
            problems.push(format!("{} normals for {n} vertices", self.mesh.normals.len()));
        }
        if self.mesh.albedo.len() != n {
            problems.push(format!("{} albedo entries for {n} vertices", self.mesh.albedo.len()));
        }
        if let Some(t) = self.mesh.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            problems.push(format!("triangle {t:?} indexes past {n} vertices"));
        }
        if self.transfer.len() != n {
            problems.push(format!("{} transfer rows for {n} vertices", self.transfer.len()));
        }
        if let Some(i) = self.transfer.iter().position(|r| r.len() != ROW) {
            problems.push(format!(
                "transfer row {i} has {} values, expected {ROW}",
                self.transfer[i].len()
            ));
        }
        if self.lights.is_empty() {
            problems.push("no light sets".into());
        }
        for l in &self.lights {
            if l.coefficients.len() != 9 {
                problems.push(format!(
                    "light `{}` has {} rows, expected 9",
                    l.name,
                    l.coefficients.len()
                ));
            }
        }
        let mut names: Vec<&str> = self.lights.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            problems.push("light names must be unique".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ViewerBundle = serde_json::from_str(text).map_err(|e| Error::Format(format!("bundle: {e}")))?;
        b.validate()?;
        Ok(b)
    }

    /// Decodes the embedded network, if any.
    pub fn model_weights(&self) -> Result<Option<ModelWeights>> {
        let Some(w) = &self.weights else {
            return Ok(None);
        };
        let blobs: BTreeMap<&str, &str> = w.tensors.iter().map(|t| (t.file.as_str(), t.data.as_str())).collect();
        weights_from_parts(&w.manifest, |file| {
            let data = blobs
                .get(file)
                .ok_or_else(|| Error::Integrity(format!("bundle lacks tensor blob `{file}`")))?;
            STANDARD
                .decode(data)
                .map_err(|e| Error::Format(format!("tensor `{file}`: {e}")))
        })
        .map(Some)
    }
}

fn embed_weights(w: &ModelWeights) -> BundleWeights {
    BundleWeights {
        manifest: manifest_text(w),
        tensors: w
            .tensors()
            .into_iter()
            .map(|(name, shape, values)| BundleTensor {
                file: format!("{name}.bin"),
                name,
                shape,
                data: STANDARD.encode(tensor_blob(values)),
            })
            .collect(),
    }
}

pub fn write_bundle(path: impl AsRef<Path>, bundle: &ViewerBundle) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bundle.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<ViewerBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ViewerBundle::from_json(&text)
}
