//! Triangle meshes: OBJ loading, validation and vertex-normal generation.

mod obj;
pub mod shapes;

use std::hash::{Hash, Hasher};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use obj::{load_obj, parse_obj, save_obj, ObjStats};

/// Normal assigned to isolated vertices and zero-length normals.
pub const DEFAULT_NORMAL: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);

/// Indexed triangle mesh with per-vertex normals and albedo.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Either empty (not yet computed) or one unit normal per vertex.
    pub normals: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    /// Linear RGB in [0,1] per vertex.
    pub albedo: Vec<[f64; 3]>,
}

impl Mesh {
    /// Builds a mesh with white albedo and no normals.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        let albedo = vec![[1.0; 3]; vertices.len()];
        Mesh {
            vertices,
            normals: Vec::new(),
            triangles,
            albedo,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_normals(&self) -> bool {
        !self.normals.is_empty() && self.normals.len() == self.vertices.len()
    }

    /// Computes normals only when the mesh does not carry them.
    pub fn with_normals(mut self) -> Self {
        if !self.has_normals() {
            self.normals = compute_normals(&self);
        }
        self
    }

    pub fn set_albedo(&mut self, rgb: [f64; 3]) {
        self.albedo = vec![rgb; self.vertices.len()];
    }

    /// Corner positions of triangle `t`.
    pub fn triangle_positions(&self, t: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Axis-aligned bounds `(min, max)`; `None` for an empty mesh.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.vertices.first()?;
        Some(
            self.vertices
                .iter()
                .fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))),
        )
    }

    pub fn bounding_diagonal(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    /// Checks every structural invariant and lists all violations.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        let mut problems = Vec::new();
        if !self.normals.is_empty() && self.normals.len() != n {
            problems.push(format!("normals: {} entries for {} vertices", self.normals.len(), n));
        }
        if self.albedo.len() != n {
            problems.push(format!("albedo: {} entries for {} vertices", self.albedo.len(), n));
        }
        for (i, nrm) in self.normals.iter().enumerate() {
            if (nrm.norm() - 1.0).abs() > 1e-6 {
                problems.push(format!("normal {i} has length {}", nrm.norm()));
                break;
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                problems.push(format!("triangle {t} references a vertex out of range"));
            } else if tri[0] == tri[1] && tri[1] == tri[2] {
                problems.push(format!("triangle {t} is degenerate"));
            }
        }
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            problems.push("non-finite vertex position".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Hash of the geometry that drives per-vertex transfer (positions and normals).
    pub fn geometry_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.vertices.len().hash(&mut h);
        for v in self.vertices.iter().chain(self.normals.iter()) {
            for c in v.iter() {
                c.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// Normalizes `n`, substituting the upward default for zero or non-finite input.
pub fn normalize_or_default(n: Vector3<f64>) -> Vector3<f64> {
    let len = n.norm();
    if len > 0.0 && len.is_finite() {
        n / len
    } else {
        DEFAULT_NORMAL
    }
}

/// Area-weighted vertex normals.
///
/// Each triangle contributes its unnormalized cross product (twice its area
/// times its unit normal) to its three corners. Vertices with no incident
/// triangle, or whose contributions cancel, get [`DEFAULT_NORMAL`].
pub fn compute_normals(mesh: &Mesh) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_positions(t);
        let face = (b - a).cross(&(c - a));
        for &i in &mesh.triangles[t] {
            acc[i as usize] += face;
        }
    }
    acc.into_iter().map(normalize_or_default).collect()
}
