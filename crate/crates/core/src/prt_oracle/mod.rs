//! Ground-truth diffuse transfer: clamped cosine, optionally masked by
//! BVH-traced visibility.

mod bvh;
mod matrix;

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::cga::quaternion_align_y;
use crate::error::{Error, Result};
use crate::mesh_io::{normalize_or_default, Mesh};
use crate::sh::{generate_samples_mode, sh9, SampleMode, SampleSet, BASIS};

pub use bvh::{build_bvh, intersect_triangle, ray_occluded_brute, Aabb, Bvh, BvhNode, LEAF_SIZE};
pub use matrix::{read_transfer_file, write_transfer_file, TransferMatrix, TransferMeta, TransferSource, ROW};

/// Self-intersection guard as a fraction of the bounding-box diagonal.
pub const EPSILON_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrtConfig {
    pub sqrt_n: usize,
    pub seed: u64,
    pub mode: SampleMode,
    pub shadowed: bool,
}

impl Default for PrtConfig {
    fn default() -> Self {
        PrtConfig {
            sqrt_n: 5,
            seed: 0,
            mode: SampleMode::Sphere,
            shadowed: false,
        }
    }
}

/// Runs the configured oracle. Normals are computed if the mesh lacks them.
pub fn compute_transfer(mesh: &Mesh, config: &PrtConfig) -> Result<TransferMatrix> {
    if config.sqrt_n == 0 {
        return Err(Error::Contract("sqrt_n must be at least 1".into()));
    }
    let owned;
    let mesh = if mesh.has_normals() {
        mesh
    } else {
        owned = mesh.clone().with_normals();
        &owned
    };
    let samples = generate_samples_mode(config.sqrt_n, config.seed, config.mode);
    Ok(if config.shadowed {
        transfer_shadowed(mesh, &build_bvh(mesh), &samples)
    } else {
        transfer_unshadowed(mesh, &samples)
    })
}

pub fn transfer_unshadowed(mesh: &Mesh, samples: &SampleSet) -> TransferMatrix {
    transfer(mesh, samples, None)
}

pub fn transfer_shadowed(mesh: &Mesh, bvh: &Bvh, samples: &SampleSet) -> TransferMatrix {
    transfer(mesh, samples, Some(bvh))
}

fn transfer(mesh: &Mesh, samples: &SampleSet, bvh: Option<&Bvh>) -> TransferMatrix {
    let eps = EPSILON_SCALE * mesh.bounding_diagonal();
    let weight = samples.weight();
    let rows = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|i| {
            let n = normalize_or_default(mesh.normals.get(i).copied().unwrap_or_default());
            let origin = mesh.vertices[i] + eps * n;
            let visible = |w: &Vector3<f64>| bvh.is_none_or(|b| !b.ray_occluded(&origin, w, eps));
            let acc = match samples.mode {
                SampleMode::Sphere => sphere_sum(samples, &n, visible),
                SampleMode::Hemisphere => hemisphere_sum(samples, &n, visible),
            };
            let rho = mesh.albedo[i];
            let mut row = [0.0; ROW];
            for j in 0..BASIS {
                for k in 0..3 {
                    row[3 * j + k] = rho[k] / PI * weight * acc[j];
                }
            }
            row
        })
        .collect();
    TransferMatrix {
        rows,
        meta: TransferMeta {
            bands: 3,
            mode: samples.mode,
            sqrt_n: samples.sqrt_n,
            seed: samples.seed,
            shadowed: bvh.is_some(),
            source: TransferSource::Oracle,
            albedo: albedo_label(mesh),
        },
    }
}

fn sphere_sum(samples: &SampleSet, n: &Vector3<f64>, visible: impl Fn(&Vector3<f64>) -> bool) -> [f64; BASIS] {
    let mut acc = [0.0; BASIS];
    for (w, y) in samples.directions.iter().zip(&samples.sh_values) {
        let c = n.dot(w);
        if c > 0.0 && visible(w) {
            for j in 0..BASIS {
                acc[j] += c * y[j];
            }
        }
    }
    acc
}

/// Hemisphere samples are stored about `+y` and re-oriented onto the normal.
fn hemisphere_sum(samples: &SampleSet, n: &Vector3<f64>, visible: impl Fn(&Vector3<f64>) -> bool) -> [f64; BASIS] {
    let q = quaternion_align_y(*n);
    let mut acc = [0.0; BASIS];
    for h in &samples.directions {
        let c = h.y;
        if c <= 0.0 {
            continue;
        }
        let w = q.rotate(*h);
        if visible(&w) {
            let y = sh9(&w);
            for j in 0..BASIS {
                acc[j] += c * y[j];
            }
        }
    }
    acc
}

fn albedo_label(mesh: &Mesh) -> String {
    match mesh.albedo.first() {
        None => "white".into(),
        Some(a) if mesh.albedo.iter().any(|b| b != a) => "per-vertex".into(),
        Some([1.0, 1.0, 1.0]) => "white".into(),
        Some([r, g, b]) => format!("{r},{g},{b}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::shapes;
    use crate::sh::generate_samples;

    fn facet() -> Mesh {
        let mut m = Mesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        m.normals = vec![Vector3::z(); 3];
        m
    }

    #[test]
    fn facet_matches_clamped_cosine() {
        let t = transfer_unshadowed(&facet(), &generate_samples(100, 1));
        for row in &t.rows {
            // DC: π·Y00/π; z-aligned band-1 entry (j=2): (2π/3)·√(3/4π)/π
            let dc = 0.28209479177387814;
            let z1 = 0.4886025119029199 * 2.0 / 3.0;
            assert!((row[0] - dc).abs() < 0.02 * dc, "{}", row[0]);
            assert!((row[6] - z1).abs() < 0.02 * z1, "{}", row[6]);
            assert_eq!(row[0], row[1]);
            assert_eq!(row[1], row[2]);
        }
    }

    #[test]
    fn black_albedo_is_zero_and_doubling_is_exact() {
        let mut m = facet();
        let s = generate_samples(10, 2);
        m.set_albedo([0.0; 3]);
        assert!(transfer_unshadowed(&m, &s).rows.iter().flatten().all(|&v| v == 0.0));
        m.set_albedo([0.3, 0.2, 0.1]);
        let a = transfer_unshadowed(&m, &s);
        m.set_albedo([0.6, 0.4, 0.2]);
        let b = transfer_unshadowed(&m, &s);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for c in 0..ROW {
                assert_eq!(2.0 * ra[c], rb[c]);
            }
        }
    }

    #[test]
    fn isolated_facet_is_unshadowed() {
        let m = facet();
        let s = generate_samples(20, 3);
        let a = transfer_unshadowed(&m, &s);
        let b = transfer_shadowed(&m, &build_bvh(&m), &s);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for c in 0..ROW {
                assert!((ra[c] - rb[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn closed_box_darkens_every_vertex() {
        let m = shapes::box_interior(1.0).with_normals();
        let s = generate_samples(10, 4);
        let a = transfer_unshadowed(&m, &s);
        let b = transfer_shadowed(&m, &build_bvh(&m), &s);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(rb[0] <= ra[0]);
            assert!(rb[0] < ra[0]);
        }
    }

    #[test]
    fn blocker_shadows_only_the_covered_floor() {
        let floor = shapes::grid_plane(2.0, 8);
        let mut blocker = shapes::grid_plane(0.5, 1);
        // face the blocker downward so it is a closed occluder from below
        for t in &mut blocker.triangles {
            t.swap(1, 2);
        }
        let blocker = shapes::translated(blocker, Vector3::new(0.0, 0.5, 0.0));
        let scene = shapes::merge(&[floor.clone(), blocker]).with_normals();
        let s = generate_samples(30, 5);
        let a = transfer_unshadowed(&scene, &s);
        let b = transfer_shadowed(&scene, &build_bvh(&scene), &s);
        for i in 0..floor.vertex_count() {
            let p = scene.vertices[i];
            if p.x.abs() < 0.3 && p.z.abs() < 0.3 {
                assert!(b.rows[i][0] < a.rows[i][0]);
            }
            if p.x.abs() == 2.0 && p.z.abs() == 2.0 {
                assert!((b.rows[i][0] - a.rows[i][0]).abs() < 0.02 * a.rows[i][0]);
            }
            assert!(b.rows[i][0] <= a.rows[i][0]);
        }
    }

    #[test]
    fn hemisphere_mode_follows_the_normal() {
        let m = facet();
        let hemi = transfer_unshadowed(&m, &generate_samples_mode(100, 1, SampleMode::Hemisphere));
        let dc = 0.28209479177387814;
        assert!((hemi.rows[0][0] - dc).abs() < 0.02 * dc);
        assert_eq!(hemi.meta.mode, SampleMode::Hemisphere);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let m = shapes::torus(1.0, 0.4, 12, 10).with_normals();
        let cfg = PrtConfig {
            shadowed: true,
            ..Default::default()
        };
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| compute_transfer(&m, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
