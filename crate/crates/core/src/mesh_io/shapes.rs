//! Procedural meshes used by tests, benchmarks and demos.

use std::f64::consts::TAU;

use nalgebra::Vector3;

use super::Mesh;

/// Torus around the y axis with `rings × sides` vertices.
pub fn torus(major: f64, minor: f64, rings: usize, sides: usize) -> Mesh {
    let mut vertices = Vec::with_capacity(rings * sides);
    for i in 0..rings {
        let u = TAU * i as f64 / rings as f64;
        for j in 0..sides {
            let v = TAU * j as f64 / sides as f64;
            let r = major + minor * v.cos();
            vertices.push(Vector3::new(r * u.cos(), minor * v.sin(), r * u.sin()));
        }
    }
    let idx = |i: usize, j: usize| ((i % rings) * sides + (j % sides)) as u32;
    let mut triangles = Vec::with_capacity(2 * rings * sides);
    for i in 0..rings {
        for j in 0..sides {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Latitude/longitude sphere with poles on the y axis.
pub fn uv_sphere(radius: f64, stacks: usize, slices: usize) -> Mesh {
    let mut vertices = vec![Vector3::new(0.0, radius, 0.0)];
    for i in 1..stacks {
        let theta = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = TAU * j as f64 / slices as f64;
            vertices.push(radius * Vector3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin()));
        }
    }
    vertices.push(Vector3::new(0.0, -radius, 0.0));
    let south = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + j % slices) as u32;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j + 1), ring(1, j)]);
        triangles.push([south, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Axis-aligned cube `[-h, h]³` with outward winding.
///
/// Every face is split along the diagonal joining its two corners whose
/// coordinate-sign product is positive, so all corners see the same face
/// weights.
pub fn cube(half: f64) -> Mesh {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8u32 {
        let s = |bit: u32| if i & (1 << bit) != 0 { half } else { -half };
        vertices.push(Vector3::new(s(0), s(1), s(2)));
    }
    let parity = |i: u32| i.count_ones() % 2 == 1; // odd count of + signs => positive product
    let mut triangles = Vec::with_capacity(12);
    for axis in 0..3u32 {
        for side in [0u32, 1] {
            let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
            let base = side << axis;
            let mut quad = [base, base | (1 << a1), base | (1 << a1) | (1 << a2), base | (1 << a2)];
            // outward winding: (a1 × a2) = +axis, so flip on the negative side
            if side == 0 {
                quad.swap(1, 3);
            }
            let split = if parity(quad[0]) == parity(quad[2]) && parity(quad[0]) {
                0
            } else {
                1
            };
            let [p, q, r, s] = if split == 0 {
                quad
            } else {
                [quad[1], quad[2], quad[3], quad[0]]
            };
            triangles.push([p, q, r]);
            triangles.push([p, r, s]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Square grid in the y=0 plane spanning `[-half, half]²`, facing +y.
pub fn grid_plane(half: f64, cells: usize) -> Mesh {
    let n = cells + 1;
    let mut vertices = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = -half + 2.0 * half * j as f64 / cells as f64;
            let z = -half + 2.0 * half * i as f64 / cells as f64;
            vertices.push(Vector3::new(x, 0.0, z));
        }
    }
    let idx = |i: usize, j: usize| (i * n + j) as u32;
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for i in 0..cells {
        for j in 0..cells {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Closed cube seen from inside: winding (and computed normals) face inward.
pub fn box_interior(half: f64) -> Mesh {
    let mut m = cube(half);
    for t in &mut m.triangles {
        t.swap(1, 2);
    }
    m
}

/// Concatenates meshes, offsetting indices.
pub fn merge(parts: &[Mesh]) -> Mesh {
    let mut out = Mesh::new(Vec::new(), Vec::new());
    for p in parts {
        let base = out.vertices.len() as u32;
        out.vertices.extend_from_slice(&p.vertices);
        out.albedo.extend_from_slice(&p.albedo);
        out.triangles.extend(p.triangles.iter().map(|t| t.map(|i| i + base)));
    }
    out
}

/// Moves every vertex by `offset`.
pub fn translated(mut mesh: Mesh, offset: Vector3<f64>) -> Mesh {
    for v in &mut mesh.vertices {
        *v += offset;
    }
    mesh
}
