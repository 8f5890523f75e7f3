//! Binary AABB tree over mesh triangles for any-hit visibility queries.

use nalgebra::Vector3;

use crate::mesh_io::Mesh;

/// Largest number of triangles in a leaf.
pub const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && other.max[a] <= self.max[a])
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    /// Slab test against `(t_min, ∞)`. NaNs from `0 · ∞` are discarded by `min`/`max`.
    #[inline]
    fn hit(&self, origin: &Vector3<f64>, inv_dir: &Vector3<f64>, t_min: f64) -> bool {
        let mut t0 = t_min;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let near = (self.min[a] - origin[a]) * inv_dir[a];
            let far = (self.max[a] - origin[a]) * inv_dir[a];
            let (lo, hi) = if near <= far { (near, far) } else { (far, near) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    /// Leaves: first slot in the triangle order. Interior nodes: index of the right child
    /// (the left child immediately follows its parent).
    pub offset: u32,
    /// Triangle count for leaves, 0 for interior nodes.
    pub count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    /// Mesh triangle index at each leaf slot.
    order: Vec<u32>,
    /// Corner positions in leaf-slot order.
    corners: Vec<[Vector3<f64>; 3]>,
}

/// Median split on the longest centroid axis. Deterministic: ties break on triangle index.
pub fn build_bvh(mesh: &Mesh) -> Bvh {
    let tris: Vec<[Vector3<f64>; 3]> = (0..mesh.triangles.len()).map(|t| mesh.triangle_positions(t)).collect();
    let centroids: Vec<Vector3<f64>> = tris.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
    let mut order: Vec<u32> = (0..tris.len() as u32).collect();
    let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
    if !tris.is_empty() {
        // pad boxes so edge-grazing rays are never culled before the triangle test
        let scale = mesh.bounding_diagonal().max(1e-300);
        let pad = 1e-9 * scale;
        build_node(&tris, &centroids, &mut order, 0, &mut nodes, pad);
    }
    let corners = order.iter().map(|&t| tris[t as usize]).collect();
    Bvh { nodes, order, corners }
}

fn build_node(
    tris: &[[Vector3<f64>; 3]],
    centroids: &[Vector3<f64>],
    order: &mut [u32],
    first: usize,
    nodes: &mut Vec<BvhNode>,
    pad: f64,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &t in order.iter() {
        for p in &tris[t as usize] {
            bounds.grow(p);
        }
        cbounds.grow(&centroids[t as usize]);
    }
    bounds.min -= Vector3::repeat(pad);
    bounds.max += Vector3::repeat(pad);

    let me = nodes.len();
    nodes.push(BvhNode {
        bounds,
        offset: first as u32,
        count: order.len() as u32,
    });
    if order.len() <= LEAF_SIZE {
        return me;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = extent.imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build_node(tris, centroids, left, first, nodes, pad);
    let right_index = build_node(tris, centroids, right, first + mid, nodes, pad);
    nodes[me].offset = right_index as u32;
    nodes[me].count = 0;
    me
}

/// Watertight ray/triangle test (Woop, Benthin & Wald). Returns the hit
/// distance along `dir`, counting both faces.
#[inline]
pub fn intersect_triangle(origin: &Vector3<f64>, dir: &Vector3<f64>, tri: &[Vector3<f64>; 3]) -> Option<f64> {
    let kz = dir.iamax();
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if dir[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sz = 1.0 / dir[kz];
    let sx = dir[kx] * sz;
    let sy = dir[ky] * sz;

    let a = tri[0] - origin;
    let b = tri[1] - origin;
    let c = tri[2] - origin;
    let (ax, ay) = (a[kx] - sx * a[kz], a[ky] - sy * a[kz]);
    let (bx, by) = (b[kx] - sx * b[kz], b[ky] - sy * b[kz]);
    let (cx, cy) = (c[kx] - sx * c[kz], c[ky] - sy * c[kz]);

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + v + w;
    if det == 0.0 {
        return None;
    }
    let t = (u * a[kz] + v * b[kz] + w * c[kz]) * sz / det;
    Some(t)
}

impl Bvh {
    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Mesh triangle indices stored in a leaf.
    pub fn leaf_triangles(&self, node: &BvhNode) -> &[u32] {
        let start = node.offset as usize;
        &self.order[start..start + node.count as usize]
    }

    pub fn triangle_count(&self) -> usize {
        self.order.len()
    }

    /// True iff some triangle is hit at a distance greater than `t_min`.
    pub fn ray_occluded(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t_min: f64) -> bool {
        self.occluded_counting(origin, dir, t_min).0
    }

    /// Visibility verdict plus the number of triangle tests performed.
    pub fn occluded_counting(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t_min: f64) -> (bool, usize) {
        let mut tested = 0;
        if self.nodes.is_empty() {
            return (false, tested);
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = [0u32; 64];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !node.bounds.hit(origin, &inv, t_min) {
                continue;
            }
            if node.is_leaf() {
                let start = node.offset as usize;
                for tri in &self.corners[start..start + node.count as usize] {
                    tested += 1;
                    if intersect_triangle(origin, dir, tri).is_some_and(|t| t > t_min) {
                        return (true, tested);
                    }
                }
            } else {
                let here = stack[top];
                stack[top] = node.offset;
                stack[top + 1] = here + 1;
                top += 2;
            }
        }
        (false, tested)
    }
}

/// Reference visibility: every triangle of the mesh, no acceleration.
pub fn ray_occluded_brute(mesh: &Mesh, origin: &Vector3<f64>, dir: &Vector3<f64>, t_min: f64) -> bool {
    (0..mesh.triangles.len())
        .any(|t| intersect_triangle(origin, dir, &mesh.triangle_positions(t)).is_some_and(|h| h > t_min))
}
