//! Conformal geometric algebra Cl(4,1).
//!
//! Basis vectors are ordered `e1, e2, e3, e+, e-` with `e1² = e2² = e3² = e+² = 1`
//! and `e-² = -1`. The 32 blades of a [`Multivector32`] are stored in graded
//! order (scalar, 5 vectors, 10 bivectors, 10 trivectors, 5 quadvectors,
//! pseudoscalar), lexicographic within a grade. This order is the network
//! input layout; [`blade_order_hash`] fingerprints it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{Matrix3, Matrix4, Vector3};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh_io::normalize_or_default;

pub const BLADES: usize = 32;

/// Bit index of each basis vector inside a blade mask.
pub const E1: u8 = 0b00001;
pub const E2: u8 = 0b00010;
pub const E3: u8 = 0b00100;
pub const EP: u8 = 0b01000;
pub const EM: u8 = 0b10000;

const VECTOR_NAMES: [&str; 5] = ["1", "2", "3", "p", "m"];

struct Tables {
    /// Blade bitmask at each storage slot.
    masks: [u8; BLADES],
    /// Storage slot for each bitmask.
    slot_of: [usize; BLADES],
    /// `products[i][j] = (slot, sign)` of `blade_i * blade_j`.
    products: [[(u8, f64); BLADES]; BLADES],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut order: Vec<u8> = (0..BLADES as u8).collect();
        order.sort_by_key(|&m| (m.count_ones(), lex_key(m)));
        let mut masks = [0u8; BLADES];
        let mut slot_of = [0usize; BLADES];
        for (slot, &m) in order.iter().enumerate() {
            masks[slot] = m;
            slot_of[m as usize] = slot;
        }
        let mut products = [[(0u8, 0.0); BLADES]; BLADES];
        for i in 0..BLADES {
            for j in 0..BLADES {
                let (a, b) = (masks[i], masks[j]);
                let sign = reorder_sign(a, b) * metric_sign(a & b);
                products[i][j] = (slot_of[(a ^ b) as usize] as u8, sign);
            }
        }
        Tables {
            masks,
            slot_of,
            products,
        }
    })
}

/// Orders blades of equal grade by their ascending list of vector indices.
fn lex_key(mask: u8) -> Vec<u8> {
    (0..5).filter(|b| mask & (1 << b) != 0).collect()
}

/// Sign from sorting the concatenated vector list `a ++ b` into canonical order.
fn reorder_sign(a: u8, b: u8) -> f64 {
    let mut a = a >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn metric_sign(common: u8) -> f64 {
    if common & EM != 0 {
        -1.0
    } else {
        1.0
    }
}

/// Storage slot of a blade given as a bitmask of basis vectors.
pub fn slot(mask: u8) -> usize {
    tables().slot_of[mask as usize]
}

/// Blade bitmask stored at `slot`.
pub fn blade_mask(slot: usize) -> u8 {
    tables().masks[slot]
}

/// Grade of the blade at `slot`.
pub fn grade(slot: usize) -> u32 {
    blade_mask(slot).count_ones()
}

/// Human-readable blade names in storage order, e.g. `1`, `e1`, `e12`, `e1pm`.
pub fn blade_names() -> Vec<String> {
    (0..BLADES)
        .map(|s| {
            let m = blade_mask(s);
            if m == 0 {
                "1".to_string()
            } else {
                let ids: String = (0..5).filter(|b| m & (1 << b) != 0).map(|b| VECTOR_NAMES[b]).collect();
                format!("e{ids}")
            }
        })
        .collect()
}

/// Short hex fingerprint of the blade order and metric.
pub fn blade_order_hash() -> String {
    let mut h = Sha256::new();
    h.update(b"Cl(4,1) e1 e2 e3 e+ e- metric ++++-;");
    h.update(blade_names().join(",").as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Element of Cl(4,1), 32 coefficients in graded blade order.
#[derive(Clone, Copy, PartialEq)]
pub struct Multivector32(pub [f64; BLADES]);

impl Default for Multivector32 {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for Multivector32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = blade_names();
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| format!("{c}*{}", names[i]))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Multivector32 {
    pub const fn zero() -> Self {
        Multivector32([0.0; BLADES])
    }

    pub fn scalar(s: f64) -> Self {
        let mut m = Self::zero();
        m.0[0] = s;
        m
    }

    /// Single blade with coefficient `c`.
    pub fn blade(mask: u8, c: f64) -> Self {
        let mut m = Self::zero();
        m.0[slot(mask)] = c;
        m
    }

    /// Grade-1 element `x e1 + y e2 + z e3`.
    pub fn euclidean(v: Vector3<f64>) -> Self {
        let mut m = Self::zero();
        m.0[slot(E1)] = v.x;
        m.0[slot(E2)] = v.y;
        m.0[slot(E3)] = v.z;
        m
    }

    /// `e∞ = e- + e+`.
    pub fn e_inf() -> Self {
        Self::blade(EM, 1.0) + Self::blade(EP, 1.0)
    }

    /// `e0 = (e- - e+) / 2`.
    pub fn e_origin() -> Self {
        Self::blade(EM, 0.5) + Self::blade(EP, -0.5)
    }

    /// Conformal embedding `p + ½|p|² e∞ + e0`.
    pub fn point(p: Vector3<f64>) -> Self {
        Self::euclidean(p) + Self::e_inf() * (0.5 * p.norm_squared()) + Self::e_origin()
    }

    /// Euclidean position of a (possibly scaled) conformal point.
    ///
    /// Returns `None` when the point has no `e0` weight (a point at infinity).
    pub fn point_position(&self) -> Option<Vector3<f64>> {
        // X = x + α e∞ + β e0  =>  e+: α - β/2, e-: α + β/2
        let beta = self.0[slot(EM)] - self.0[slot(EP)];
        if beta.abs() < 1e-300 {
            return None;
        }
        Some(self.vector_part() / beta)
    }

    /// `(e1, e2, e3)` coefficients.
    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.0[slot(E1)], self.0[slot(E2)], self.0[slot(E3)])
    }

    pub fn coefficient(&self, mask: u8) -> f64 {
        self.0[slot(mask)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn grade_part(&self, k: u32) -> Self {
        let mut out = *self;
        for (s, c) in out.0.iter_mut().enumerate() {
            if grade(s) != k {
                *c = 0.0;
            }
        }
        out
    }

    /// Largest absolute coefficient among odd-grade blades.
    pub fn odd_magnitude(&self) -> f64 {
        (0..BLADES)
            .filter(|&s| grade(s) % 2 == 1)
            .map(|s| self.0[s].abs())
            .fold(0.0, f64::max)
    }

    pub fn geometric_product(&self, rhs: &Self) -> Self {
        let t = tables();
        let mut out = [0.0; BLADES];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &t.products[i];
            for (j, &b) in rhs.0.iter().enumerate() {
                if b != 0.0 {
                    let (k, sign) = row[j];
                    out[k as usize] += sign * a * b;
                }
            }
        }
        Multivector32(out)
    }

    /// Grade-k part multiplied by `(-1)^(k(k-1)/2)`.
    pub fn reverse(&self) -> Self {
        let mut out = *self;
        for (s, c) in out.0.iter_mut().enumerate() {
            let k = grade(s);
            if (k * k.saturating_sub(1) / 2) % 2 == 1 {
                *c = -*c;
            }
        }
        out
    }

    /// Deviation of `self * reverse(self)` from the scalar 1 (max abs over components).
    pub fn versor_defect(&self) -> f64 {
        let n = self.geometric_product(&self.reverse());
        n.0.iter()
            .enumerate()
            .map(|(s, &c)| if s == 0 { (c - 1.0).abs() } else { c.abs() })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Multivector32 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl Sub for Multivector32 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl Neg for Multivector32 {
    type Output = Self;
    fn neg(self) -> Self {
        Multivector32(self.0.map(|c| -c))
    }
}

impl Mul<f64> for Multivector32 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Multivector32(self.0.map(|c| c * s))
    }
}

impl Mul for Multivector32 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.geometric_product(&rhs)
    }
}

pub fn geometric_product(a: &Multivector32, b: &Multivector32) -> Multivector32 {
    a.geometric_product(b)
}

pub fn reverse(a: &Multivector32) -> Multivector32 {
    a.reverse()
}

/// Sandwich `V x reverse(V)`.
pub fn apply_versor(v: &Multivector32, x: &Multivector32) -> Multivector32 {
    v.geometric_product(x).geometric_product(&v.reverse())
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation by `angle` radians about `axis` (normalized here).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::new(c, s * a.x, s * a.y, s * a.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * rhs` (apply `rhs` first when rotating).
    pub fn mul(&self, r: &Quaternion) -> Quaternion {
        let (a, b) = (self, r);
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// Rotates `v` by `q v q*`.
    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        let u = Vector3::new(self.x, self.y, self.z);
        let t = 2.0 * u.cross(&v);
        v + self.w * t + u.cross(&t)
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let Quaternion { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

/// Minimal-angle unit quaternion rotating `(0,1,0)` onto `n`.
///
/// The antipodal case `n = (0,-1,0)` resolves to a half turn about `(1,0,0)`.
pub fn quaternion_align_y(n: Vector3<f64>) -> Quaternion {
    // half-way construction: q ∝ (1 + y·n, y × n)
    let w = 1.0 + n.y;
    let (x, y, z) = (n.z, 0.0, -n.x);
    let len = (w * w + x * x + z * z).sqrt();
    if x == 0.0 && z == 0.0 && n.y < 0.0 || len < 1e-300 {
        return Quaternion::new(0.0, 1.0, 0.0, 0.0);
    }
    Quaternion::new(w / len, x / len, y, z / len)
}

/// Rotor `w - x e23 - y e31 - z e12` whose sandwich matches the quaternion rotation.
pub fn rotor_from_quaternion(q: &Quaternion) -> Multivector32 {
    let mut r = Multivector32::scalar(q.w);
    r.0[slot(E2 | E3)] = -q.x;
    // e31 = -e13
    r.0[slot(E1 | E3)] = q.y;
    r.0[slot(E1 | E2)] = -q.z;
    r
}

/// Translator `1 - ½ t e∞`.
pub fn translator(t: Vector3<f64>) -> Multivector32 {
    Multivector32::scalar(1.0) - Multivector32::euclidean(t) * Multivector32::e_inf() * 0.5
}

/// Motor for rigid motion `p ↦ rot(p) + t`.
pub fn motor(t: Vector3<f64>, rot: &Quaternion) -> Multivector32 {
    translator(t) * rotor_from_quaternion(rot)
}

/// Motor of a vertex–normal pair: translation to `v` after the rotation taking
/// `(0,1,0)` to the normalized `n` (zero normals count as `(0,1,0)`).
pub fn encode_vertex_normal(v: Vector3<f64>, n: Vector3<f64>) -> Multivector32 {
    motor(v, &quaternion_align_y(normalize_or_default(n)))
}

/// Homogeneous 4×4 matrix with the same action on points as motor `m`.
pub fn motor_to_matrix(m: &Multivector32) -> Result<Matrix4<f64>> {
    let defect = m.versor_defect();
    if defect > 1e-6 {
        return Err(Error::Contract(format!("not a unit versor (|M~M - 1| = {defect:e})")));
    }
    let image = |p: Vector3<f64>| {
        apply_versor(m, &Multivector32::point(p))
            .point_position()
            .expect("motor maps finite points to finite points")
    };
    let t = image(Vector3::zeros());
    let mut out = Matrix4::identity();
    for (c, axis) in [Vector3::x(), Vector3::y(), Vector3::z()].into_iter().enumerate() {
        let col = image(axis) - t;
        out.fixed_view_mut::<3, 1>(0, c).copy_from(&col);
    }
    out.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Unit, UnitQuaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Multiplies basis words by concatenation and bubble sort, contracting
    /// equal neighbours with the metric. Independent of the bitmask tables.
    fn word_product(a: &[u8], b: &[u8]) -> (Vec<u8>, f64) {
        let mut word: Vec<u8> = a.iter().chain(b).copied().collect();
        let mut sign = 1.0;
        loop {
            let mut changed = false;
            let mut i = 0;
            while i + 1 < word.len() {
                if word[i] > word[i + 1] {
                    word.swap(i, i + 1);
                    sign = -sign;
                    changed = true;
                } else if word[i] == word[i + 1] {
                    if word[i] == 4 {
                        sign = -sign;
                    }
                    word.drain(i..i + 2);
                    changed = true;
                    continue;
                }
                i += 1;
            }
            if !changed {
                return (word, sign);
            }
        }
    }

    fn word_of(mask: u8) -> Vec<u8> {
        (0..5).filter(|b| mask & (1 << b) != 0).collect()
    }

    fn mask_of(word: &[u8]) -> u8 {
        word.iter().fold(0, |m, b| m | (1 << b))
    }

    fn random_mv(rng: &mut impl Rng) -> Multivector32 {
        Multivector32(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }

    fn random_quat(rng: &mut impl Rng) -> Quaternion {
        loop {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if q.norm() > 0.1 {
                return q.normalized();
            }
        }
    }

    #[test]
    fn blade_layout_is_graded() {
        let grades: Vec<u32> = (0..BLADES).map(grade).collect();
        let expected: Vec<u32> = [(0, 1), (1, 5), (2, 10), (3, 10), (4, 5), (5, 1)]
            .iter()
            .flat_map(|&(g, n)| std::iter::repeat_n(g, n))
            .collect();
        assert_eq!(grades, expected);
        let names = blade_names();
        assert_eq!(&names[..7], &["1", "e1", "e2", "e3", "ep", "em", "e12"]);
        assert_eq!(names[31], "e123pm");
    }

    #[test]
    fn cayley_table_matches_word_oracle() {
        for i in 0..BLADES {
            for j in 0..BLADES {
                let (w, s) = word_product(&word_of(blade_mask(i)), &word_of(blade_mask(j)));
                let mut expected = Multivector32::zero();
                expected.0[slot(mask_of(&w))] = s;
                let got = Multivector32::blade(blade_mask(i), 1.0) * Multivector32::blade(blade_mask(j), 1.0);
                assert_eq!(got, expected, "{} * {}", blade_names()[i], blade_names()[j]);
            }
        }
    }

    #[test]
    fn metric_and_identity() {
        let e1 = Multivector32::blade(E1, 1.0);
        let em = Multivector32::blade(EM, 1.0);
        let e12 = Multivector32::blade(E1 | E2, 1.0);
        assert_eq!(e1 * e1, Multivector32::scalar(1.0));
        assert_eq!(em * em, Multivector32::scalar(-1.0));
        assert_eq!(e12 * e12, Multivector32::scalar(-1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_mv(&mut rng);
        assert_eq!(Multivector32::scalar(1.0) * m, m);
        let einf = Multivector32::e_inf();
        assert_eq!(einf * einf, Multivector32::zero());
    }

    #[test]
    fn reverse_signs() {
        let e1 = Multivector32::blade(E1, 2.0);
        assert_eq!(e1.reverse(), e1);
        assert_eq!(Multivector32::scalar(3.0).reverse(), Multivector32::scalar(3.0));
        let e12 = Multivector32::blade(E1 | E2, 1.0);
        assert_eq!(e12.reverse(), -e12);
        let i5 = Multivector32::blade(0b11111, 1.0);
        assert_eq!(i5.reverse(), i5);
        let tri = Multivector32::blade(E1 | E2 | E3, 1.0);
        assert_eq!(tri.reverse(), -tri);
    }

    #[test]
    fn algebra_laws_on_random_multivectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (a, b, c) = (random_mv(&mut rng), random_mv(&mut rng), random_mv(&mut rng));
            assert!(((a * b) * c).max_abs_diff(&(a * (b * c))) < 1e-9);
            assert!((a * (b + c)).max_abs_diff(&(a * b + a * c)) < 1e-9);
            assert!(((a * b).reverse()).max_abs_diff(&(b.reverse() * a.reverse())) < 1e-9);
        }
    }

    #[test]
    fn align_y_cases() {
        assert_eq!(quaternion_align_y(Vector3::y()), Quaternion::IDENTITY);
        assert_eq!(quaternion_align_y(-Vector3::y()), Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let q = quaternion_align_y(Vector3::x());
        assert!((q.rotate(Vector3::y()) - Vector3::x()).norm() < 1e-6);
        assert!((q.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn align_y_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let q = quaternion_align_y(n);
            assert!((q.rotate(Vector3::y()) - n).norm() < 1e-6);
            // minimal angle: axis perpendicular to both y and n
            let angle = 2.0 * q.w.clamp(-1.0, 1.0).acos();
            assert!((angle - Vector3::y().angle(&n)).abs() < 1e-6);
        }
        let near = Vector3::new(1e-9, -1.0, 0.0).normalize();
        assert!((quaternion_align_y(near).rotate(Vector3::y()) - near).norm() < 1e-6);
    }

    #[test]
    fn rotor_matches_quaternion_and_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_quat(&mut rng);
            let r = rotor_from_quaternion(&q);
            assert!(r.versor_defect() < 1e-9);
            let na = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q.w, q.x, q.y, q.z));
            let m = na.to_rotation_matrix();
            for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
                let image = apply_versor(&r, &Multivector32::euclidean(axis));
                assert!((image.vector_part() - m * axis).norm() < 1e-9);
                assert!(image.grade_part(1).max_abs_diff(&image) < 1e-12);
            }
            assert!((q.to_matrix() - m.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn rotor_examples() {
        assert_eq!(rotor_from_quaternion(&Quaternion::IDENTITY), Multivector32::scalar(1.0));
        let half_x = rotor_from_quaternion(&Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let img = apply_versor(&half_x, &Multivector32::euclidean(Vector3::y()));
        assert!((img.vector_part() - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        let quarter_z = rotor_from_quaternion(&Quaternion::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2));
        let img = apply_versor(&quarter_z, &Multivector32::blade(E1, 1.0));
        assert!(img.max_abs_diff(&Multivector32::blade(E2, 1.0)) < 1e-9);
    }

    #[test]
    fn rotor_composition_acts_like_quaternion_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (q1, q2) = (random_quat(&mut rng), random_quat(&mut rng));
            let composed = rotor_from_quaternion(&q1.mul(&q2));
            let product = rotor_from_quaternion(&q1) * rotor_from_quaternion(&q2);
            let diff = composed.max_abs_diff(&product).min(composed.max_abs_diff(&-product));
            assert!(diff < 1e-9);
            let x = Multivector32::point(Vector3::new(0.3, -2.0, 1.0));
            assert!(apply_versor(&composed, &x).max_abs_diff(&apply_versor(&product, &x)) < 1e-9);
        }
    }

    #[test]
    fn translator_expansion() {
        assert_eq!(translator(Vector3::zeros()), Multivector32::scalar(1.0));
        let t = translator(Vector3::x());
        let mut expected = Multivector32::scalar(1.0);
        expected.0[slot(E1 | EP)] = -0.5;
        expected.0[slot(E1 | EM)] = -0.5;
        assert!(t.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn translator_moves_points() {
        let moved = apply_versor(&translator(Vector3::new(3.0, 0.0, 0.0)), &Multivector32::e_origin());
        assert!(moved.max_abs_diff(&Multivector32::point(Vector3::new(3.0, 0.0, 0.0))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            let t = Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            let there = apply_versor(&translator(t), &Multivector32::point(p));
            assert!(there.max_abs_diff(&Multivector32::point(p + t)) < 1e-9);
            let back = apply_versor(&translator(-t), &there);
            assert!(back.max_abs_diff(&Multivector32::point(p)) < 1e-9);
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode_vertex_normal(Vector3::zeros(), Vector3::y()),
            Multivector32::scalar(1.0)
        );
        assert_eq!(
            encode_vertex_normal(Vector3::x(), Vector3::y()),
            translator(Vector3::x())
        );
        assert_eq!(
            encode_vertex_normal(Vector3::zeros(), Vector3::zeros()),
            encode_vertex_normal(Vector3::zeros(), Vector3::y())
        );
    }

    #[test]
    fn encoded_motor_is_even_unit_and_places_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let v = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let n = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let m = encode_vertex_normal(v, n);
            assert_eq!(m.odd_magnitude(), 0.0);
            assert!(m.versor_defect() < 1e-9);
            let origin = apply_versor(&m, &Multivector32::e_origin());
            assert!(origin.max_abs_diff(&Multivector32::point(v)) < 1e-9);
        }
    }

    fn random_vec(rng: &mut impl Rng, s: f64) -> Vector3<f64> {
        Vector3::new(
            rng.random_range(-s..s),
            rng.random_range(-s..s),
            rng.random_range(-s..s),
        )
    }

    #[test]
    fn translation_equivariance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let (v, n, t) = (
                random_vec(&mut rng, 3.0),
                random_vec(&mut rng, 1.0),
                random_vec(&mut rng, 3.0),
            );
            let moved = encode_vertex_normal(v + t, n);
            assert!(moved.max_abs_diff(&(translator(t) * encode_vertex_normal(v, n))) < 1e-12);
        }
    }

    /// Under a rotation the encoded motor still lands the origin on the moved
    /// vertex and `+y` on the moved normal, but may differ from the composed
    /// motor by a turn about the local `y` axis.
    #[test]
    fn rigid_motion_matches_up_to_twist_about_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut twisted = 0;
        for _ in 0..100 {
            let (q, t) = (random_quat(&mut rng), random_vec(&mut rng, 3.0));
            let (v, n) = (random_vec(&mut rng, 3.0), random_vec(&mut rng, 1.0).normalize());
            let lhs = encode_vertex_normal(q.rotate(v) + t, q.rotate(n));
            let rhs = motor(t, &q) * encode_vertex_normal(v, n);
            for m in [&lhs, &rhs] {
                let p = apply_versor(m, &Multivector32::e_origin()).point_position().unwrap();
                assert!((p - (q.rotate(v) + t)).norm() < 1e-9);
                let d = apply_versor(m, &Multivector32::euclidean(Vector3::y())).vector_part();
                assert!((d - q.rotate(n)).norm() < 1e-9);
            }
            let twist = rhs.reverse() * lhs;
            for (s, c) in twist.0.iter().enumerate() {
                if s != 0 && s != slot(E1 | E3) {
                    assert!(c.abs() < 1e-9, "{twist:?}");
                }
            }
            if twist.0[slot(E1 | E3)].abs() > 1e-6 {
                twisted += 1;
            }
        }
        assert!(twisted > 90);
    }

    #[test]
    fn motor_matrix_examples() {
        assert_eq!(
            motor_to_matrix(&Multivector32::scalar(1.0)).unwrap(),
            Matrix4::identity()
        );
        let m = motor_to_matrix(&translator(Vector3::new(1.0, 2.0, 3.0))).unwrap();
        let mut expected = Matrix4::identity();
        expected[(0, 3)] = 1.0;
        expected[(1, 3)] = 2.0;
        expected[(2, 3)] = 3.0;
        assert!((m - expected).norm() < 1e-12);

        let m = motor_to_matrix(&encode_vertex_normal(Vector3::x(), Vector3::x())).unwrap();
        let q = quaternion_align_y(Vector3::x());
        let mut oracle = Matrix4::identity();
        oracle.fixed_view_mut::<3, 3>(0, 0).copy_from(&q.to_matrix());
        oracle[(0, 3)] = 1.0;
        assert!((m - oracle).norm() < 1e-9);
        let image = m * nalgebra::Vector4::new(0.0, 1.0, 0.0, 1.0);
        assert!((image - nalgebra::Vector4::new(2.0, 0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn motor_matrix_is_rigid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let v = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let axis = Unit::new_normalize(Vector3::new(
                rng.random_range(-1.0..1.0),
                0.5,
                rng.random_range(-1.0..1.0),
            ));
            let m = motor_to_matrix(&encode_vertex_normal(v, *axis)).unwrap();
            let r = m.fixed_view::<3, 3>(0, 0).into_owned();
            assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-6);
            assert!((r.determinant() - 1.0).abs() < 1e-6);
            // the matrix sends the local up axis to the normal and the origin to v
            assert!((r * Vector3::y() - *axis).norm() < 1e-9);
            assert!((m.fixed_view::<3, 1>(0, 3) - v).norm() < 1e-9);
        }
    }

    #[test]
    fn motor_matrix_rejects_non_versor() {
        let bad = Multivector32::scalar(2.0);
        assert!(matches!(motor_to_matrix(&bad), Err(Error::Contract(_))));
    }

    #[test]
    fn blade_hash_is_stable() {
        assert_eq!(blade_order_hash(), blade_order_hash());
        assert_eq!(blade_order_hash().len(), 16);
    }
}
