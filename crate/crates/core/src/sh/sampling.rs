use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sh9, BASIS};
use crate::error::Error;

/// Domain covered by a [`SampleSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleMode {
    /// Uniform over the full sphere, weight `4π/N`.
    Sphere,
    /// Uniform over the `+y` hemisphere, weight `2π/N`. Consumers re-orient
    /// the set around each surface normal.
    Hemisphere,
}

impl SampleMode {
    pub fn solid_angle(self) -> f64 {
        match self {
            SampleMode::Sphere => 4.0 * PI,
            SampleMode::Hemisphere => 2.0 * PI,
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleMode::Sphere => "sphere",
            SampleMode::Hemisphere => "hemisphere",
        })
    }
}

impl FromStr for SampleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sphere" => Ok(SampleMode::Sphere),
            "hemisphere" => Ok(SampleMode::Hemisphere),
            other => Err(Error::Format(format!("unknown sample mode `{other}`"))),
        }
    }
}

/// Stratified, jittered directions with their SH basis values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub directions: Vec<Vector3<f64>>,
    pub sh_values: Vec<[f64; BASIS]>,
    pub sqrt_n: usize,
    pub seed: u64,
    pub mode: SampleMode,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Monte-Carlo weight of one sample.
    pub fn weight(&self) -> f64 {
        self.mode.solid_angle() / self.len() as f64
    }
}

/// `sqrt_n²` jittered full-sphere directions (y-up polar angle).
pub fn generate_samples(sqrt_n: usize, seed: u64) -> SampleSet {
    generate_samples_mode(sqrt_n, seed, SampleMode::Sphere)
}

pub fn generate_samples_mode(sqrt_n: usize, seed: u64, mode: SampleMode) -> SampleSet {
    let sqrt_n = sqrt_n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv = 1.0 / sqrt_n as f64;
    let mut directions = Vec::with_capacity(sqrt_n * sqrt_n);
    for a in 0..sqrt_n {
        for b in 0..sqrt_n {
            let u = (a as f64 + rng.random::<f64>()) * inv;
            let v = (b as f64 + rng.random::<f64>()) * inv;
            let cos_theta = match mode {
                // θ = 2·acos(√(1−u))  ⇔  cos θ = 1 − 2u
                SampleMode::Sphere => (2.0 * (1.0 - u).sqrt().acos()).cos(),
                SampleMode::Hemisphere => 1.0 - u,
            };
            let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
            let phi = 2.0 * PI * v;
            directions.push(Vector3::new(sin_theta * phi.cos(), cos_theta, sin_theta * phi.sin()));
        }
    }
    let sh_values = directions.iter().map(sh9).collect();
    SampleSet {
        directions,
        sh_values,
        sqrt_n,
        seed,
        mode,
    }
}
