use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{CloudMeta, Distribution, PointCloud};
use crate::geom::{Point3, Vec3};

pub const SPHERE_CENTER: f64 = 0.5;
pub const SPHERE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub distribution: Distribution,
    pub n: usize,
    /// Shell thickness as a fraction of the radius; sphere only.
    pub rho: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn uniform(n: usize, seed: u64) -> Self {
        GenSpec {
            distribution: Distribution::Uniform,
            n,
            rho: 0.0,
            seed,
        }
    }

    pub fn sphere(n: usize, rho: f64, seed: u64) -> Self {
        GenSpec {
            distribution: Distribution::Sphere,
            n,
            rho,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::NoPoints);
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(GenError::RhoOutOfRange(self.rho));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("point count must be at least 1")]
    NoPoints,
    #[error("rho = {0} is outside [0, 1]")]
    RhoOutOfRange(f64),
}

/// Generates the cloud described by `spec`; identical specs give
/// bit-identical clouds.
///
/// Uniform clouds fill `[0, 1]^3`. Sphere clouds are centered at
/// `(0.5, 0.5, 0.5)` with radius 0.5: the direction is a normalized Gaussian
/// vector and the radius is uniform in `[(1 - rho) R, R]`.
pub fn generate(spec: &GenSpec) -> Result<PointCloud, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let points = match spec.distribution {
        Distribution::Uniform => (0..spec.n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect(),
        Distribution::Sphere => {
            let center = Vec3::new(SPHERE_CENTER, SPHERE_CENTER, SPHERE_CENTER);
            (0..spec.n)
                .map(|_| {
                    let d = unit_direction(&mut rng);
                    let u: f64 = rng.random();
                    let r = SPHERE_RADIUS * ((1.0 - spec.rho) + spec.rho * u);
                    Point3::from_vec3(center + d * r)
                })
                .collect()
        }
    };
    let meta = CloudMeta {
        seed: Some(spec.seed),
        distribution: Some(spec.distribution),
        rho: (spec.distribution == Distribution::Sphere).then_some(spec.rho),
    };
    Ok(PointCloud::with_meta(points, meta))
}

fn unit_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        let len = v.length();
        if len > 1e-12 {
            return v * (1.0 / len);
        }
    }
}
