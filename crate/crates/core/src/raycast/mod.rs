//! Point classification against the filtering polyhedron.
//!
//! Each point `p` shoots a ray from itself along `p - q`, away from the
//! interior reference point. For a polyhedron that is star-shaped about `q`
//! the ray crosses the surface iff `p` is inside, so a hit discards the
//! point and a miss keeps it as a hull candidate.
//!
//! Without star-shape the same test still answers whether `p` lies in some
//! tetrahedron `(q, face)`, which is inside the hull whenever `q` is.

mod bvh;
mod linear;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{signed_tet_volume, Point3, Triangle, Vec3};
use crate::polyhedron::{FilterPolyhedron, VOLUME_EPS};

pub use bvh::TriangleBvh;
pub use linear::LinearIntersector;

/// Ray start offset; points lying exactly on a face do not hit it.
pub const RAY_T_MIN: f64 = 1e-7;

/// `1 + RAY_T_MIN`: the ray from `p = q + d` starts at `q + LAMBDA_MIN d`.
const LAMBDA_MIN: f64 = 1.0 + RAY_T_MIN;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RaycastError {
    #[error("polyhedron is not star-shaped about its reference point")]
    NotStarShaped,
    #[error("mask length {mask} does not match cloud length {cloud}")]
    LengthMismatch { mask: usize, cloud: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    /// Tests every face in turn. Fastest for the small default polyhedron.
    #[default]
    Linear,
    /// Traverses a bounding volume hierarchy over the faces.
    Bvh,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Linear => "linear",
            Backend::Bvh => "bvh",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Backend::Linear),
            "bvh" => Ok(Backend::Bvh),
            other => Err(format!("unknown backend `{other}` (expected linear or bvh)")),
        }
    }
}

/// A triangle scene built around a fixed apex `q`, queried with rays that
/// start at `origin` and travel along `d = origin - q`.
pub trait AnyHit: Sync {
    /// Whether the ray hits any triangle at `origin + t d` with
    /// `1 + t >= lambda_min`.
    fn any_hit(&self, origin: Vec3, d: Vec3, lambda_min: f64) -> bool;
}

/// One flag per input point: 1 = hull candidate (ray missed), 0 = inside.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateMask {
    pub flags: Vec<u8>,
}

impl CandidateMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn all_candidates(n: usize) -> Self {
        CandidateMask { flags: vec![1; n] }
    }

    pub fn candidate_count(&self) -> usize {
        self.flags.iter().map(|&f| f as usize).sum()
    }

    pub fn discard_fraction(&self) -> f64 {
        if self.flags.is_empty() {
            return 0.0;
        }
        1.0 - self.candidate_count() as f64 / self.flags.len() as f64
    }

    fn force_candidates(&mut self, indices: &[usize]) {
        for &i in indices {
            if let Some(f) = self.flags.get_mut(i) {
                *f = 1;
            }
        }
    }
}

enum Scene {
    Linear(LinearIntersector),
    Bvh(TriangleBvh),
}

impl Scene {
    #[inline]
    fn any_hit(&self, origin: Vec3, d: Vec3) -> bool {
        match self {
            Scene::Linear(s) => s.any_hit(origin, d, LAMBDA_MIN),
            Scene::Bvh(s) => s.any_hit(origin, d, LAMBDA_MIN),
        }
    }
}

/// A polyhedron prepared for repeated classification.
pub struct Classifier<'a> {
    poly: &'a FilterPolyhedron,
    q: Vec3,
    scene: Scene,
}

impl<'a> Classifier<'a> {
    pub fn new(poly: &'a FilterPolyhedron, backend: Backend) -> Result<Self, RaycastError> {
        if !poly.star_shaped {
            return Err(RaycastError::NotStarShaped);
        }
        Ok(Self::star_decomposition(poly, backend))
    }

    /// Classifies by membership in the union of the tetrahedra `(q, face)`
    /// without requiring the surface to be star-shaped about `q`.
    pub fn star_decomposition(poly: &'a FilterPolyhedron, backend: Backend) -> Self {
        let q = poly.q.to_vec3();
        let scene = match backend {
            Backend::Linear => Scene::Linear(LinearIntersector::new(&poly.faces, q)),
            Backend::Bvh => Scene::Bvh(TriangleBvh::build(&poly.faces, q)),
        };
        Classifier {
            poly,
            q,
            scene,
        }
    }

    /// True when the outward ray from `p` hits the surface.
    #[inline]
    fn classify_into<S: AnyHit>(&self, scene: &S, src: &[Point3], dst: &mut [u8]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { classify_chunk_avx2(self.q, scene, src, dst) };
        }
        classify_chunk(self.q, scene, src, dst)
    }

    pub fn is_inside(&self, p: Point3) -> bool {
        let origin = p.to_vec3();
        let direction = origin - self.q;
        if direction == Vec3::ZERO {
            return true;
        }
        self.scene.any_hit(origin, direction)
    }

    pub fn classify(&self, points: &[Point3]) -> CandidateMask {
        let mut flags = vec![0u8; points.len()];
        flags.par_chunks_mut(CLASSIFY_CHUNK).zip(points.par_chunks(CLASSIFY_CHUNK)).for_each(|(dst, src)| match &self.scene {
            Scene::Linear(s) => self.classify_into(s, src, dst),
            Scene::Bvh(s) => self.classify_into(s, src, dst),
        });
        let mut mask = CandidateMask { flags };
        mask.force_candidates(&self.poly.cloud_indices);
        mask
    }
}

const CLASSIFY_CHUNK: usize = 4096;

#[inline(always)]
fn classify_chunk<S: AnyHit>(q: Vec3, scene: &S, src: &[Point3], dst: &mut [u8]) {
    for (flag, &p) in dst.iter_mut().zip(src) {
        let origin = p.to_vec3();
        let d = origin - q;
        *flag = u8::from(d != Vec3::ZERO && !scene.any_hit(origin, d, LAMBDA_MIN));
    }
}

// Same code compiled for wider vectors. Rust never contracts to FMA on its
// own, so both versions produce identical masks.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn classify_chunk_avx2<S: AnyHit>(q: Vec3, scene: &S, src: &[Point3], dst: &mut [u8]) {
    classify_chunk(q, scene, src, dst)
}

/// Classifies every point of `points` by ray casting against `poly`.
///
/// The polyhedron's own vertices are always kept.
pub fn classify(points: &[Point3], poly: &FilterPolyhedron, backend: Backend) -> Result<CandidateMask, RaycastError> {
    Ok(Classifier::new(poly, backend)?.classify(points))
}

/// Conservative fallback: a point is discarded only when it lies strictly
/// behind every plane in `faces`. `keep` indices are always candidates.
pub fn classify_halfspace(points: &[Point3], faces: &[Triangle], keep: &[usize]) -> CandidateMask {
    let flags: Vec<u8> = points
        .par_iter()
        .map(|&p| {
            let inside = !faces.is_empty() && faces.iter().all(|t| signed_tet_volume(t.a, t.b, t.c, p) < -VOLUME_EPS);
            u8::from(!inside)
        })
        .collect();
    let mut mask = CandidateMask { flags };
    mask.force_candidates(keep);
    mask
}

/// Triangles promoted to `f64`, with degenerate ones removed.
pub(crate) fn promote_faces(faces: &[Triangle]) -> Vec<[Vec3; 3]> {
    faces
        .iter()
        .filter(|t| !t.is_degenerate())
        .map(|t| [t.a.to_vec3(), t.b.to_vec3(), t.c.to_vec3()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremes::{bounding_box, minmax_reduce, nearest_to_corners};
    use crate::polyhedron::{build_polyhedron, synth_polyhedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect()
    }

    fn poly_for(points: &[Point3]) -> FilterPolyhedron {
        let ext = minmax_reduce(points).unwrap();
        let corners = nearest_to_corners(points, &bounding_box(&ext)).unwrap();
        build_polyhedron(&ext, &corners).unwrap()
    }

    fn decomposition_mask(points: &[Point3], poly: &FilterPolyhedron, backend: Backend) -> CandidateMask {
        Classifier::star_decomposition(poly, backend).classify(points)
    }

    #[test]
    fn reference_point_is_inside() {
        let pts = uniform(1000, 1);
        let poly = poly_for(&pts);
        let mut probe = pts.clone();
        probe.push(poly.q);
        let mask = decomposition_mask(&probe, &poly, Backend::Bvh);
        assert_eq!(*mask.flags.last().unwrap(), 0);
    }

    #[test]
    fn far_points_are_candidates() {
        let pts = uniform(1000, 2);
        let poly = poly_for(&pts);
        let far = [Point3::new(5.0, 5.0, 5.0), Point3::new(-3.0, 0.5, 0.5), Point3::new(0.5, 0.5, 40.0)];
        for backend in [Backend::Linear, Backend::Bvh] {
            let mask = decomposition_mask(&far, &poly, backend);
            assert_eq!(mask.flags, vec![1, 1, 1]);
        }
    }

    #[test]
    fn vertices_are_always_candidates() {
        let pts = uniform(5000, 3);
        let poly = poly_for(&pts);
        let mask = decomposition_mask(&pts, &poly, Backend::Linear);
        for &i in &poly.cloud_indices {
            assert_eq!(mask.flags[i], 1);
        }
    }

    #[test]
    fn not_star_shaped_is_rejected() {
        let pts = uniform(100, 4);
        let mut poly = poly_for(&pts);
        poly.star_shaped = false;
        assert_eq!(classify(&pts, &poly, Backend::Bvh).unwrap_err(), RaycastError::NotStarShaped);
    }

    #[test]
    fn backends_agree_on_synthetic_polyhedra() {
        let pts = uniform(20_000, 5);
        for faces in [4, 24, 192, 1536] {
            let poly = synth_polyhedron(faces, faces as u64);
            let a = classify(&pts, &poly, Backend::Linear).unwrap();
            let b = classify(&pts, &poly, Backend::Bvh).unwrap();
            assert_eq!(a, b, "{faces} faces");
        }
    }

    #[test]
    fn halfspace_fallback_is_inside_polyhedron() {
        let pts = uniform(20_000, 6);
        let poly = poly_for(&pts);
        let hs = classify_halfspace(&pts, &poly.base_faces, &poly.cloud_indices);
        let rc = decomposition_mask(&pts, &poly, Backend::Bvh);
        // whatever the conservative test discards, ray casting discards too
        for (h, r) in hs.flags.iter().zip(&rc.flags) {
            assert!(*h == 1 || *r == 0);
        }
        assert!(hs.discard_fraction() > 0.05);
    }
}
