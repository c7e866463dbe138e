//! Brute-force oracles shared by the integration tests. None of these call
//! into the routines they check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hullfilter::harness::{generate, GenSpec};
use hullfilter::polyhedron::FilterPolyhedron;
use hullfilter::{Point3, PointCloud, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(n: usize, seed: u64) -> PointCloud {
    generate(&GenSpec::uniform(n, seed)).unwrap()
}

pub fn sphere(n: usize, rho: f64, seed: u64) -> PointCloud {
    generate(&GenSpec::sphere(n, rho, seed)).unwrap()
}

pub fn random_flags(n: usize, density: f64, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    (0..n).map(|_| u8::from(r.random_bool(density))).collect()
}

pub fn sequential_inclusive_scan(flags: &[u8]) -> Vec<u64> {
    let mut acc = 0u64;
    flags
        .iter()
        .map(|&f| {
            acc += f as u64;
            acc
        })
        .collect()
}

pub fn stable_filter<T: Copy>(items: &[T], flags: &[u8]) -> Vec<T> {
    items.iter().zip(flags).filter(|(_, &f)| f == 1).map(|(&x, _)| x).collect()
}

pub fn vertex_set(points: &[Point3]) -> BTreeSet<[u32; 3]> {
    points.iter().map(|p| p.bits()).collect()
}

fn v(p: Point3) -> Vec3 {
    p.to_vec3()
}

/// Plain cofactor determinant of `(b - a, c - a, d - a)`, plus a scale for
/// judging how close to zero it is.
fn det_with_scale(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> (f64, f64) {
    let (u, w, x) = (b - a, c - a, d - a);
    let det = u.x * (w.y * x.z - w.z * x.y) - u.y * (w.x * x.z - w.z * x.x) + u.z * (w.x * x.y - w.y * x.x);
    (det, u.length() * w.length() * x.length())
}

/// Oracle answer for a ray against a triangle via plane intersection and
/// barycentric coordinates.
pub struct PlaneHit {
    pub t: f64,
    /// Smallest barycentric coordinate of the plane point; positive inside.
    pub min_bary: f64,
}

pub fn ray_plane_barycentric(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<PlaneHit> {
    let n = (b - a).cross(c - a);
    let nn = n.length_squared();
    let denom = n.dot(dir);
    if nn == 0.0 || denom.abs() <= 1e-12 * nn.sqrt() * dir.length() {
        return None;
    }
    let t = n.dot(a - origin) / denom;
    let x = origin + dir * t;
    let wa = n.dot((c - b).cross(x - b)) / nn;
    let wb = n.dot((a - c).cross(x - c)) / nn;
    let wc = n.dot((b - a).cross(x - a)) / nn;
    Some(PlaneHit {
        t,
        min_bary: wa.min(wb).min(wc),
    })
}

/// `Some(inside)` for the closed tetrahedron `(q, a, b, c)` when `p` is at
/// least `margin` (relative) away from every face plane, `None` otherwise.
pub fn in_tet(q: Vec3, a: Vec3, b: Vec3, c: Vec3, p: Vec3, margin: f64) -> Option<bool> {
    let (full, scale) = det_with_scale(q, a, b, c);
    if full.abs() <= margin * scale {
        // flat tetrahedron holds nothing
        return Some(false);
    }
    let s = full.signum();
    let mut inside = true;
    for (w, x, y, z) in [(p, a, b, c), (q, p, b, c), (q, a, p, c), (q, a, b, p)] {
        let (d, sc) = det_with_scale(w, x, y, z);
        if d.abs() <= margin * sc.max(scale) {
            return None;
        }
        inside &= d * s > 0.0;
    }
    Some(inside)
}

/// Membership in the union of the tetrahedra spanned by `q` and each face:
/// `Some(true)` if clearly inside one, `Some(false)` if clearly outside all,
/// `None` when some test is too close to call.
pub fn in_star_union(poly: &FilterPolyhedron, p: Point3, margin: f64) -> Option<bool> {
    let q = v(poly.q);
    let mut unsure = false;
    for f in &poly.faces {
        match in_tet(q, v(f.a), v(f.b), v(f.c), v(p), margin) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => unsure = true,
        }
    }
    if unsure {
        None
    } else {
        Some(false)
    }
}

/// Monte Carlo estimate of the star union volume as a fraction of the box
/// `[lo, hi]`, from `samples` independent uniform draws.
pub fn star_union_volume_fraction(poly: &FilterPolyhedron, lo: Vec3, hi: Vec3, samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut inside = 0usize;
    let mut counted = 0usize;
    for _ in 0..samples {
        let p = Point3::new(
            r.random_range(lo.x..=hi.x) as f32,
            r.random_range(lo.y..=hi.y) as f32,
            r.random_range(lo.z..=hi.z) as f32,
        );
        if let Some(b) = in_star_union(poly, p, 0.0) {
            counted += 1;
            inside += b as usize;
        }
    }
    inside as f64 / counted.max(1) as f64
}
