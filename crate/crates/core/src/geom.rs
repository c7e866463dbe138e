//! Geometric primitives shared by the whole pipeline.
//!
//! Points are stored in single precision; every predicate (volumes, ray
//! solves) promotes to `f64` before doing arithmetic.

use std::ops::{Add, Mul, Neg, Sub};

/// Twice-area-squared threshold below which a triangle is treated as degenerate.
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

/// A point with 32-bit float coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

impl Point3 {
    pub const fn new(x: f32, y: f32, z: f32) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn to_vec3(self) -> Vec3 {
        Vec3::new(self.x as f64, self.y as f64, self.z as f64)
    }

    /// Rounds a double-precision vector to the nearest `Point3`.
    #[inline]
    pub fn from_vec3(v: Vec3) -> Self {
        Self::new(v.x as f32, v.y as f32, v.z as f32)
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f32 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Bit-level key, useful for comparing point sets exactly.
    pub fn bits(self) -> [u32; 3] {
        [self.x.to_bits(), self.y.to_bits(), self.z.to_bits()]
    }
}

/// Double-precision 3-vector used for all intermediate geometry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Self { min, max }
    }

    /// The 8 corners in octant order: bit 0 selects max x, bit 1 max y, bit 2 max z.
    pub fn corners(&self) -> [Point3; 8] {
        std::array::from_fn(|j| {
            Point3::new(
                if j & 1 != 0 { self.max.x } else { self.min.x },
                if j & 2 != 0 { self.max.y } else { self.min.y },
                if j & 4 != 0 { self.max.z } else { self.min.z },
            )
        })
    }

    pub fn contains(&self, p: Point3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

/// A triangle, counter-clockwise when seen from outside its solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
}

impl Triangle {
    pub fn new(a: Point3, b: Point3, c: Point3) -> Self {
        Self { a, b, c }
    }

    /// Unnormalized normal `(b - a) x (c - a)`; its length is twice the area.
    pub fn normal(&self) -> Vec3 {
        let a = self.a.to_vec3();
        (self.b.to_vec3() - a).cross(self.c.to_vec3() - a)
    }

    pub fn is_degenerate(&self) -> bool {
        self.normal().length_squared() <= DEGENERATE_AREA_EPS
    }

    pub fn centroid(&self) -> Vec3 {
        (self.a.to_vec3() + self.b.to_vec3() + self.c.to_vec3()) * (1.0 / 3.0)
    }

    pub fn flipped(&self) -> Triangle {
        Triangle::new(self.a, self.c, self.b)
    }
}

/// A parametric ray `origin + t * direction`, `t` in `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Self {
        debug_assert!(direction.length_squared() > 0.0);
        debug_assert!(0.0 <= t_min && t_min < t_max);
        Self {
            origin,
            direction,
            t_min,
            t_max,
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// L1 distance between two points.
#[inline]
pub fn manhattan_distance(a: Point3, b: Point3) -> f64 {
    (a.x as f64 - b.x as f64).abs() + (a.y as f64 - b.y as f64).abs() + (a.z as f64 - b.z as f64).abs()
}

/// Signed volume of the tetrahedron `abcd`: `det[b - a, c - a, d - a] / 6`.
///
/// Positive when `d` lies on the side `(b - a) x (c - a)` points to.
///
/// The determinant is evaluated on the points in a canonical order and the
/// sign fixed by the permutation parity, so swapping any two arguments
/// negates the result exactly.
pub fn signed_tet_volume(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    let mut p = [a, b, c, d];
    let mut odd = false;
    for i in 1..4 {
        let mut j = i;
        while j > 0 && p[j].bits() < p[j - 1].bits() {
            p.swap(j, j - 1);
            odd = !odd;
            j -= 1;
        }
    }
    let v = orient3d(p[0].to_vec3(), p[1].to_vec3(), p[2].to_vec3(), p[3].to_vec3()) / 6.0;
    if odd {
        -v
    } else {
        v
    }
}

/// `det[b - a, c - a, d - a]` in double precision.
#[inline]
pub fn orient3d(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ad = d - a;
    ab.cross(ac).dot(ad)
}

/// Per-ray constants of the watertight intersection test.
///
/// Computing these once and reusing them across triangles is what lets the
/// linear and hierarchical intersectors share bit-identical arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct RayFrame {
    pub origin: Vec3,
    /// Permuted axes: `kz` is the dominant direction axis.
    pub kx: usize,
    pub ky: usize,
    pub kz: usize,
    /// Origin in `(kx, ky, kz)` order.
    pub local_origin: [f64; 3],
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl RayFrame {
    pub fn new(ray: &Ray) -> Self {
        let d = ray.direction;
        let ad = d.abs();
        let kz = if ad.x > ad.y && ad.x > ad.z {
            0
        } else if ad.y > ad.z {
            1
        } else {
            2
        };
        let kx = (kz + 1) % 3;
        let ky = (kx + 1) % 3;
        let dz = d.axis(kz);
        let o = ray.origin;
        Self {
            origin: o,
            kx,
            ky,
            kz,
            local_origin: [o.axis(kx), o.axis(ky), o.axis(kz)],
            sx: d.axis(kx) / dz,
            sy: d.axis(ky) / dz,
            sz: 1.0 / dz,
            t_min: ray.t_min,
            t_max: ray.t_max,
        }
    }

    /// `p` translated to the origin and permuted into `(kx, ky, kz)` order.
    #[inline(always)]
    pub fn to_local(&self, p: &[f64; 3]) -> [f64; 3] {
        let o = &self.local_origin;
        [p[self.kx] - o[0], p[self.ky] - o[1], p[self.kz] - o[2]]
    }

    /// Watertight ray/triangle test on pre-promoted vertices.
    ///
    /// Hits on edges and vertices count. The triangle may face either way.
    #[inline]
    pub fn intersect(&self, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
        let [a, b, c] = [a, b, c].map(|v| self.to_local(&[v.x, v.y, v.z]));
        self.intersect_local(a, b, c)
    }

    /// Hit parameter for vertices already in local coordinates.
    #[inline]
    pub fn intersect_local(&self, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Option<f64> {
        if !self.hit_local(a, b, c) {
            return None;
        }
        let (u, v, w) = self.barycentric(a, b, c);
        Some(self.sz * (u * a[2] + v * b[2] + w * c[2]) / (u + v + w))
    }

    #[inline(always)]
    fn barycentric(&self, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> (f64, f64, f64) {
        let ax = a[0] - self.sx * a[2];
        let ay = a[1] - self.sy * a[2];
        let bx = b[0] - self.sx * b[2];
        let by = b[1] - self.sy * b[2];
        let cx = c[0] - self.sx * c[2];
        let cy = c[1] - self.sy * c[2];
        (cx * by - cy * bx, ax * cy - ay * cx, bx * ay - by * ax)
    }

    /// Branch-free hit decision. The range test compares the scaled hit
    /// distance against `t_min * |det|` and `t_max * |det|` instead of
    /// dividing.
    #[inline(always)]
    pub fn hit_local(&self, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> bool {
        let (u, v, w) = self.barycentric(a, b, c);
        let mixed = ((u < 0.0) | (v < 0.0) | (w < 0.0)) & ((u > 0.0) | (v > 0.0) | (w > 0.0));
        let det = u + v + w;
        let scaled = self.sz * (u * a[2] + v * b[2] + w * c[2]);
        let signed = if det < 0.0 { -scaled } else { scaled };
        let mag = det.abs();
        !mixed & (det != 0.0) & (signed >= self.t_min * mag) & (signed <= self.t_max * mag)
    }
}

/// A triangle prepared for rays that start at a point `p` and travel along
/// `p - q`, for one fixed apex `q`.
///
/// Every such ray lies on a line through `q`, so the edge tests reduce to
/// the signs of `d . n` for the three planes spanned by `q` and each edge.
/// Edge normals are cross products of apex-relative vertices; the
/// neighbour across a shared edge computes the same products in swapped
/// order, which negates the normal exactly, so no ray slips between two
/// adjacent triangles. Hits on edges and vertices count and either facing
/// is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApexTriangle {
    /// Normals of the planes `(q, b, c)`, `(q, c, a)`, `(q, a, b)`.
    pub edges: [[f64; 3]; 3],
    /// `(a - q) . ((b - q) x (c - q))`.
    pub volume: f64,
}

impl ApexTriangle {
    pub fn new(q: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Self {
        let (a, b, c) = (a - q, b - q, c - q);
        let ebc = b.cross(c);
        let eca = c.cross(a);
        let eab = a.cross(b);
        ApexTriangle {
            edges: [[ebc.x, ebc.y, ebc.z], [eca.x, eca.y, eca.z], [eab.x, eab.y, eab.z]],
            volume: a.dot(ebc),
        }
    }

    /// Whether the ray from `q + d` along `d` hits the triangle at a
    /// parameter `t >= t_min`, where the ray point is `q + (1 + t) d`.
    #[inline(always)]
    pub fn hit(&self, d: [f64; 3], lambda_min: f64) -> bool {
        apex_hit(self.edges[0], self.edges[1], self.edges[2], self.volume, d, lambda_min)
    }
}

/// Kernel of [`ApexTriangle::hit`] on unpacked data; `lambda_min` is
/// `1 + t_min`.
#[inline(always)]
pub fn apex_hit(e0: [f64; 3], e1: [f64; 3], e2: [f64; 3], volume: f64, d: [f64; 3], lambda_min: f64) -> bool {
    let u = e0[0] * d[0] + e0[1] * d[1] + e0[2] * d[2];
    let v = e1[0] * d[0] + e1[1] * d[1] + e1[2] * d[2];
    let w = e2[0] * d[0] + e2[1] * d[1] + e2[2] * d[2];
    let mixed = ((u < 0.0) | (v < 0.0) | (w < 0.0)) & ((u > 0.0) | (v > 0.0) | (w > 0.0));
    // the line q + s d meets the plane at s = volume / det
    let det = u + v + w;
    let signed = if det < 0.0 { -volume } else { volume };
    !mixed & (det != 0.0) & (signed >= lambda_min * det.abs())
}

/// Smallest hit parameter of `ray` against `tri`, or `None`.
///
/// Uses the watertight shear-and-scale formulation: rays through a shared
/// edge hit at least one of the adjacent triangles. Degenerate triangles
/// never register hits.
pub fn ray_triangle_intersect(ray: &Ray, tri: &Triangle) -> Option<f64> {
    if tri.is_degenerate() {
        return None;
    }
    RayFrame::new(ray).intersect(tri.a.to_vec3(), tri.b.to_vec3(), tri.c.to_vec3())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f32, y: f32, z: f32) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan_distance(p(0., 0., 0.), p(1., 1., 1.)), 3.0);
        let q = p(0.3, -2.5, 7.0);
        assert_eq!(manhattan_distance(q, q), 0.0);
        let d = manhattan_distance(p(0.2, 0.5, 0.9), p(1., 1., 1.));
        assert!((d - 1.4).abs() < 1e-6, "{d}");
    }

    #[test]
    fn manhattan_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rp = || p(rng.random(), rng.random(), rng.random());
        for _ in 0..100_000 {
            let (a, b, c) = (rp(), rp(), rp());
            let ab = manhattan_distance(a, b);
            assert_eq!(ab, manhattan_distance(b, a));
            assert!(ab <= manhattan_distance(a, c) + manhattan_distance(c, b) + 1e-12);
        }
    }

    #[test]
    fn tet_volume_examples() {
        let v = signed_tet_volume(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(0., 0., 1.));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        let flat = signed_tet_volume(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(3., -2., 0.));
        assert_eq!(flat, 0.0);
        // |det| = 1/4 for this apex over the corner triangle, so |V| = 1/24.
        let v = signed_tet_volume(p(1., 0.5, 0.5), p(0.5, 1., 0.5), p(0.5, 0.5, 1.), p(1., 1., 1.));
        assert!((v.abs() - 1.0 / 24.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn tet_volume_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let pts: [Point3; 4] = std::array::from_fn(|_| p(rng.random(), rng.random(), rng.random()));
            let v = signed_tet_volume(pts[0], pts[1], pts[2], pts[3]);
            assert_eq!(signed_tet_volume(pts[1], pts[0], pts[2], pts[3]), -v);
            assert_eq!(signed_tet_volume(pts[0], pts[2], pts[1], pts[3]), -v);
        }
    }

    #[test]
    fn perpendicular_center_shot_hits() {
        let tri = Triangle::new(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.));
        let n = tri.normal();
        let origin = tri.centroid() - n;
        let t = ray_triangle_intersect(&Ray::new(origin, n, 0.0, f64::INFINITY), &tri).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let tri = Triangle::new(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.));
        let ray = Ray::new(Vec3::new(0.2, 0.2, 0.5), Vec3::new(1.0, 0.3, 0.0), 0.0, f64::INFINITY);
        assert_eq!(ray_triangle_intersect(&ray, &tri), None);
    }

    #[test]
    fn degenerate_triangle_never_hits() {
        let tri = Triangle::new(p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.));
        let ray = Ray::new(Vec3::new(0.5, 0.0, -1.0), Vec3::new(0., 0., 1.), 0.0, f64::INFINITY);
        assert_eq!(ray_triangle_intersect(&ray, &tri), None);
    }

    #[test]
    fn shared_edge_is_watertight() {
        // Two triangles sharing the diagonal of the unit square; rays aimed
        // exactly at the diagonal must hit at least one of them.
        let t1 = Triangle::new(p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.));
        let t2 = Triangle::new(p(0., 0., 0.), p(1., 1., 0.), p(0., 1., 0.));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let s: f64 = rng.random();
            let target = Vec3::new(s, s, 0.0);
            let origin = Vec3::new(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0, -1.0 - rng.random::<f64>());
            let ray = Ray::new(origin, target - origin, 0.0, f64::INFINITY);
            assert!(ray_triangle_intersect(&ray, &t1).is_some() || ray_triangle_intersect(&ray, &t2).is_some());
        }
    }

    #[test]
    fn t_min_is_inclusive() {
        let tri = Triangle::new(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.));
        let ray = Ray::new(Vec3::new(0.25, 0.25, -1.0), Vec3::new(0., 0., 1.), 1.0, f64::INFINITY);
        assert_eq!(ray_triangle_intersect(&ray, &tri), Some(1.0));
        let ray = Ray::new(Vec3::new(0.25, 0.25, -1.0), Vec3::new(0., 0., 1.), 1.0 + 1e-9, f64::INFINITY);
        assert_eq!(ray_triangle_intersect(&ray, &tri), None);
    }

    #[test]
    fn aabb_corner_order() {
        let b = Aabb::new(p(0., 0., 0.), p(1., 2., 3.));
        let c = b.corners();
        assert_eq!(c[0], p(0., 0., 0.));
        assert_eq!(c[1], p(1., 0., 0.));
        assert_eq!(c[2], p(0., 2., 0.));
        assert_eq!(c[7], p(1., 2., 3.));
    }
}
