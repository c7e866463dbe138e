//! 3D convex hulls: an iterative quickhull and an O(n^4) enumeration used as
//! a test oracle.

mod brute;
mod quickhull;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::geom::{Point3, Vec3};

pub use brute::{brute_hull, BRUTE_FORCE_MAX_POINTS};
pub use quickhull::quickhull3d;

/// Absolute tolerance for facet containment checks at unit scale.
pub const HULL_CONTAINMENT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerDimHull {
    /// Affine rank of the input: 0 (coincident), 1 (collinear) or 2 (coplanar).
    pub rank: usize,
    /// Input indices of the lower-dimensional hull's vertices. For rank 2
    /// these are in counter-clockwise order around the polygon.
    pub vertex_indices: Vec<usize>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HullError {
    #[error("cannot compute the hull of an empty point set")]
    EmptyInput,
    #[error("input has affine rank {} < 3", .0.rank)]
    Degenerate(LowerDimHull),
    #[error("brute-force hull limited to {limit} points, got {got}")]
    TooManyPoints { limit: usize, got: usize },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
}

/// A closed triangulated hull surface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HullMesh {
    pub vertices: Vec<Point3>,
    /// `vertex_indices[i]` is the input index of `vertices[i]`.
    pub vertex_indices: Vec<usize>,
    /// Outward-oriented facets, as indices into `vertices`.
    pub facets: Vec<[usize; 3]>,
}

impl HullMesh {
    pub(crate) fn from_input_facets(points: &[Point3], facets: &[[usize; 3]]) -> HullMesh {
        let mut used: Vec<usize> = facets.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let mut remap = vec![usize::MAX; points.len()];
        for (k, &i) in used.iter().enumerate() {
            remap[i] = k;
        }
        HullMesh {
            vertices: used.iter().map(|&i| points[i]).collect(),
            facets: facets.iter().map(|f| f.map(|i| remap[i])).collect(),
            vertex_indices: used,
        }
    }

    /// Maps vertex indices through `index_map` (e.g. from candidate-cloud
    /// indices back into the original cloud).
    pub fn remap_indices(mut self, index_map: &[usize]) -> HullMesh {
        for i in &mut self.vertex_indices {
            *i = index_map[*i];
        }
        self
    }

    /// Vertex coordinates as exact bit patterns, for set comparisons.
    pub fn vertex_set(&self) -> BTreeSet<[u32; 3]> {
        self.vertices.iter().map(|p| p.bits()).collect()
    }

    pub fn edge_count(&self) -> usize {
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for f in &self.facets {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.facets.len() as i64
    }

    /// Checks that every directed edge appears exactly once and its reverse
    /// exactly once, and that V - E + F = 2.
    pub fn check_manifold(&self) -> Result<(), String> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.facets {
            for e in 0..3 {
                *directed.entry((f[e], f[(e + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(format!("directed edge ({a},{b}) used {count} times"));
            }
            if directed.get(&(b, a)) != Some(&1) {
                return Err(format!("edge ({a},{b}) has no opposite"));
            }
        }
        let chi = self.euler_characteristic();
        if chi != 2 {
            return Err(format!("Euler characteristic {chi} != 2"));
        }
        Ok(())
    }

    /// Unit outward normal and offset of each facet plane.
    pub fn facet_planes(&self) -> Vec<(Vec3, f64)> {
        self.facets
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i].to_vec3());
                let n = (b - a).cross(c - a);
                let n = n * (1.0 / n.length());
                (n, n.dot(a))
            })
            .collect()
    }

    /// Largest signed distance of any point above any facet plane.
    pub fn max_violation(&self, points: &[Point3]) -> f64 {
        let planes = self.facet_planes();
        points
            .iter()
            .map(|p| {
                let v = p.to_vec3();
                planes.iter().map(|(n, d)| n.dot(v) - d).fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Affine rank of a point set plus up to four spanning input indices.
pub(crate) struct AffineFrame {
    pub rank: usize,
    pub indices: [usize; 4],
}

/// Round-off tolerance for plane tests, proportional to coordinate magnitude.
pub(crate) fn plane_tolerance(points: &[Vec3]) -> f64 {
    let mut m = Vec3::ZERO;
    for p in points {
        m = m.max(p.abs());
    }
    3.0 * f64::EPSILON * (m.x + m.y + m.z)
}

pub(crate) fn affine_frame(points: &[Vec3], eps: f64) -> AffineFrame {
    let mut ext = [0usize; 6];
    for (i, p) in points.iter().enumerate() {
        for k in 0..3 {
            if p.axis(k) < points[ext[2 * k]].axis(k) {
                ext[2 * k] = i;
            }
            if p.axis(k) > points[ext[2 * k + 1]].axis(k) {
                ext[2 * k + 1] = i;
            }
        }
    }
    let mut best = (0.0, ext[0], ext[0]);
    for &i in &ext {
        for &j in &ext {
            let d = (points[i] - points[j]).length_squared();
            if d > best.0 {
                best = (d, i.min(j), i.max(j));
            }
        }
    }
    let (_, i0, i1) = best;
    let mut frame = AffineFrame {
        rank: 0,
        indices: [i0; 4],
    };
    if best.0.sqrt() <= eps {
        return frame;
    }
    frame.rank = 1;
    frame.indices[1] = i1;

    let (p0, p1) = (points[i0], points[i1]);
    let dir = p1 - p0;
    let mut far = (0.0, i0);
    for (i, p) in points.iter().enumerate() {
        let d = dir.cross(*p - p0).length_squared();
        if d > far.0 {
            far = (d, i);
        }
    }
    if far.0.sqrt() / dir.length() <= eps {
        return frame;
    }
    frame.rank = 2;
    frame.indices[2] = far.1;

    let n = dir.cross(points[far.1] - p0);
    let n = n * (1.0 / n.length());
    let mut far = (0.0, i0);
    for (i, p) in points.iter().enumerate() {
        let d = n.dot(*p - p0).abs();
        if d > far.0 {
            far = (d, i);
        }
    }
    if far.0 <= eps {
        return frame;
    }
    frame.rank = 3;
    frame.indices[3] = far.1;
    frame
}

/// Hull of a point set whose affine rank is below 3.
pub(crate) fn lower_dim_hull(points: &[Vec3], frame: &AffineFrame, eps: f64) -> LowerDimHull {
    let [i0, i1, i2, _] = frame.indices;
    match frame.rank {
        0 => LowerDimHull {
            rank: 0,
            vertex_indices: vec![i0],
        },
        1 => {
            let dir = points[i1] - points[i0];
            let (mut lo, mut hi) = (i0, i0);
            for (i, p) in points.iter().enumerate() {
                let t = dir.dot(*p - points[i0]);
                if t < dir.dot(points[lo] - points[i0]) {
                    lo = i;
                }
                if t > dir.dot(points[hi] - points[i0]) {
                    hi = i;
                }
            }
            LowerDimHull {
                rank: 1,
                vertex_indices: vec![lo, hi],
            }
        }
        _ => {
            let origin = points[i0];
            let u = points[i1] - origin;
            let u = u * (1.0 / u.length());
            let n = u.cross(points[i2] - origin);
            let v = n.cross(u);
            let v = v * (1.0 / v.length());
            let planar: Vec<(f64, f64)> = points.iter().map(|p| ((*p - origin).dot(u), (*p - origin).dot(v))).collect();
            LowerDimHull {
                rank: 2,
                vertex_indices: monotone_chain(&planar, eps),
            }
        }
    }
}

/// Andrew's monotone chain; returns counter-clockwise hull indices.
fn monotone_chain(pts: &[(f64, f64)], eps: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).unwrap().then(a.cmp(&b)));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a].0 - pts[o].0) * (pts[b].1 - pts[o].1) - (pts[a].1 - pts[o].1) * (pts[b].0 - pts[o].0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= eps {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

pub(crate) fn promote(points: &[Point3]) -> Result<Vec<Vec3>, HullError> {
    if points.is_empty() {
        return Err(HullError::EmptyInput);
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(HullError::NonFinite(i));
    }
    Ok(points.iter().map(|p| p.to_vec3()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f32, y: f32, z: f32) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn degenerate_inputs_are_flagged() {
        match quickhull3d(&[p(1., 1., 1.); 5]) {
            Err(HullError::Degenerate(h)) => assert_eq!(h, LowerDimHull { rank: 0, vertex_indices: vec![0] }),
            other => panic!("{other:?}"),
        }
        let line: Vec<Point3> = [0.5f32, 0.0, 2.0, 1.0].iter().map(|&t| p(t, 2. * t, -t)).collect();
        match quickhull3d(&line) {
            Err(HullError::Degenerate(h)) => {
                assert_eq!(h.rank, 1);
                let mut v = h.vertex_indices.clone();
                v.sort();
                assert_eq!(v, vec![1, 2]);
            }
            other => panic!("{other:?}"),
        }
        let square = vec![p(0., 0., 0.), p(1., 0., 0.), p(0.5, 0.5, 0.), p(1., 1., 0.), p(0., 1., 0.)];
        match brute_hull(&square) {
            Err(HullError::Degenerate(h)) => {
                assert_eq!(h.rank, 2);
                let mut v = h.vertex_indices.clone();
                v.sort();
                assert_eq!(v, vec![0, 1, 3, 4]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(quickhull3d(&[]), Err(HullError::EmptyInput));
    }

    #[test]
    fn manifold_check_detects_open_surface() {
        let pts = [p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(0., 0., 1.)];
        let mut mesh = quickhull3d(&pts).unwrap();
        assert!(mesh.check_manifold().is_ok());
        mesh.facets.pop();
        assert!(mesh.check_manifold().is_err());
    }
}
