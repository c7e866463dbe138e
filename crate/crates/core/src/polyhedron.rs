//! The filtering polyhedron.
//!
//! Its 14 vertices are the 6 axis extremes and the 8 corner points. The
//! surface starts as the octahedron spanned by the extremes, one face per
//! octant, and each octant face that its corner point lies beyond is
//! replaced by a fan of three triangles meeting at that corner point.
//!
//! The reference point `q` is the midpoint of the two x extremes, or the
//! vertex centroid when the surface is not star-shaped about the midpoint.
//! Random extremes rarely give a star-shaped surface; `q` then stays at
//! the midpoint. Since `q` and every vertex lie in the hull of the cloud, each
//! tetrahedron `(q, face)` lies inside the hull either way.
//!
//! Vertex numbering is `[min x, max x, min y, max y, min z, max z]`
//! followed by the corner points `C_0..C_7` in octant order (bit 0 = +x,
//! bit 1 = +y, bit 2 = +z).

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use thiserror::Error;

use crate::extremes::{AxisExtremes, CornerPoints};
use crate::geom::{signed_tet_volume, Point3, Triangle, Vec3};
use crate::hull::{self, quickhull3d};

/// Signed-volume tolerance for the fan test and the star-shape test.
pub const VOLUME_EPS: f64 = 1e-10;

/// Octahedron faces, one per octant, wound counter-clockwise from outside.
/// An octant with an even number of negative axes uses `(X, Y, Z)`, an odd
/// one `(X, Z, Y)`.
pub const BASE_FACES: [[usize; 3]; 8] = [
    [0, 4, 2], // - - -
    [1, 2, 4], // + - -
    [0, 3, 4], // - + -
    [1, 4, 3], // + + -
    [0, 2, 5], // - - +
    [1, 5, 2], // + - +
    [0, 5, 3], // - + +
    [1, 3, 5], // + + +
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyhedronError {
    #[error("axis extremes span fewer than 3 dimensions")]
    DegenerateCloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterPolyhedron {
    pub vertices: Vec<Point3>,
    /// Cloud index of each vertex; empty for synthetic polyhedra.
    pub cloud_indices: Vec<usize>,
    pub faces: Vec<Triangle>,
    /// `faces[i]` as indices into `vertices`.
    pub face_vertices: Vec<[usize; 3]>,
    /// The 8 octahedron faces; empty for synthetic polyhedra.
    pub base_faces: Vec<Triangle>,
    /// Bit `j` is set when octant `j` is fanned out to its corner point.
    pub fans: u8,
    /// Interior reference point that rays are cast away from.
    pub q: Point3,
    pub star_shaped: bool,
}

impl FilterPolyhedron {
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Enclosed volume as the sum of signed tetrahedra from `q`.
    pub fn volume(&self) -> f64 {
        self.faces.iter().map(|t| signed_tet_volume(self.q, t.a, t.b, t.c)).sum()
    }

    /// Volume of the octahedron alone, measured from `q`.
    pub fn base_volume(&self) -> f64 {
        self.base_faces.iter().map(|t| signed_tet_volume(self.q, t.a, t.b, t.c)).sum()
    }

    /// Text OBJ: one `v x y z` line per vertex, one 1-based `f a b c` per face.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# filtering polyhedron: {} vertices, {} faces", self.vertices.len(), self.faces.len());
        let _ = writeln!(out, "# q {} {} {}", self.q.x, self.q.y, self.q.z);
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.face_vertices {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }
}

/// True iff `q` lies strictly behind every face plane, by more than [`VOLUME_EPS`].
pub fn validate_star_shape(poly: &FilterPolyhedron) -> bool {
    is_star_shaped_about(&poly.faces, poly.q)
}

pub fn is_star_shaped_about(faces: &[Triangle], q: Point3) -> bool {
    !faces.is_empty() && faces.iter().all(|t| signed_tet_volume(t.a, t.b, t.c, q) < -VOLUME_EPS)
}

fn spans_three_dimensions(points: &[Point3]) -> bool {
    let pts: Vec<Vec3> = points.iter().map(|p| p.to_vec3()).collect();
    let eps = hull::plane_tolerance(&pts);
    hull::affine_frame(&pts, eps).rank == 3
}

pub fn build_polyhedron(ext: &AxisExtremes, corners: &CornerPoints) -> Result<FilterPolyhedron, PolyhedronError> {
    let axis = ext.witnesses();
    if !spans_three_dimensions(&axis.map(|w| w.point)) {
        return Err(PolyhedronError::DegenerateCloud);
    }
    let mut vertices = Vec::with_capacity(14);
    let mut cloud_indices = Vec::with_capacity(14);
    for w in axis.iter().chain(corners.corners.iter()) {
        vertices.push(w.point);
        cloud_indices.push(w.index);
    }

    let tri = |f: [usize; 3]| Triangle::new(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    let base_faces: Vec<Triangle> = BASE_FACES.iter().map(|&f| tri(f)).collect();
    let mut fans = 0u8;
    let mut face_vertices = Vec::with_capacity(24);
    for (j, &[a, b, c]) in BASE_FACES.iter().enumerate() {
        let apex = 6 + j;
        let t = &base_faces[j];
        if signed_tet_volume(t.a, t.b, t.c, vertices[apex]) > VOLUME_EPS {
            fans |= 1 << j;
            face_vertices.extend([[a, b, apex], [b, c, apex], [c, a, apex]]);
        } else {
            face_vertices.push([a, b, c]);
        }
    }
    let faces: Vec<Triangle> = face_vertices.iter().map(|&f| tri(f)).collect();

    let x_mid = Point3::from_vec3((vertices[0].to_vec3() + vertices[1].to_vec3()) * 0.5);
    let centroid = Point3::from_vec3(vertices.iter().fold(Vec3::ZERO, |acc, p| acc + p.to_vec3()) * (1.0 / vertices.len() as f64));
    let (q, star_shaped) = match [x_mid, centroid].into_iter().find(|&q| is_star_shaped_about(&faces, q)) {
        Some(q) => (q, true),
        None => (x_mid, false),
    };

    Ok(FilterPolyhedron {
        vertices,
        cloud_indices,
        faces,
        face_vertices,
        base_faces,
        fans,
        q,
        star_shaped,
    })
}

/// A convex polyhedron with roughly `face_count` triangles, for scaling
/// benchmarks: the hull of random directions mapped onto the ball inscribed
/// in the unit cube. A hull of `k` points in convex position has `2k - 4`
/// faces, which fixes `k`.
pub fn synth_polyhedron(face_count: usize, rng_seed: u64) -> FilterPolyhedron {
    let k = ((face_count.max(4) + 4) / 2).max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut attempt = 0;
    let mesh = loop {
        let dirs: Vec<Point3> = (0..k)
            .map(|_| loop {
                let v = Vec3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                let len = v.length();
                if len > 1e-9 {
                    break Point3::from_vec3(v * (0.5 / len) + Vec3::new(0.5, 0.5, 0.5));
                }
            })
            .collect();
        match quickhull3d(&dirs) {
            Ok(mesh) => break mesh,
            Err(e) => {
                attempt += 1;
                assert!(attempt < 16, "could not sample a full-rank point set: {e}");
            }
        }
    };
    let centroid = mesh.vertices.iter().fold(Vec3::ZERO, |acc, p| acc + p.to_vec3()) * (1.0 / mesh.vertices.len() as f64);
    let q = Point3::from_vec3(centroid);
    let faces: Vec<Triangle> = mesh
        .facets
        .iter()
        .map(|f| Triangle::new(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]))
        .collect();
    let star_shaped = is_star_shaped_about(&faces, q);
    FilterPolyhedron {
        vertices: mesh.vertices,
        cloud_indices: Vec::new(),
        faces,
        face_vertices: mesh.facets,
        base_faces: Vec::new(),
        fans: 0,
        q,
        star_shaped,
    }
}
