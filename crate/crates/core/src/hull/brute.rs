use crate::geom::{orient3d, Point3};

use super::{affine_frame, lower_dim_hull, plane_tolerance, promote, HullError, HullMesh};

pub const BRUTE_FORCE_MAX_POINTS: usize = 200;

/// Hull by enumerating every triple and keeping those with all other points
/// weakly on one side. O(n^4); meant as a reference for small inputs.
///
/// Coplanar hull patches come back as overlapping triangulations, so only
/// the vertex set and the support planes are canonical.
pub fn brute_hull(points: &[Point3]) -> Result<HullMesh, HullError> {
    if points.len() > BRUTE_FORCE_MAX_POINTS {
        return Err(HullError::TooManyPoints {
            limit: BRUTE_FORCE_MAX_POINTS,
            got: points.len(),
        });
    }
    let pts = promote(points)?;
    let eps = plane_tolerance(&pts);
    let frame = affine_frame(&pts, eps);
    if frame.rank < 3 {
        return Err(HullError::Degenerate(lower_dim_hull(&pts, &frame, eps)));
    }
    let n = pts.len();
    let mut facets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
                if normal.length_squared() == 0.0 {
                    continue;
                }
                let (mut above, mut below) = (0usize, 0usize);
                for (l, &p) in pts.iter().enumerate() {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    let s = orient3d(pts[i], pts[j], pts[k], p);
                    if s > 0.0 {
                        above += 1;
                    } else if s < 0.0 {
                        below += 1;
                    }
                    if above > 0 && below > 0 {
                        break;
                    }
                }
                match (above, below) {
                    (0, 0) => {}
                    (0, _) => facets.push([i, j, k]),
                    (_, 0) => facets.push([i, k, j]),
                    _ => {}
                }
            }
        }
    }
    Ok(HullMesh::from_input_facets(points, &facets))
}
