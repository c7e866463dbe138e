use crate::geom::{apex_hit, ApexTriangle, Triangle, Vec3};

use super::{promote_faces, AnyHit};

const LANES: usize = 8;

/// Eight triangles: `edges[edge][axis][lane]` and one volume per lane.
#[derive(Clone, Copy)]
struct Block {
    edges: [[[f64; LANES]; 3]; 3],
    volume: [f64; LANES],
}

const EMPTY: Block = Block {
    edges: [[[0.0; LANES]; 3]; 3],
    volume: [0.0; LANES],
};

/// Brute-force any-hit over every face.
///
/// Triangles are stored in blocks of [`LANES`] in structure-of-arrays form
/// and padded with all-zero triangles, which never hit, so the inner loop
/// evaluates a whole block without branches.
pub struct LinearIntersector {
    blocks: Vec<Block>,
    len: usize,
}

impl LinearIntersector {
    pub fn new(faces: &[Triangle], apex: Vec3) -> Self {
        let tris = promote_faces(faces);
        let mut blocks = vec![EMPTY; tris.len().div_ceil(LANES)];
        for (i, t) in tris.iter().enumerate() {
            let at = ApexTriangle::new(apex, t[0], t[1], t[2]);
            let (blk, lane) = (&mut blocks[i / LANES], i % LANES);
            for e in 0..3 {
                for k in 0..3 {
                    blk.edges[e][k][lane] = at.edges[e][k];
                }
            }
            blk.volume[lane] = at.volume;
        }
        LinearIntersector { blocks, len: tris.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl AnyHit for LinearIntersector {
    #[inline]
    fn any_hit(&self, _origin: Vec3, d: Vec3, lambda_min: f64) -> bool {
        let d = [d.x, d.y, d.z];
        for blk in &self.blocks {
            let [e0, e1, e2] = &blk.edges;
            let mut any = false;
            for l in 0..LANES {
                any |= apex_hit(
                    [e0[0][l], e0[1][l], e0[2][l]],
                    [e1[0][l], e1[1][l], e1[2][l]],
                    [e2[0][l], e2[1][l], e2[2][l]],
                    blk.volume[l],
                    d,
                    lambda_min,
                );
            }
            if any {
                return true;
            }
        }
        false
    }
}
