use crate::geom::{ApexTriangle, Triangle, Vec3};

use super::{promote_faces, AnyHit};

const MAX_LEAF: usize = 2;
const STACK_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Node {
    min: [f64; 3],
    max: [f64; 3],
    /// Leaf: first triangle. Interior: index of the left child.
    first: u32,
    /// Triangles in a leaf; 0 marks an interior node.
    count: u32,
    right: u32,
}

/// Binary BVH over triangles, split at the centroid median of the longest
/// axis, at most two triangles per leaf. Leaves hold the same per-triangle
/// test the linear intersector runs, so both backends agree exactly.
pub struct TriangleBvh {
    nodes: Vec<Node>,
    tris: Vec<ApexTriangle>,
    verts: Vec<[Vec3; 3]>,
    /// `order[k]` is the input face index of `tris[k]` (degenerate faces are
    /// dropped before building).
    order: Vec<usize>,
}

impl TriangleBvh {
    pub fn build(faces: &[Triangle], apex: Vec3) -> Self {
        let keep: Vec<usize> = (0..faces.len()).filter(|&i| !faces[i].is_degenerate()).collect();
        let tris = promote_faces(faces);
        debug_assert_eq!(keep.len(), tris.len());
        let mut bvh = TriangleBvh {
            nodes: Vec::with_capacity(2 * tris.len().max(1)),
            tris: Vec::with_capacity(tris.len()),
            verts: Vec::with_capacity(tris.len()),
            order: Vec::with_capacity(tris.len()),
        };
        if tris.is_empty() {
            return bvh;
        }
        // pad boxes so round-off in the slab test never culls a boundary hit
        let mut extent = 0.0f64;
        for t in &tris {
            for v in t {
                extent = extent.max(v.abs().x).max(v.abs().y).max(v.abs().z);
            }
        }
        let pad = 1e-9 * (1.0 + extent);
        let mut items: Vec<(usize, Vec3)> = tris.iter().enumerate().map(|(i, t)| (i, (t[0] + t[1] + t[2]) * (1.0 / 3.0))).collect();
        bvh.build_node(&mut items, &tris, &keep, apex, pad);
        bvh
    }

    fn build_node(&mut self, items: &mut [(usize, Vec3)], tris: &[[Vec3; 3]], keep: &[usize], apex: Vec3, pad: f64) -> u32 {
        let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = -min;
        let mut cmin = min;
        let mut cmax = max;
        for &(i, c) in items.iter() {
            for v in &tris[i] {
                min = min.min(*v);
                max = max.max(*v);
            }
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            min: [min.x - pad, min.y - pad, min.z - pad],
            max: [max.x + pad, max.y + pad, max.z + pad],
            first: 0,
            count: 0,
            right: 0,
        });
        if items.len() <= MAX_LEAF {
            let first = self.tris.len() as u32;
            for &(i, _) in items.iter() {
                let [a, b, c] = tris[i];
                self.tris.push(ApexTriangle::new(apex, a, b, c));
                self.verts.push(tris[i]);
                self.order.push(keep[i]);
            }
            let node = &mut self.nodes[id as usize];
            node.first = first;
            node.count = items.len() as u32;
            return id;
        }
        let span = cmax - cmin;
        let axis = if span.x >= span.y && span.x >= span.z {
            0
        } else if span.y >= span.z {
            1
        } else {
            2
        };
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| a.1.axis(axis).total_cmp(&b.1.axis(axis)).then(a.0.cmp(&b.0)));
        let (lo, hi) = items.split_at_mut(mid);
        let left = self.build_node(lo, tris, keep, apex, pad);
        let right = self.build_node(hi, tris, keep, apex, pad);
        let node = &mut self.nodes[id as usize];
        node.first = left;
        node.right = right;
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Input face indices in leaf order.
    pub fn leaf_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of levels; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            let n = &nodes[id];
            if n.count > 0 {
                1
            } else {
                1 + go(nodes, n.first as usize).max(go(nodes, n.right as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(&self.nodes, 0)
        }
    }

    /// Checks that every node's box contains its subtree and that leaves
    /// cover each triangle exactly once.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Ok(());
        }
        let contains = |n: &Node, lo: [f64; 3], hi: [f64; 3]| (0..3).all(|k| n.min[k] <= lo[k] && hi[k] <= n.max[k]);
        let mut seen = vec![0usize; self.tris.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let n = self.nodes[id];
            if n.count > 0 {
                for k in n.first as usize..(n.first + n.count) as usize {
                    seen[k] += 1;
                    for v in &self.verts[k] {
                        let p = [v.x, v.y, v.z];
                        if !contains(&n, p, p) {
                            return Err(format!("leaf {id} does not contain triangle {k}"));
                        }
                    }
                }
            } else {
                for child in [n.first as usize, n.right as usize] {
                    let c = self.nodes[child];
                    if !contains(&n, c.min, c.max) {
                        return Err(format!("node {id} does not contain child {child}"));
                    }
                    stack.push(child);
                }
            }
        }
        if let Some(k) = seen.iter().position(|&s| s != 1) {
            return Err(format!("triangle {k} referenced {} times", seen[k]));
        }
        Ok(())
    }
}

/// Slab test of the ray `o + t d`, `t >= 0`, against a node box. Axes with
/// a zero direction component only check that the origin is inside the slab.
#[inline(always)]
fn slab_hit(node: &Node, o: &[f64; 3], d: &[f64; 3], inv: &[f64; 3]) -> bool {
    let mut near = 0.0f64;
    let mut far = f64::INFINITY;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < node.min[k] || o[k] > node.max[k] {
                return false;
            }
            continue;
        }
        let t0 = (node.min[k] - o[k]) * inv[k];
        let t1 = (node.max[k] - o[k]) * inv[k];
        near = near.max(t0.min(t1));
        far = far.min(t0.max(t1));
    }
    near <= far
}

impl AnyHit for TriangleBvh {
    #[inline]
    fn any_hit(&self, origin: Vec3, d: Vec3, lambda_min: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let o = [origin.x, origin.y, origin.z];
        let dir = [d.x, d.y, d.z];
        let inv = [1.0 / d.x, 1.0 / d.y, 1.0 / d.z];
        let mut stack = [0u32; STACK_DEPTH];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !slab_hit(node, &o, &dir, &inv) {
                continue;
            }
            if node.count > 0 {
                for t in &self.tris[node.first as usize..(node.first + node.count) as usize] {
                    if t.hit(dir, lambda_min) {
                        return true;
                    }
                }
            } else {
                stack[top] = node.right;
                stack[top + 1] = node.first;
                top += 2;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use crate::polyhedron::synth_polyhedron;
    use crate::raycast::LinearIntersector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA_MIN: f64 = 1.0 + 1e-7;

    #[test]
    fn single_triangle_is_one_leaf() {
        let t = Triangle::new(Point3::new(0., 0., 0.), Point3::new(1., 0., 0.), Point3::new(0., 1., 0.));
        let bvh = TriangleBvh::build(&[t], Vec3::new(0.2, 0.2, -1.0));
        assert_eq!(bvh.node_count(), 1);
        assert_eq!(bvh.depth(), 1);
        bvh.validate().unwrap();
    }

    #[test]
    fn shallow_for_24_faces() {
        let poly = synth_polyhedron(24, 3);
        let bvh = TriangleBvh::build(&poly.faces, poly.q.to_vec3());
        bvh.validate().unwrap();
        assert!(bvh.depth() <= 8, "depth {}", bvh.depth());
        let mut order = bvh.leaf_order().to_vec();
        order.sort();
        assert_eq!(order, (0..poly.faces.len()).collect::<Vec<_>>());
    }

    #[test]
    fn matches_linear_on_random_rays() {
        let poly = synth_polyhedron(192, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..4 {
            // also apexes off-center and outside the polyhedron
            let q = Vec3::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
            let bvh = TriangleBvh::build(&poly.faces, q);
            bvh.validate().unwrap();
            let lin = LinearIntersector::new(&poly.faces, q);
            for _ in 0..25_000 {
                let p = Vec3::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
                assert_eq!(bvh.any_hit(p, p - q, LAMBDA_MIN), lin.any_hit(p, p - q, LAMBDA_MIN));
            }
        }
    }

    #[test]
    fn axis_aligned_rays() {
        let poly = synth_polyhedron(192, 9);
        let q = poly.q.to_vec3();
        let bvh = TriangleBvh::build(&poly.faces, q);
        let lin = LinearIntersector::new(&poly.faces, q);
        for k in 0..3 {
            for s in [-1.0, 1.0] {
                for step in [0.1, 0.3, 0.7, 2.0] {
                    let mut d = Vec3::ZERO;
                    match k {
                        0 => d.x = s * step,
                        1 => d.y = s * step,
                        _ => d.z = s * step,
                    }
                    let p = q + d;
                    assert_eq!(bvh.any_hit(p, d, LAMBDA_MIN), lin.any_hit(p, d, LAMBDA_MIN));
                    assert_eq!(lin.any_hit(p, d, LAMBDA_MIN), step < 0.5);
                }
            }
        }
    }
}
