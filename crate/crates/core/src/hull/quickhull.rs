use std::collections::HashMap;

use crate::geom::{orient3d, Point3, Vec3};

use super::{affine_frame, lower_dim_hull, plane_tolerance, promote, HullError, HullMesh};

const NONE: u32 = u32::MAX;

struct Facet {
    v: [u32; 3],
    /// `adj[e]` is the facet across edge `(v[e], v[(e + 1) % 3])`.
    adj: [u32; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<u32>,
    furthest: u32,
    furthest_dist: f64,
    alive: bool,
    mark: u32,
}

struct HorizonEdge {
    a: u32,
    b: u32,
    neighbor: u32,
    slot: usize,
}

struct Builder {
    pts: Vec<Vec3>,
    facets: Vec<Facet>,
    free: Vec<u32>,
    pending: Vec<u32>,
    eps: f64,
    stamp: u32,
    // scratch buffers reused across iterations
    visible: Vec<u32>,
    horizon: Vec<HorizonEdge>,
    orphans: Vec<u32>,
    new_facets: Vec<u32>,
    // (vertex, horizon edge or facet) pairs sorted by vertex
    by_vertex: Vec<(u32, u32)>,
    // emptied outside lists, kept for their capacity
    spare: Vec<Vec<u32>>,
}

/// Looks up `key` in a slice sorted by its first component.
#[inline]
fn lookup(sorted: &[(u32, u32)], key: u32) -> Option<u32> {
    sorted.binary_search_by_key(&key, |&(k, _)| k).ok().map(|i| sorted[i].1)
}

impl Builder {
    #[inline]
    fn dist(&self, f: u32, p: u32) -> f64 {
        let f = &self.facets[f as usize];
        f.normal.dot(self.pts[p as usize]) - f.offset
    }

    fn alloc(&mut self, v: [u32; 3]) -> u32 {
        let [a, b, c] = v.map(|i| self.pts[i as usize]);
        let n = (b - a).cross(c - a);
        let len = n.length();
        let (normal, offset) = if len > 0.0 {
            let n = n * (1.0 / len);
            (n, n.dot((a + b + c) * (1.0 / 3.0)))
        } else {
            (Vec3::ZERO, 0.0)
        };
        let facet = Facet {
            v,
            adj: [NONE; 3],
            normal,
            offset,
            outside: self.spare.pop().unwrap_or_default(),
            furthest: NONE,
            furthest_dist: 0.0,
            alive: true,
            mark: 0,
        };
        match self.free.pop() {
            Some(id) => {
                self.facets[id as usize] = facet;
                id
            }
            None => {
                self.facets.push(facet);
                (self.facets.len() - 1) as u32
            }
        }
    }

    fn push_outside(&mut self, f: u32, p: u32, d: f64) {
        let facet = &mut self.facets[f as usize];
        facet.outside.push(p);
        if d > facet.furthest_dist {
            facet.furthest_dist = d;
            facet.furthest = p;
        }
    }

    /// Assigns `p` to the first facet of `candidates` it lies above.
    #[inline]
    fn assign(&mut self, p: u32, candidates: &[u32]) {
        for &f in candidates {
            let d = self.dist(f, p);
            if d > self.eps {
                self.push_outside(f, p, d);
                return;
            }
        }
    }

    fn init_simplex(&mut self, s: [usize; 4]) {
        let [i0, i1, i2, i3] = s.map(|i| i as u32);
        let below = orient3d(self.pts[s[0]], self.pts[s[1]], self.pts[s[2]], self.pts[s[3]]) < 0.0;
        // orient so that the fourth vertex ends up behind every face
        let faces: [[u32; 3]; 4] = if below {
            [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
        } else {
            [[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
        };
        let ids: Vec<u32> = faces.iter().map(|&f| self.alloc(f)).collect();
        let mut edge_owner: HashMap<(u32, u32), (u32, usize)> = HashMap::new();
        for &id in &ids {
            let v = self.facets[id as usize].v;
            for e in 0..3 {
                edge_owner.insert((v[e], v[(e + 1) % 3]), (id, e));
            }
        }
        for &id in &ids {
            let v = self.facets[id as usize].v;
            for e in 0..3 {
                let (other, _) = edge_owner[&(v[(e + 1) % 3], v[e])];
                self.facets[id as usize].adj[e] = other;
            }
        }
        for p in 0..self.pts.len() as u32 {
            if s.contains(&(p as usize)) {
                continue;
            }
            self.assign(p, &ids);
        }
        self.pending.extend(ids.iter().rev().copied());
    }

    fn run(&mut self) {
        while let Some(fi) = self.pending.pop() {
            let f = &self.facets[fi as usize];
            if !f.alive || f.outside.is_empty() {
                continue;
            }
            let eye = f.furthest;
            if !self.collect_horizon(fi, eye) {
                // Visible region is not a disk (round-off); treat the eye as
                // coplanar and retry the facet without it.
                let f = &mut self.facets[fi as usize];
                f.outside.retain(|&p| p != eye);
                f.furthest = NONE;
                f.furthest_dist = 0.0;
                let outside = std::mem::take(&mut f.outside);
                for p in outside {
                    let d = self.dist(fi, p);
                    self.push_outside(fi, p, d);
                }
                self.pending.push(fi);
                continue;
            }
            self.expand(eye);
        }
    }

    /// Fills `visible` and `horizon`; returns false if the horizon is not a
    /// single simple loop.
    fn collect_horizon(&mut self, start: u32, eye: u32) -> bool {
        self.stamp = self.stamp.wrapping_add(1);
        let stamp = self.stamp;
        self.visible.clear();
        self.horizon.clear();
        self.facets[start as usize].mark = stamp;
        self.visible.push(start);
        let mut cursor = 0;
        while cursor < self.visible.len() {
            let g = self.visible[cursor];
            cursor += 1;
            for e in 0..3 {
                let gf = &self.facets[g as usize];
                let h = gf.adj[e];
                let (a, b) = (gf.v[e], gf.v[(e + 1) % 3]);
                if self.facets[h as usize].mark == stamp {
                    continue;
                }
                if self.dist(h, eye) > self.eps {
                    self.facets[h as usize].mark = stamp;
                    self.visible.push(h);
                } else {
                    let slot = self.facets[h as usize].adj.iter().position(|&x| x == g).expect("adjacency is symmetric");
                    self.horizon.push(HorizonEdge { a, b, neighbor: h, slot });
                }
            }
        }
        let n = self.horizon.len();
        if n < 3 {
            return false;
        }
        self.by_vertex.clear();
        self.by_vertex.extend(self.horizon.iter().enumerate().map(|(k, e)| (e.a, k as u32)));
        self.by_vertex.sort_unstable();
        if self.by_vertex.windows(2).any(|w| w[0].0 == w[1].0) {
            return false;
        }
        // walk the loop from edge 0; it must return after exactly n steps
        let mut k = 0;
        for step in 1..=n {
            match lookup(&self.by_vertex, self.horizon[k].b) {
                Some(next) => k = next as usize,
                None => return false,
            }
            if k == 0 {
                return step == n;
            }
        }
        false
    }

    fn expand(&mut self, eye: u32) {
        self.orphans.clear();
        for idx in 0..self.visible.len() {
            let g = self.visible[idx] as usize;
            let mut outside = std::mem::take(&mut self.facets[g].outside);
            self.orphans.extend(outside.iter().copied().filter(|&p| p != eye));
            outside.clear();
            self.spare.push(outside);
            self.facets[g].alive = false;
            self.free.push(g as u32);
        }

        self.new_facets.clear();
        self.by_vertex.clear();
        for k in 0..self.horizon.len() {
            let (a, b, h, slot) = {
                let e = &self.horizon[k];
                (e.a, e.b, e.neighbor, e.slot)
            };
            let nf = self.alloc([a, b, eye]);
            self.facets[nf as usize].adj[0] = h;
            self.facets[h as usize].adj[slot] = nf;
            self.by_vertex.push((a, nf));
            self.new_facets.push(nf);
        }
        self.by_vertex.sort_unstable();
        for k in 0..self.new_facets.len() {
            let nf = self.new_facets[k];
            let b = self.facets[nf as usize].v[1];
            let next = lookup(&self.by_vertex, b).expect("horizon is a closed loop");
            self.facets[nf as usize].adj[1] = next;
            self.facets[next as usize].adj[2] = nf;
        }

        let orphans = std::mem::take(&mut self.orphans);
        let new_facets = std::mem::take(&mut self.new_facets);
        for &p in &orphans {
            self.assign(p, &new_facets);
        }
        for &nf in new_facets.iter().rev() {
            if !self.facets[nf as usize].outside.is_empty() {
                self.pending.push(nf);
            }
        }
        self.orphans = orphans;
        self.new_facets = new_facets;
    }
}

/// Convex hull of `points` by iterative quickhull.
///
/// Each step takes the furthest outside point of a facet, removes the
/// facets it can see and re-cones the horizon. Points within round-off of a
/// facet plane count as inside. Inputs of affine rank < 3 come back as
/// [`HullError::Degenerate`] carrying the lower-dimensional hull.
pub fn quickhull3d(points: &[Point3]) -> Result<HullMesh, HullError> {
    let pts = promote(points)?;
    let eps = plane_tolerance(&pts);
    let frame = affine_frame(&pts, eps);
    if frame.rank < 3 {
        return Err(HullError::Degenerate(lower_dim_hull(&pts, &frame, eps)));
    }
    let mut b = Builder {
        pts,
        facets: Vec::new(),
        free: Vec::new(),
        pending: Vec::new(),
        eps,
        stamp: 0,
        visible: Vec::new(),
        horizon: Vec::new(),
        orphans: Vec::new(),
        new_facets: Vec::new(),
        by_vertex: Vec::new(),
        spare: Vec::new(),
    };
    b.init_simplex(frame.indices);
    b.run();
    let facets: Vec<[usize; 3]> = b
        .facets
        .iter()
        .filter(|f| f.alive)
        .map(|f| f.v.map(|i| i as usize))
        .collect();
    Ok(HullMesh::from_input_facets(points, &facets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tetrahedron() {
        let pts = [
            Point3::new(0., 0., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(0., 1., 0.),
            Point3::new(0., 0., 1.),
        ];
        let h = quickhull3d(&pts).unwrap();
        assert_eq!(h.facets.len(), 4);
        assert_eq!(h.vertices.len(), 4);
        h.check_manifold().unwrap();
        assert!(h.max_violation(&pts) <= 1e-12);
    }

    #[test]
    fn cube_corners_with_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts: Vec<Point3> = (0..100)
            .map(|_| Point3::new(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)))
            .collect();
        for j in 0..8 {
            pts.push(Point3::new((j & 1) as f32, ((j >> 1) & 1) as f32, ((j >> 2) & 1) as f32));
        }
        let h = quickhull3d(&pts).unwrap();
        let mut idx = h.vertex_indices.clone();
        idx.sort();
        assert_eq!(idx, (100..108).collect::<Vec<_>>());
        assert_eq!(h.facets.len(), 12);
        h.check_manifold().unwrap();
    }

    #[test]
    fn sphere_points_are_all_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point3> = (0..2000)
            .map(|_| {
                let v = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                let v = v * (1.0 / v.length());
                Point3::from_vec3(v)
            })
            .collect();
        let h = quickhull3d(&pts).unwrap();
        h.check_manifold().unwrap();
        assert!(h.max_violation(&pts) <= 1e-9);
        assert!(h.vertices.len() > 1990);
        assert_eq!(h.facets.len(), 2 * h.vertices.len() - 4);
    }

    #[test]
    fn contains_every_input_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point3> = (0..20_000).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let h = quickhull3d(&pts).unwrap();
        h.check_manifold().unwrap();
        assert!(h.max_violation(&pts) <= 1e-9);
    }
}
