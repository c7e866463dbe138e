//! Axis-extreme and corner-proximal points.
//!
//! Both reductions run in two levels: every chunk of the input is reduced
//! independently (in parallel), then the per-chunk partials are combined
//! sequentially in chunk order. Ties always resolve to the smallest input
//! index, so the result does not depend on the chunk size or thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{manhattan_distance, Aabb, Point3};

pub const DEFAULT_CHUNK: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtremesError {
    #[error("point cloud is empty")]
    EmptyCloud,
}

/// A selected point and its index in the input cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub point: Point3,
    pub index: usize,
}

/// The six axis-extreme points. `min[k]` / `max[k]` attain the extreme
/// coordinate on axis `k` (0 = x, 1 = y, 2 = z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisExtremes {
    pub min: [Witness; 3],
    pub max: [Witness; 3],
}

impl AxisExtremes {
    /// All six witnesses: `[min x, max x, min y, max y, min z, max z]`.
    pub fn witnesses(&self) -> [Witness; 6] {
        [self.min[0], self.max[0], self.min[1], self.max[1], self.min[2], self.max[2]]
    }
}

/// The cloud point closest (in L1) to each bounding-box corner, in the
/// octant order of [`Aabb::corners`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerPoints {
    pub corners: [Witness; 8],
    pub distances: [f64; 8],
}

#[derive(Clone, Copy)]
struct MinMaxPartial {
    min: [(f32, usize); 3],
    max: [(f32, usize); 3],
}

impl MinMaxPartial {
    fn merge(mut self, other: &MinMaxPartial) -> MinMaxPartial {
        for k in 0..3 {
            let (v, i) = other.min[k];
            if v < self.min[k].0 || (v == self.min[k].0 && i < self.min[k].1) {
                self.min[k] = (v, i);
            }
            let (v, i) = other.max[k];
            if v > self.max[k].0 || (v == self.max[k].0 && i < self.max[k].1) {
                self.max[k] = (v, i);
            }
        }
        self
    }
}

fn minmax_chunk(chunk: &[Point3], base: usize) -> MinMaxPartial {
    let first = chunk[0];
    let mut part = MinMaxPartial {
        min: [(first.x, base), (first.y, base), (first.z, base)],
        max: [(first.x, base), (first.y, base), (first.z, base)],
    };
    for (off, p) in chunk.iter().enumerate().skip(1) {
        let i = base + off;
        let c = [p.x, p.y, p.z];
        for k in 0..3 {
            if c[k] < part.min[k].0 {
                part.min[k] = (c[k], i);
            }
            if c[k] > part.max[k].0 {
                part.max[k] = (c[k], i);
            }
        }
    }
    part
}

pub fn minmax_reduce(points: &[Point3]) -> Result<AxisExtremes, ExtremesError> {
    minmax_reduce_chunked(points, DEFAULT_CHUNK)
}

/// Per-axis minima and maxima with witness indices.
pub fn minmax_reduce_chunked(points: &[Point3], chunk: usize) -> Result<AxisExtremes, ExtremesError> {
    if points.is_empty() {
        return Err(ExtremesError::EmptyCloud);
    }
    let chunk = chunk.max(1);
    let partials: Vec<MinMaxPartial> = points
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, c)| minmax_chunk(c, ci * chunk))
        .collect();
    let total = partials[1..].iter().fold(partials[0], |acc, p| acc.merge(p));
    let w = |i: usize| Witness {
        point: points[i],
        index: i,
    };
    Ok(AxisExtremes {
        min: std::array::from_fn(|k| w(total.min[k].1)),
        max: std::array::from_fn(|k| w(total.max[k].1)),
    })
}

pub fn bounding_box(ext: &AxisExtremes) -> Aabb {
    Aabb::new(
        Point3::new(ext.min[0].point.x, ext.min[1].point.y, ext.min[2].point.z),
        Point3::new(ext.max[0].point.x, ext.max[1].point.y, ext.max[2].point.z),
    )
}

#[derive(Clone, Copy)]
struct CornerPartial {
    best: [(f64, usize); 8],
}

impl CornerPartial {
    fn merge(mut self, other: &CornerPartial) -> CornerPartial {
        for j in 0..8 {
            let (d, i) = other.best[j];
            if d < self.best[j].0 || (d == self.best[j].0 && i < self.best[j].1) {
                self.best[j] = (d, i);
            }
        }
        self
    }
}

fn corner_chunk(chunk: &[Point3], base: usize, corners: &[Point3; 8]) -> CornerPartial {
    let mut part = CornerPartial {
        best: [(f64::INFINITY, usize::MAX); 8],
    };
    for (off, &p) in chunk.iter().enumerate() {
        for (j, &b) in corners.iter().enumerate() {
            let d = manhattan_distance(p, b);
            if d < part.best[j].0 {
                part.best[j] = (d, base + off);
            }
        }
    }
    part
}

pub fn nearest_to_corners(points: &[Point3], bbox: &Aabb) -> Result<CornerPoints, ExtremesError> {
    nearest_to_corners_chunked(points, bbox, DEFAULT_CHUNK)
}

/// For each corner of `bbox`, the L1-nearest cloud point (smallest index on ties).
pub fn nearest_to_corners_chunked(points: &[Point3], bbox: &Aabb, chunk: usize) -> Result<CornerPoints, ExtremesError> {
    if points.is_empty() {
        return Err(ExtremesError::EmptyCloud);
    }
    let chunk = chunk.max(1);
    let corners = bbox.corners();
    let partials: Vec<CornerPartial> = points
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, c)| corner_chunk(c, ci * chunk, &corners))
        .collect();
    let total = partials[1..].iter().fold(partials[0], |acc, p| acc.merge(p));
    Ok(CornerPoints {
        corners: std::array::from_fn(|j| Witness {
            point: points[total.best[j].1],
            index: total.best[j].1,
        }),
        distances: std::array::from_fn(|j| total.best[j].0),
    })
}
