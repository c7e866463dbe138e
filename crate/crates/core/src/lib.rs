//! Convex-hull prefiltering in three dimensions.
//!
//! A cloud is reduced to hull candidates before the hull is computed: the
//! axis-extreme and corner-nearest points span a 14-vertex filtering
//! polyhedron, every point is classified against it by ray casting, and the
//! survivors are compacted with a hierarchical prefix sum.

pub mod cloud;
pub mod compact;
pub mod extremes;
pub mod finisher;
pub mod geom;
pub mod harness;
pub mod hull;
pub mod pipeline;
pub mod polyhedron;
pub mod raycast;

pub use cloud::{CloudMeta, Distribution, PointCloud};
pub use geom::{Aabb, Point3, Ray, Triangle, Vec3};
pub use pipeline::{filter_candidates, filtered_hull, unfiltered_hull, Fallback, FilterPath, FilteredHull, PipelineConfig};
pub use raycast::Backend;
