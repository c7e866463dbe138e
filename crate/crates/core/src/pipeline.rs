//! The end-to-end filter: extremes, polyhedron, classification, compaction
//! and the final hull.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cloud::PointCloud;
use crate::compact::{compact_points_indexed, CompactError};
use crate::extremes::{bounding_box, minmax_reduce_chunked, nearest_to_corners_chunked, ExtremesError, DEFAULT_CHUNK};
use crate::finisher::{finish, Finisher, FinisherError};
use crate::hull::{HullError, HullMesh};
use crate::polyhedron::{build_polyhedron, FilterPolyhedron, PolyhedronError};
use crate::raycast::{classify_halfspace, Backend, CandidateMask, Classifier};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub backend: Backend,
    /// Chunk size of the extreme-point reductions.
    pub chunk_size: usize,
    pub finisher: Finisher,
    /// Classification used when the polyhedron is not star-shaped.
    pub fallback: Fallback,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            backend: Backend::default(),
            chunk_size: DEFAULT_CHUNK,
            finisher: Finisher::Builtin,
            fallback: Fallback::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    /// Ray cast anyway: discards exactly the points inside some
    /// tetrahedron `(q, face)`.
    #[default]
    StarDecomposition,
    /// Discard only points behind all 8 octahedron face planes.
    OctahedronHalfspace,
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::StarDecomposition => "decomposition",
            Fallback::OctahedronHalfspace => "halfspace",
        })
    }
}

impl FromStr for Fallback {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decomposition" => Ok(Fallback::StarDecomposition),
            "halfspace" => Ok(Fallback::OctahedronHalfspace),
            other => Err(format!("unknown fallback `{other}` (expected decomposition or halfspace)")),
        }
    }
}

/// How the candidates were selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterPath {
    /// Ray casting against the star-shaped polyhedron.
    Polyhedron,
    /// Polyhedron not star-shaped; ray casting against its star decomposition.
    StarDecomposition,
    /// Polyhedron not star-shaped; half-space test against the octahedron.
    OctahedronHalfspace,
    /// Extremes are flat; every point is a candidate.
    Unfiltered,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub extremes: Duration,
    pub polyhedron: Duration,
    pub classify: Duration,
    pub compact: Duration,
    pub hull: Duration,
}

impl PhaseTimings {
    pub fn filter_total(&self) -> Duration {
        self.extremes + self.polyhedron + self.classify + self.compact
    }

    pub fn total(&self) -> Duration {
        self.filter_total() + self.hull
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStats {
    pub input: usize,
    pub candidates: usize,
    pub discard_fraction: f64,
    pub path: FilterPath,
    pub polyhedron_faces: usize,
    pub timings: PhaseTimings,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Finisher(FinisherError),
    #[error(transparent)]
    Compact(#[from] CompactError),
}

impl From<FinisherError> for PipelineError {
    fn from(e: FinisherError) -> Self {
        match e {
            FinisherError::Hull(h) => PipelineError::Hull(h),
            other => PipelineError::Finisher(other),
        }
    }
}

impl From<ExtremesError> for PipelineError {
    fn from(e: ExtremesError) -> Self {
        match e {
            ExtremesError::EmptyCloud => PipelineError::EmptyCloud,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub candidates: PointCloud,
    /// Original cloud index of each candidate.
    pub indices: Vec<usize>,
    pub mask: CandidateMask,
    pub polyhedron: Option<FilterPolyhedron>,
    pub stats: PipelineStats,
}

#[derive(Debug, Clone)]
pub struct FilteredHull {
    /// Vertex indices refer to the input cloud.
    pub hull: HullMesh,
    pub stats: PipelineStats,
}

/// Runs the filter phases only and returns the candidate cloud.
pub fn filter_candidates(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<FilterOutput, PipelineError> {
    let points = cloud.points();
    if let Some(i) = cloud.first_non_finite() {
        return Err(PipelineError::NonFinite(i));
    }
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let ext = minmax_reduce_chunked(points, cfg.chunk_size)?;
    let corners = nearest_to_corners_chunked(points, &bounding_box(&ext), cfg.chunk_size)?;
    timings.extremes = t.elapsed();

    let t = Instant::now();
    let poly = match build_polyhedron(&ext, &corners) {
        Ok(p) => Some(p),
        Err(PolyhedronError::DegenerateCloud) => None,
    };
    timings.polyhedron = t.elapsed();

    let t = Instant::now();
    let (mask, path) = match &poly {
        Some(p) => match Classifier::new(p, cfg.backend) {
            Ok(c) => (c.classify(points), FilterPath::Polyhedron),
            Err(_) => match cfg.fallback {
                Fallback::StarDecomposition => (Classifier::star_decomposition(p, cfg.backend).classify(points), FilterPath::StarDecomposition),
                Fallback::OctahedronHalfspace => (classify_halfspace(points, &p.base_faces, &p.cloud_indices), FilterPath::OctahedronHalfspace),
            },
        },
        None => (CandidateMask::all_candidates(points.len()), FilterPath::Unfiltered),
    };
    timings.classify = t.elapsed();

    let t = Instant::now();
    let (candidates, indices) = compact_points_indexed(points, &mask)?;
    let candidates = PointCloud::with_meta(candidates, *cloud.meta());
    timings.compact = t.elapsed();

    let stats = PipelineStats {
        input: points.len(),
        candidates: candidates.len(),
        discard_fraction: mask.discard_fraction(),
        path,
        polyhedron_faces: poly.as_ref().map_or(0, |p| p.face_count()),
        timings,
    };
    Ok(FilterOutput {
        candidates,
        indices,
        mask,
        polyhedron: poly,
        stats,
    })
}

/// Filters `cloud`, then hulls the surviving candidates.
pub fn filtered_hull(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<FilteredHull, PipelineError> {
    let out = filter_candidates(cloud, cfg)?;
    let mut stats = out.stats;
    let t = Instant::now();
    let hull = finish(&cfg.finisher, out.candidates.points())?.remap_indices(&out.indices);
    stats.timings.hull = t.elapsed();
    Ok(FilteredHull { hull, stats })
}

/// Hull of the whole cloud without filtering, timed like the filtered path.
pub fn unfiltered_hull(cloud: &PointCloud, finisher: &Finisher) -> Result<FilteredHull, PipelineError> {
    if cloud.is_empty() {
        return Err(PipelineError::EmptyCloud);
    }
    let t = Instant::now();
    let hull = finish(finisher, cloud.points())?;
    let timings = PhaseTimings {
        hull: t.elapsed(),
        ..Default::default()
    };
    Ok(FilteredHull {
        hull,
        stats: PipelineStats {
            input: cloud.len(),
            candidates: cloud.len(),
            discard_fraction: 0.0,
            path: FilterPath::Unfiltered,
            polyhedron_faces: 0,
            timings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use crate::hull::quickhull3d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new((0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect())
    }

    #[test]
    fn fifty_points_match_full_hull() {
        for seed in 0..20 {
            let cloud = uniform(50, seed);
            let f = filtered_hull(&cloud, &PipelineConfig::default()).unwrap();
            let full = quickhull3d(&cloud).unwrap();
            assert_eq!(f.hull.vertex_set(), full.vertex_set(), "seed {seed}");
            let mut a = f.hull.vertex_indices.clone();
            a.sort();
            let mut b = full.vertex_indices.clone();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn coplanar_cloud_skips_filter_and_reports_degenerate() {
        let cloud = PointCloud::new((0..100).map(|i| Point3::new((i % 10) as f32, (i / 10) as f32, 0.0)).collect());
        let out = filter_candidates(&cloud, &PipelineConfig::default()).unwrap();
        assert_eq!(out.stats.path, FilterPath::Unfiltered);
        assert_eq!(out.stats.candidates, 100);
        assert!(matches!(filtered_hull(&cloud, &PipelineConfig::default()), Err(PipelineError::Hull(HullError::Degenerate(_)))));
    }

    #[test]
    fn empty_and_non_finite_inputs() {
        assert!(matches!(filtered_hull(&PointCloud::default(), &PipelineConfig::default()), Err(PipelineError::EmptyCloud)));
        let cloud = PointCloud::new(vec![Point3::new(0., 0., 0.), Point3::new(f32::NAN, 0., 0.)]);
        assert!(matches!(filtered_hull(&cloud, &PipelineConfig::default()), Err(PipelineError::NonFinite(1))));
    }

    fn out_fans(cloud: &PointCloud) -> usize {
        let out = filter_candidates(cloud, &PipelineConfig::default()).unwrap();
        out.polyhedron.unwrap().fans.count_ones() as usize
    }

    #[test]
    fn fallbacks_are_sound() {
        for seed in 0..10 {
            let cloud = uniform(3000, 100 + seed);
            let full = quickhull3d(&cloud).unwrap().vertex_set();
            for fallback in [Fallback::StarDecomposition, Fallback::OctahedronHalfspace] {
                let cfg = PipelineConfig {
                    fallback,
                    ..Default::default()
                };
                assert_eq!(filtered_hull(&cloud, &cfg).unwrap().hull.vertex_set(), full, "seed {seed} {fallback}");
            }
        }
    }

    #[test]
    fn stats_are_consistent() {
        let cloud = uniform(20_000, 3);
        let f = filtered_hull(&cloud, &PipelineConfig::default()).unwrap();
        assert_ne!(f.stats.path, FilterPath::Unfiltered);
        assert!(f.stats.candidates >= f.hull.vertices.len());
        assert!((0.0..=1.0).contains(&f.stats.discard_fraction));
        assert_eq!(f.stats.polyhedron_faces, 8 + 2 * out_fans(&cloud));
        assert!(f.stats.timings.total() >= f.stats.timings.hull);
    }
}
