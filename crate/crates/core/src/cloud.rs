use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geom::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
    Sphere,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Sphere => "sphere",
        })
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "sphere" => Ok(Distribution::Sphere),
            other => Err(format!("unknown distribution `{other}` (expected uniform or sphere)")),
        }
    }
}

/// Where a cloud came from. Clouds loaded from disk carry no metadata.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CloudMeta {
    pub seed: Option<u64>,
    pub distribution: Option<Distribution>,
    pub rho: Option<f64>,
}

/// An immutable sequence of points plus generation metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    meta: CloudMeta,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self {
            points,
            meta: CloudMeta::default(),
        }
    }

    pub fn with_meta(points: Vec<Point3>, meta: CloudMeta) -> Self {
        Self { points, meta }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn meta(&self) -> &CloudMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Index of the first non-finite point, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.points.iter().position(|p| !p.is_finite())
    }
}

impl std::ops::Deref for PointCloud {
    type Target = [Point3];

    fn deref(&self) -> &[Point3] {
        &self.points
    }
}

impl From<Vec<Point3>> for PointCloud {
    fn from(points: Vec<Point3>) -> Self {
        PointCloud::new(points)
    }
}
