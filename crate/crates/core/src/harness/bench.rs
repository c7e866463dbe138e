use std::io::{Read, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{Distribution, PointCloud};
use crate::pipeline::{filtered_hull, unfiltered_hull, PhaseTimings, PipelineConfig, PipelineError};
use crate::polyhedron::synth_polyhedron;
use crate::raycast::{Backend, Classifier};

use super::gen::{generate, GenError, GenSpec};

/// Value of the `backend` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchBackend {
    Linear,
    Bvh,
    /// Plain quickhull on the whole cloud.
    Unfiltered,
}

impl From<Backend> for BenchBackend {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Linear => BenchBackend::Linear,
            Backend::Bvh => BenchBackend::Bvh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Filtered,
    Unfiltered,
}

/// One CSV row. Timings are medians over the measured repetitions.
///
/// Rows of the face-count sweep time classification against a synthetic
/// polyhedron: `phase_poly_ns` is the scene build, `hull_vertices` and
/// `hull_facets` describe the polyhedron, and the hull phase is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub distribution: Distribution,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub backend: BenchBackend,
    pub threads: usize,
    pub phase_extremes_ns: u64,
    pub phase_poly_ns: u64,
    pub phase_classify_ns: u64,
    pub phase_compact_ns: u64,
    pub phase_hull_ns: u64,
    pub total_ns: u64,
    pub candidates: usize,
    pub discard_fraction: f64,
    pub hull_vertices: usize,
    pub hull_facets: usize,
}

impl BenchRecord {
    pub fn filter_ns(&self) -> u64 {
        self.phase_extremes_ns + self.phase_poly_ns + self.phase_classify_ns + self.phase_compact_ns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub pipeline: PipelineConfig,
    /// Measured repetitions per cloud.
    pub reps: usize,
    /// Unmeasured runs before the measured ones.
    pub warmup: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            pipeline: PipelineConfig::default(),
            reps: 5,
            warmup: 1,
            threads: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    NoReps,
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, rayon::ThreadPoolBuildError> {
    match threads {
        None => Ok(f()),
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(f)),
    }
}

fn ns(d: Duration) -> u64 {
    d.as_nanos().min(u64::MAX as u128) as u64
}

/// Median of `v`; the mean of the two middle values for even lengths.
pub fn median(v: &mut [u64]) -> u64 {
    assert!(!v.is_empty(), "median of nothing");
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        ((v[m - 1] as u128 + v[m] as u128) / 2) as u64
    }
}

fn median_timings(runs: &[PhaseTimings]) -> [u64; 6] {
    let col = |f: &dyn Fn(&PhaseTimings) -> Duration| median(&mut runs.iter().map(|t| ns(f(t))).collect::<Vec<_>>());
    [
        col(&|t| t.extremes),
        col(&|t| t.polyhedron),
        col(&|t| t.classify),
        col(&|t| t.compact),
        col(&|t| t.hull),
        col(&|t| t.total()),
    ]
}

/// Benchmarks one cloud. The cloud is only borrowed.
pub fn bench_cloud(cloud: &PointCloud, spec: &GenSpec, mode: Mode, cfg: &BenchConfig) -> Result<BenchRecord, BenchError> {
    Ok(bench_modes(cloud, spec, &[mode], cfg)?.remove(0))
}

/// Benchmarks one cloud in several modes, one record per mode. Repetitions
/// of the modes are interleaved so slow drift of the machine hits all of
/// them alike.
pub fn bench_modes(cloud: &PointCloud, spec: &GenSpec, modes: &[Mode], cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if cfg.reps == 0 {
        return Err(BenchError::NoReps);
    }
    with_threads(cfg.threads, || -> Result<Vec<BenchRecord>, BenchError> {
        let run = |mode| match mode {
            Mode::Filtered => filtered_hull(cloud, &cfg.pipeline),
            Mode::Unfiltered => unfiltered_hull(cloud, &cfg.pipeline.finisher),
        };
        for _ in 0..cfg.warmup {
            for &mode in modes {
                run(mode)?;
            }
        }
        let mut timings = vec![Vec::with_capacity(cfg.reps); modes.len()];
        let mut last = vec![None; modes.len()];
        for _ in 0..cfg.reps {
            for (k, &mode) in modes.iter().enumerate() {
                let out = run(mode)?;
                timings[k].push(out.stats.timings);
                last[k] = Some((out.stats.candidates, out.stats.discard_fraction, out.hull.vertices.len(), out.hull.facets.len()));
            }
        }
        let threads = rayon::current_num_threads();
        Ok(modes
            .iter()
            .zip(timings.iter().zip(last))
            .map(|(&mode, (runs, last))| {
                let (candidates, discard_fraction, hull_vertices, hull_facets) = last.expect("reps >= 1");
                let [e, p, c, k, h, total] = median_timings(runs);
                BenchRecord {
                    distribution: spec.distribution,
                    n: cloud.len(),
                    rho: spec.rho,
                    seed: spec.seed,
                    backend: match mode {
                        Mode::Filtered => cfg.pipeline.backend.into(),
                        Mode::Unfiltered => BenchBackend::Unfiltered,
                    },
                    threads,
                    phase_extremes_ns: e,
                    phase_poly_ns: p,
                    phase_classify_ns: c,
                    phase_compact_ns: k,
                    phase_hull_ns: h,
                    total_ns: total,
                    candidates,
                    discard_fraction,
                    hull_vertices,
                    hull_facets,
                }
            })
            .collect())
    })?
}

/// One record per seed and mode; `spec.seed` is replaced by each seed.
pub fn run_bench(spec: &GenSpec, seeds: &[u64], modes: &[Mode], cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::with_capacity(seeds.len() * modes.len());
    for &seed in seeds {
        let spec = GenSpec { seed, ..*spec };
        let cloud = generate(&spec)?;
        out.extend(bench_modes(&cloud, &spec, modes, cfg)?);
    }
    Ok(out)
}

/// Filtered and unfiltered hulls of sphere clouds for each shell thickness.
pub fn sweep_rho(n: usize, rhos: &[f64], seeds: &[u64], cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::new();
    for &rho in rhos {
        out.extend(run_bench(&GenSpec::sphere(n, rho, 0), seeds, &[Mode::Filtered, Mode::Unfiltered], cfg)?);
    }
    Ok(out)
}

/// Filtered hulls of uniform clouds of each size.
pub fn sweep_scale(ns: &[usize], seeds: &[u64], cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::new();
    for &n in ns {
        out.extend(run_bench(&GenSpec::uniform(n, 0), seeds, &[Mode::Filtered], cfg)?);
    }
    Ok(out)
}

/// Classification time of a uniform cloud against synthetic polyhedra with
/// the given face counts, for each backend.
pub fn sweep_faces(n: usize, face_counts: &[usize], backends: &[Backend], seeds: &[u64], cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if cfg.reps == 0 {
        return Err(BenchError::NoReps);
    }
    let mut out = Vec::new();
    for &seed in seeds {
        let spec = GenSpec::uniform(n, seed);
        let cloud = generate(&spec)?;
        for &faces in face_counts {
            let poly = synth_polyhedron(faces, seed ^ faces as u64);
            for &backend in backends {
                let record = with_threads(cfg.threads, || {
                    let mut build = Vec::with_capacity(cfg.reps);
                    let mut classify = Vec::with_capacity(cfg.reps);
                    let mut total = Vec::with_capacity(cfg.reps);
                    let mut mask = None;
                    for rep in 0..cfg.warmup + cfg.reps {
                        let t = Instant::now();
                        let classifier = Classifier::star_decomposition(&poly, backend);
                        let built = t.elapsed();
                        let t = Instant::now();
                        let m = classifier.classify(cloud.points());
                        let classified = t.elapsed();
                        if rep >= cfg.warmup {
                            build.push(ns(built));
                            classify.push(ns(classified));
                            total.push(ns(built + classified));
                        }
                        mask = Some(m);
                    }
                    let mask = mask.expect("reps >= 1");
                    BenchRecord {
                        distribution: spec.distribution,
                        n,
                        rho: 0.0,
                        seed,
                        backend: backend.into(),
                        threads: rayon::current_num_threads(),
                        phase_extremes_ns: 0,
                        phase_poly_ns: median(&mut build),
                        phase_classify_ns: median(&mut classify),
                        phase_compact_ns: 0,
                        phase_hull_ns: 0,
                        total_ns: median(&mut total),
                        candidates: mask.candidate_count(),
                        discard_fraction: mask.discard_fraction(),
                        hull_vertices: poly.vertices.len(),
                        hull_facets: poly.face_count(),
                    }
                })?;
                out.push(record);
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`. `None` with fewer than two
/// distinct positive abscissae.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn write_csv<W: Write>(w: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<BenchRecord>, _>>()?)
}
