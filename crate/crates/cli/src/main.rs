use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hullfilter::finisher::{finish, Finisher};
use hullfilter::harness::plot::{Chart, Series};
use hullfilter::harness::{
    generate, load_points, loglog_slope, run_bench, save_points, sweep_faces, sweep_rho, sweep_scale, with_threads, write_csv, write_off,
    BenchBackend, BenchConfig, BenchRecord, GenSpec, Mode, PointFormat,
};
use hullfilter::{filter_candidates, filtered_hull, Backend, Distribution, Fallback, PipelineConfig, PointCloud};

#[derive(Parser)]
#[command(name = "hullfilter", version, about = "Convex hull prefilter and benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point cloud and write it to a file.
    Gen {
        #[command(flatten)]
        cloud: GenArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = PointFormat::Bin)]
        format: PointFormat,
    },
    /// Run the filter and write the candidate points.
    Filter {
        #[command(flatten)]
        cloud: CloudArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = PointFormat::Bin)]
        format: PointFormat,
        /// Also write the filtering polyhedron as OBJ.
        #[arg(long)]
        dump_poly: Option<PathBuf>,
    },
    /// Compute the convex hull and write it as OFF.
    Hull {
        #[command(flatten)]
        cloud: CloudArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Skip the filter and hull every point.
        #[arg(long)]
        no_filter: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time filtered and unfiltered hulls of generated clouds.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Which hull paths to time.
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
    },
    /// Sweep the sphere shell thickness.
    SweepRho {
        #[arg(long, default_value_t = 1 << 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.1,0.25,0.5,0.7,1")]
        rhos: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Sweep the number of polyhedron faces for each backend.
    SweepFaces {
        #[arg(long, default_value_t = 1 << 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "24,192,1536,12288")]
        faces: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "linear,bvh")]
        backends: Vec<Backend>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Sweep the cloud size on uniform clouds.
    SweepScale {
        #[arg(long, value_delimiter = ',', default_value = "65536,131072,262144,524288,1048576,2097152,4194304")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Write the filtering polyhedron of a cloud as OBJ.
    DumpPoly {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct GenArgs {
    #[arg(long, default_value_t = Distribution::Uniform)]
    dist: Distribution,
    #[arg(long, default_value_t = 1 << 20)]
    n: usize,
    /// Shell thickness for sphere clouds, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            distribution: self.dist,
            n: self.n,
            rho: self.rho,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct CloudArgs {
    /// Read points from a file instead of generating them.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

impl CloudArgs {
    fn load(&self) -> Result<PointCloud> {
        match &self.input {
            Some(path) => Ok(PointCloud::new(load_points(path).with_context(|| format!("reading {}", path.display()))?)),
            None => Ok(generate(&self.gen.spec())?),
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = Backend::default())]
    backend: Backend,
    /// `builtin` or `exec:<command>`.
    #[arg(long, default_value_t = Finisher::Builtin)]
    finisher: Finisher,
    /// Classification when the polyhedron is not star-shaped.
    #[arg(long, default_value_t = Fallback::default())]
    fallback: Fallback,
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            backend: self.backend,
            finisher: self.finisher.clone(),
            fallback: self.fallback,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart next to the CSV.
    #[arg(long, requires = "out")]
    plot: bool,
}

impl BenchArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            pipeline: self.pipeline.config(),
            reps: self.reps,
            warmup: self.warmup,
            threads: self.pipeline.threads,
        }
    }

    fn emit(&self, records: &[BenchRecord], chart: impl FnOnce(&[BenchRecord]) -> Chart) -> Result<()> {
        match &self.out {
            Some(path) => write_csv(create(path)?, records)?,
            None => write_csv(io::stdout().lock(), records)?,
        }
        if let (true, Some(path)) = (self.plot, &self.out) {
            let svg = path.with_extension("svg");
            std::fs::write(&svg, chart(records).to_svg()).with_context(|| format!("writing {}", svg.display()))?;
            eprintln!("plot written to {}", svg.display());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Both,
    Filtered,
    Unfiltered,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn ms(ns: u64) -> f64 {
    ns as f64 * 1e-6
}

/// Mean of `y` for each distinct `x`, one series per key.
fn series_by<K: Ord + ToString>(records: &[BenchRecord], key: impl Fn(&BenchRecord) -> K, x: impl Fn(&BenchRecord) -> f64, y: impl Fn(&BenchRecord) -> f64) -> Vec<Series> {
    let mut groups: BTreeMap<K, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in records {
        let slot = groups.entry(key(r)).or_default().entry(x(r).to_bits()).or_insert((x(r), 0.0, 0));
        slot.1 += y(r);
        slot.2 += 1;
    }
    groups
        .into_iter()
        .map(|(k, pts)| {
            let mut points: Vec<(f64, f64)> = pts.into_values().map(|(x, sum, c)| (x, sum / c as f64)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label: k.to_string(), points }
        })
        .collect()
}

fn backend_label(r: &BenchRecord) -> String {
    match r.backend {
        BenchBackend::Linear => "linear".into(),
        BenchBackend::Bvh => "bvh".into(),
        BenchBackend::Unfiltered => "unfiltered".into(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { cloud, out, format } => {
            let pc = generate(&cloud.spec())?;
            save_points(&out, pc.points(), format).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} points to {}", pc.len(), out.display());
        }
        Command::Filter {
            cloud,
            pipeline,
            out,
            format,
            dump_poly,
        } => {
            let pc = cloud.load()?;
            let cfg = pipeline.config();
            let res = with_threads(pipeline.threads, || filter_candidates(&pc, &cfg))??;
            let s = &res.stats;
            eprintln!(
                "{} of {} points kept (discard {:.4}), path {:?}, {} faces, filter {:.3} ms",
                s.candidates,
                s.input,
                s.discard_fraction,
                s.path,
                s.polyhedron_faces,
                s.timings.filter_total().as_secs_f64() * 1e3
            );
            if let Some(path) = out {
                save_points(&path, res.candidates.points(), format).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = dump_poly {
                match &res.polyhedron {
                    Some(poly) => std::fs::write(&path, poly.to_obj()).with_context(|| format!("writing {}", path.display()))?,
                    None => bail!("cloud is flat; no filtering polyhedron was built"),
                }
            }
        }
        Command::Hull {
            cloud,
            pipeline,
            no_filter,
            out,
        } => {
            let pc = cloud.load()?;
            let cfg = pipeline.config();
            let hull = with_threads(pipeline.threads, || -> Result<_> {
                if no_filter {
                    Ok(finish(&cfg.finisher, pc.points())?)
                } else {
                    let res = filtered_hull(&pc, &cfg)?;
                    eprintln!(
                        "discard {:.4}, filter {:.3} ms, hull {:.3} ms",
                        res.stats.discard_fraction,
                        res.stats.timings.filter_total().as_secs_f64() * 1e3,
                        res.stats.timings.hull.as_secs_f64() * 1e3
                    );
                    Ok(res.hull)
                }
            })??;
            eprintln!("hull: {} vertices, {} facets", hull.vertices.len(), hull.facets.len());
            write_off(output(out.as_deref())?, &hull)?;
        }
        Command::Bench { gen, bench, seeds, mode } => {
            let modes: &[Mode] = match mode {
                ModeArg::Both => &[Mode::Filtered, Mode::Unfiltered],
                ModeArg::Filtered => &[Mode::Filtered],
                ModeArg::Unfiltered => &[Mode::Unfiltered],
            };
            let records = run_bench(&gen.spec(), &seeds, modes, &bench.config())?;
            for r in &records {
                eprintln!(
                    "seed {} {}: total {:.3} ms (filter {:.3}, hull {:.3}), discard {:.4}",
                    r.seed,
                    backend_label(r),
                    ms(r.total_ns),
                    ms(r.filter_ns()),
                    ms(r.phase_hull_ns),
                    r.discard_fraction
                );
            }
            bench.emit(&records, |rs| Chart {
                title: format!("{} n = {}", gen.dist, gen.n),
                x_label: "seed".into(),
                y_label: "total ms".into(),
                log_x: false,
                log_y: false,
                series: series_by(rs, backend_label, |r| r.seed as f64, |r| ms(r.total_ns)),
            })?;
        }
        Command::SweepRho { n, rhos, seeds, bench } => {
            let records = sweep_rho(n, &rhos, &seeds, &bench.config())?;
            bench.emit(&records, |rs| Chart {
                title: format!("Hull time vs shell thickness, n = {n}"),
                x_label: "rho".into(),
                y_label: "total ms".into(),
                log_x: false,
                log_y: true,
                series: series_by(rs, backend_label, |r| r.rho, |r| ms(r.total_ns)),
            })?;
        }
        Command::SweepFaces {
            n,
            faces,
            backends,
            seeds,
            bench,
        } => {
            let records = sweep_faces(n, &faces, &backends, &seeds, &bench.config())?;
            bench.emit(&records, |rs| Chart {
                title: format!("Classification time vs faces, n = {n}"),
                x_label: "faces".into(),
                y_label: "classify ms".into(),
                log_x: true,
                log_y: true,
                series: series_by(rs, backend_label, |r| r.hull_facets as f64, |r| ms(r.phase_classify_ns)),
            })?;
        }
        Command::SweepScale { ns, seeds, bench } => {
            let records = sweep_scale(&ns, &seeds, &bench.config())?;
            let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.phase_classify_ns as f64)).collect();
            if let Some(slope) = loglog_slope(&pts) {
                eprintln!("classify time log-log slope: {slope:.3}");
            }
            bench.emit(&records, |rs| Chart {
                title: "Filter time vs cloud size".into(),
                x_label: "n".into(),
                y_label: "ms".into(),
                log_x: true,
                log_y: true,
                series: ["classify", "filter total"]
                    .iter()
                    .map(|&label| Series {
                        label: label.into(),
                        points: series_by(
                            rs,
                            |_| 0,
                            |r| r.n as f64,
                            |r| if label == "classify" { ms(r.phase_classify_ns) } else { ms(r.filter_ns()) },
                        )
                        .remove(0)
                        .points,
                    })
                    .collect(),
            })?;
        }
        Command::DumpPoly { cloud, out } => {
            let pc = cloud.load()?;
            let res = filter_candidates(&pc, &PipelineConfig::default())?;
            let Some(poly) = res.polyhedron else {
                bail!("cloud is flat; no filtering polyhedron was built");
            };
            eprintln!("{} faces, star-shaped: {}", poly.face_count(), poly.star_shaped);
            output(out.as_deref())?.write_all(poly.to_obj().as_bytes())?;
        }
    }
    Ok(())
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        let io = e
            .downcast_ref::<io::Error>()
            .or_else(|| match e.downcast_ref::<hullfilter::harness::IoError>() {
                Some(hullfilter::harness::IoError::Io(io)) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> Result<()> {
    match run(Cli::parse()) {
        // downstream closed stdout, e.g. `| head`
        Err(e) if is_broken_pipe(&e) => Ok(()),
        other => other,
    }
}
