//! Cloud generation, file formats and the benchmark runners.

pub mod bench;
pub mod gen;
pub mod io;
pub mod plot;

pub use bench::{bench_cloud, bench_modes, loglog_slope, read_csv, run_bench, sweep_faces, sweep_rho, sweep_scale, with_threads, write_csv, BenchBackend, BenchConfig, BenchError, BenchRecord, Mode};
pub use gen::{generate, GenError, GenSpec};
pub use io::{load_points, read_points, save_points, write_off, write_points, IoError, PointFormat};
