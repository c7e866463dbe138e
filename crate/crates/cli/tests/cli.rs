use std::path::Path;
use std::process::{Command, Output};

fn hullfilter(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_hullfilter")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Sorted vertex lines of an OFF file.
fn off_vertices(off: &[u8]) -> Vec<String> {
    let text = String::from_utf8(off.to_vec()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("OFF"));
    let nv: usize = lines.next().unwrap().split(' ').next().unwrap().parse().unwrap();
    let mut v: Vec<String> = lines.take(nv).map(str::to_string).collect();
    v.sort();
    v
}

#[test]
fn gen_filter_hull_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pts = path(dir.path(), "s.bin");
    hullfilter(&["gen", "--dist", "sphere", "--n", "20000", "--rho", "0.5", "--seed", "2", "--out", &pts]);
    assert_eq!(std::fs::metadata(&pts).unwrap().len(), 12 + 12 * 20_000);

    let cand = path(dir.path(), "c.txt");
    let obj = path(dir.path(), "p.obj");
    let out = hullfilter(&["filter", "--input", &pts, "--out", &cand, "--format", "txt", "--dump-poly", &obj]);
    let kept = std::fs::read_to_string(&cand).unwrap().lines().count();
    assert!(kept > 100 && kept < 20_000, "{kept}");
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("{kept} of 20000")));
    let obj_text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(obj_text.lines().filter(|l| l.starts_with("v ")).count(), 14);

    let filtered = off_vertices(&hullfilter(&["hull", "--input", &pts, "--backend", "bvh"]).stdout);
    let plain = off_vertices(&hullfilter(&["hull", "--input", &pts, "--no-filter"]).stdout);
    assert!(filtered.len() > 100);
    assert_eq!(filtered, plain);
}

#[test]
fn bench_and_sweeps_write_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "rho.csv");
    hullfilter(&["sweep-rho", "--n", "5000", "--rhos", "0,0.5", "--seeds", "1,2", "--reps", "1", "--warmup", "0", "--out", &csv, "--plot"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("distribution,n,rho,seed,backend,threads,"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    assert!(std::fs::read_to_string(dir.path().join("rho.svg")).unwrap().contains("<polyline"));

    let out = hullfilter(&["sweep-faces", "--n", "5000", "--faces", "24,192", "--reps", "1"]).stdout;
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1 + 4);

    let out = hullfilter(&["bench", "--n", "3000", "--seeds", "4", "--reps", "1", "--mode", "filtered", "--threads", "2"]).stdout;
    let text = String::from_utf8(out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "uniform");
    assert_eq!(row[5], "2");
}

#[test]
fn external_finisher_protocol() {
    // reporting every index makes the external path hull all candidates
    let dir = tempfile::tempdir().unwrap();
    let pts = path(dir.path(), "u.txt");
    hullfilter(&["gen", "--n", "2000", "--seed", "6", "--out", &pts, "--format", "txt"]);
    let ext = hullfilter(&["hull", "--input", &pts, "--finisher", "exec:awk '{print NR-1}'"]).stdout;
    let builtin = hullfilter(&["hull", "--input", &pts]).stdout;
    assert_eq!(ext, builtin);
}

#[test]
fn bad_arguments_fail() {
    for args in [&["gen", "--n", "0", "--out", "/dev/null"][..], &["hull", "--input", "/nonexistent"], &["bench", "--backend", "gpu"], &["sweep-rho", "--plot"]] {
        let out = Command::new(env!("CARGO_BIN_EXE_hullfilter")).args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
    }
}
