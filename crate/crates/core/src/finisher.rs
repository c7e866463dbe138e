//! Hull finishers: the built-in quickhull or an external command.
//!
//! An external finisher receives the candidate cloud on standard input as
//! text (`x y z` per line) and prints the indices of the hull vertices, one
//! per line, on standard output.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;

use thiserror::Error;

use crate::geom::Point3;
use crate::hull::{quickhull3d, HullError, HullMesh};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Finisher {
    #[default]
    Builtin,
    /// Shell command run through `sh -c`.
    External(String),
}

impl fmt::Display for Finisher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finisher::Builtin => f.write_str("builtin"),
            Finisher::External(cmd) => write!(f, "exec:{cmd}"),
        }
    }
}

impl FromStr for Finisher {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            Ok(Finisher::Builtin)
        } else if let Some(cmd) = s.strip_prefix("exec:") {
            if cmd.trim().is_empty() {
                Err("exec: finisher needs a command".into())
            } else {
                Ok(Finisher::External(cmd.to_string()))
            }
        } else {
            Err(format!("unknown finisher `{s}` (expected builtin or exec:<command>)"))
        }
    }
}

#[derive(Debug, Error)]
pub enum FinisherError {
    #[error("failed to run finisher: {0}")]
    Io(#[from] std::io::Error),
    #[error("finisher exited with {0}")]
    Status(std::process::ExitStatus),
    #[error("finisher output line {line}: {msg}")]
    Protocol { line: usize, msg: String },
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// Runs `command`, streaming `points` to it, and returns the vertex indices
/// it reports.
pub fn run_external(command: &str, points: &[Point3]) -> Result<Vec<usize>, FinisherError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input: Vec<Point3> = points.to_vec();
    let writer = std::thread::spawn(move || -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(&mut stdin);
        for p in &input {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
        w.flush()
    });
    let stdout = child.stdout.take().expect("stdout is piped");
    let mut indices = Vec::new();
    let mut protocol_err = None;
    for (lineno, line) in BufReader::new(stdout).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<usize>() {
            Ok(i) if i < points.len() => indices.push(i),
            Ok(i) => {
                protocol_err.get_or_insert(FinisherError::Protocol {
                    line: lineno + 1,
                    msg: format!("index {i} out of range for {} points", points.len()),
                });
            }
            Err(e) => {
                protocol_err.get_or_insert(FinisherError::Protocol {
                    line: lineno + 1,
                    msg: e.to_string(),
                });
            }
        }
    }
    // a finisher may legitimately stop reading early; broken pipes are not errors
    let _ = writer.join();
    let status = child.wait()?;
    if !status.success() {
        return Err(FinisherError::Status(status));
    }
    if let Some(e) = protocol_err {
        return Err(e);
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(indices)
}

/// Hull of `points` using `finisher`. For external finishers the reported
/// vertices are re-hulled with the built-in quickhull to recover facets.
pub fn finish(finisher: &Finisher, points: &[Point3]) -> Result<HullMesh, FinisherError> {
    match finisher {
        Finisher::Builtin => Ok(quickhull3d(points)?),
        Finisher::External(cmd) => {
            let idx = run_external(cmd, points)?;
            let verts: Vec<Point3> = idx.iter().map(|&i| points[i]).collect();
            Ok(quickhull3d(&verts)?.remap_indices(&idx))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_finisher_flags() {
        assert_eq!("builtin".parse::<Finisher>().unwrap(), Finisher::Builtin);
        assert_eq!("exec:qhull -x".parse::<Finisher>().unwrap(), Finisher::External("qhull -x".into()));
        assert!("exec:".parse::<Finisher>().is_err());
        assert!("pargeo".parse::<Finisher>().is_err());
    }

    #[test]
    fn external_identity_finisher_matches_builtin() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Point3> = (0..500).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        // reports every point as a vertex; the re-hull keeps the true ones
        let ext = finish(&Finisher::External("awk '{print NR-1}'".into()), &pts).unwrap();
        let builtin = finish(&Finisher::Builtin, &pts).unwrap();
        assert_eq!(ext.vertex_set(), builtin.vertex_set());
        let mut a = ext.vertex_indices.clone();
        a.sort();
        let mut b = builtin.vertex_indices.clone();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn external_errors_are_reported() {
        let pts = vec![Point3::default(); 4];
        assert!(matches!(run_external("exit 3", &pts), Err(FinisherError::Status(_))));
        assert!(matches!(run_external("echo banana", &pts), Err(FinisherError::Protocol { .. })));
        assert!(matches!(run_external("echo 99", &pts), Err(FinisherError::Protocol { .. })));
    }
}
