//! Point files and hull output.
//!
//! Binary point files are little-endian: the magic `P3F1`, a `u64` count,
//! then `count` triples of `f32`. Text point files hold one `x y z` per
//! line; blank lines and lines starting with `#` are skipped.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::Point3;
use crate::hull::HullMesh;

pub const MAGIC: &[u8; 4] = b"P3F1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointFormat {
    #[default]
    Bin,
    Txt,
}

impl fmt::Display for PointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointFormat::Bin => "bin",
            PointFormat::Txt => "txt",
        })
    }
}

impl FromStr for PointFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bin" => Ok(PointFormat::Bin),
            "txt" => Ok(PointFormat::Txt),
            other => Err(format!("unknown format `{other}` (expected bin or txt)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("binary point file declares {declared} points but holds {found}")]
    Truncated { declared: u64, found: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub fn write_points<W: Write>(mut w: W, points: &[Point3], format: PointFormat) -> Result<(), IoError> {
    match format {
        PointFormat::Bin => {
            w.write_all(MAGIC)?;
            w.write_all(&(points.len() as u64).to_le_bytes())?;
            for p in points {
                for c in [p.x, p.y, p.z] {
                    w.write_all(&c.to_le_bytes())?;
                }
            }
        }
        PointFormat::Txt => {
            for p in points {
                writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads either format, detected from the leading magic.
pub fn read_points<R: Read>(r: R) -> Result<Vec<Point3>, IoError> {
    let mut r = BufReader::new(r);
    let head = r.fill_buf()?;
    if head.starts_with(MAGIC) {
        read_binary(r)
    } else {
        read_text(r)
    }
}

fn read_binary<R: BufRead>(mut r: R) -> Result<Vec<Point3>, IoError> {
    let mut header = [0u8; 12];
    r.read_exact(&mut header)?;
    let declared = u64::from_le_bytes(header[4..12].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let found = (body.len() / 12) as u64;
    if found != declared || body.len() % 12 != 0 {
        return Err(IoError::Truncated { declared, found });
    }
    Ok(body
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap());
            Point3::new(f(0), f(1), f(2))
        })
        .collect())
}

fn read_text<R: BufRead>(r: R) -> Result<Vec<Point3>, IoError> {
    let mut points = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| IoError::Parse { line: i + 1, msg };
        let coords: Vec<f32> = line
            .split_whitespace()
            .map(|t| t.parse::<f32>().map_err(|e| parse_err(format!("`{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if coords.len() != 3 {
            return Err(parse_err(format!("expected 3 coordinates, found {}", coords.len())));
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    Ok(points)
}

pub fn save_points(path: &Path, points: &[Point3], format: PointFormat) -> Result<(), IoError> {
    write_points(BufWriter::new(File::create(path)?), points, format)
}

pub fn load_points(path: &Path) -> Result<Vec<Point3>, IoError> {
    read_points(File::open(path)?)
}

/// OFF text: header, vertex count line, vertices, then `3 a b c` facets.
pub fn write_off<W: Write>(mut w: W, hull: &HullMesh) -> Result<(), IoError> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", hull.vertices.len(), hull.facets.len())?;
    for v in &hull.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    for f in &hull.facets {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}
