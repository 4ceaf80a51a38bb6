use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Point, PointSet};

/// Parses `x,y` lines. `origin` only labels error messages.
pub fn parse_points(text: &str, origin: &Path) -> Result<PointSet> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.replace(' ', "").eq_ignore_ascii_case("x,y") {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message,
        };
        let (xs, ys) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected \"x,y\", found {line:?}")))?;
        let x = xs
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("bad x {xs:?}: {e}")))?;
        let y = ys
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("bad y {ys:?}: {e}")))?;
        points.push(Point::new(x, y));
    }
    Ok(PointSet { points })
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    let text = std::fs::read_to_string(path)?;
    parse_points(&text, path)
}

/// Writes with an `x,y` header so the file opens cleanly in spreadsheet tools.
pub fn write_points(points: &PointSet, path: &Path) -> Result<()> {
    let mut out = String::from("x,y\n");
    for p in points {
        writeln!(out, "{},{}", p.x, p.y).expect("write to String");
    }
    super::write_atomic(path, out.as_bytes())
}
