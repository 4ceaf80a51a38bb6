//! Value types shared by every module, and their invariants.
//!
//! All rasters are stored row-major with `(x = column, y = row)` coordinates,
//! 0-based. Values are plain data: construct them with the checked
//! constructors, or build them field by field and call [`Validate::validate`].

use std::collections::{HashMap, HashSet};
use std::fmt;

/// First invariant a value breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl Violation {
    fn new(msg: impl Into<String>) -> Self {
        Violation(msg.into())
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

pub trait Validate {
    /// Returns the first violated invariant, or `Ok(())`.
    fn validate(&self) -> Result<(), Violation>;
}

/// Label codes of a [`TriLabelMap`].
pub mod code {
    pub const BACKGROUND: u8 = 0;
    pub const NUCLEUS: u8 = 1;
    pub const IGNORED: u8 = 2;
}

fn check_shape(width: usize, height: usize, len: usize, channels: usize) -> Result<(), Violation> {
    if width == 0 || height == 0 {
        return Err(Violation::new(format!("empty raster {width}x{height}")));
    }
    if len != width * height * channels {
        return Err(Violation::new(format!(
            "sample count {len} does not match {width}x{height}x{channels}"
        )));
    }
    Ok(())
}

fn check_unit_interval(values: &[f64]) -> Result<(), Violation> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Violation::new(format!("non-finite value at index {i}")));
        }
        if !(0.0..=1.0).contains(v) {
            return Err(Violation::new(format!("value {v} at index {i} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Three-channel color image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, interleaved RGB.
    pub samples: Vec<f64>,
    /// Per-channel illumination intensity used by the optical-density transform.
    pub illumination: [f64; 3],
}

impl RgbImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self, Violation> {
        let img = RgbImage {
            width,
            height,
            samples,
            illumination: [1.0; 3],
        };
        img.validate()?;
        Ok(img)
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let samples = (0..width * height).flat_map(|_| rgb).collect();
        RgbImage {
            width,
            height,
            samples,
            illumination: [1.0; 3],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

impl Validate for RgbImage {
    fn validate(&self) -> Result<(), Violation> {
        check_shape(self.width, self.height, self.samples.len(), 3)?;
        check_unit_interval(&self.samples)?;
        if self.illumination.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Violation::new("illumination must be finite and positive"));
        }
        Ok(())
    }
}

/// Single-channel image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self, Violation> {
        let img = GrayImage {
            width,
            height,
            samples,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl Validate for GrayImage {
    fn validate(&self) -> Result<(), Violation> {
        check_shape(self.width, self.height, self.samples.len(), 1)?;
        check_unit_interval(&self.samples)
    }
}

/// Per-pixel probability of the nucleus class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ProbMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, Violation> {
        let map = ProbMap {
            width,
            height,
            values,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        ProbMap {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

impl Validate for ProbMap {
    fn validate(&self) -> Result<(), Violation> {
        check_shape(self.width, self.height, self.values.len(), 1)?;
        check_unit_interval(&self.values)
    }
}

/// Tri-state supervision map: see [`code`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriLabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl TriLabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self, Violation> {
        let map = TriLabelMap {
            width,
            height,
            labels,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        TriLabelMap {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Number of pixels that carry supervision (code 0 or 1).
    pub fn supervised_count(&self) -> usize {
        self.labels.iter().filter(|&&c| c != code::IGNORED).count()
    }
}

impl Validate for TriLabelMap {
    fn validate(&self) -> Result<(), Violation> {
        check_shape(self.width, self.height, self.labels.len(), 1)?;
        if let Some(i) = self.labels.iter().position(|&c| c > code::IGNORED) {
            return Err(Violation::new(format!(
                "label code out of range: {} at index {i}",
                self.labels[i]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub const fn new(x: usize, y: usize) -> Self {
        Point { x, y }
    }
}

/// One annotated pixel per nucleus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    pub points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self, Violation> {
        let set = PointSet { points };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Checks that every point lies inside a `width` x `height` raster.
    pub fn validate_within(&self, width: usize, height: usize) -> Result<(), Violation> {
        self.validate()?;
        for p in &self.points {
            if p.x >= width || p.y >= height {
                return Err(Violation::new(format!(
                    "point ({}, {}) outside {width}x{height} image",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

impl Validate for PointSet {
    fn validate(&self) -> Result<(), Violation> {
        let mut seen = HashSet::with_capacity(self.points.len());
        for p in &self.points {
            if !seen.insert(*p) {
                return Err(Violation::new(format!("duplicate point ({}, {})", p.x, p.y)));
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Instance segmentation: 0 is background, `1..=K` are objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    pub width: usize,
    pub height: usize,
    pub ids: Vec<u32>,
}

impl InstanceMap {
    pub fn empty(width: usize, height: usize) -> Self {
        InstanceMap {
            width,
            height,
            ids: vec![0; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Largest instance id (`K`).
    pub fn instance_count(&self) -> usize {
        self.ids.iter().copied().max().unwrap_or(0) as usize
    }

    /// Relabels instances `1..=K` in raster order of first appearance.
    pub fn canonicalize(&self) -> InstanceMap {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let ids = self
            .ids
            .iter()
            .map(|&id| {
                if id == 0 {
                    0
                } else {
                    let next = remap.len() as u32 + 1;
                    *remap.entry(id).or_insert(next)
                }
            })
            .collect();
        InstanceMap {
            width: self.width,
            height: self.height,
            ids,
        }
    }

    /// Binary foreground mask.
    pub fn mask(&self) -> Vec<bool> {
        self.ids.iter().map(|&id| id > 0).collect()
    }
}

impl Validate for InstanceMap {
    fn validate(&self) -> Result<(), Violation> {
        check_shape(self.width, self.height, self.ids.len(), 1)?;
        let present: HashSet<u32> = self.ids.iter().copied().filter(|&id| id > 0).collect();
        let max = present.iter().copied().max().unwrap_or(0);
        if max as usize != present.len() {
            return Err(Violation::new(format!(
                "instance ids have gaps: {} distinct ids but maximum is {max}",
                present.len()
            )));
        }
        Ok(())
    }
}

/// Per-stain optical-density color vectors (the columns of a 3x2 matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct StainModel {
    pub columns: [[f64; 3]; 2],
    pub h_column: usize,
}

impl StainModel {
    pub fn hematoxylin(&self) -> [f64; 3] {
        self.columns[self.h_column]
    }

    pub fn eosin(&self) -> [f64; 3] {
        self.columns[1 - self.h_column]
    }
}

impl Validate for StainModel {
    fn validate(&self) -> Result<(), Violation> {
        if self.h_column > 1 {
            return Err(Violation::new(format!("h_column {} not in {{0, 1}}", self.h_column)));
        }
        for (j, col) in self.columns.iter().enumerate() {
            if col.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Violation::new(format!("stain column {j} has a negative or non-finite entry")));
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Violation::new(format!("stain column {j} has norm {norm}, expected 1")));
            }
        }
        Ok(())
    }
}
