//! Samples, shapes, and the seeded desk-scale dataset generators.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Feature layout. Grids are stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Vector(usize),
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Vector(n) => write!(f, "{n}"),
            Shape::Grid { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad shape `{s}`"));
        match s.split_once('x') {
            Some((r, c)) => Ok(Shape::Grid {
                rows: r.trim().parse().map_err(|_| bad())?,
                cols: c.trim().parse().map_err(|_| bad())?,
            }),
            None => Ok(Shape::Vector(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// A labelled example `d = (x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub shape: Shape,
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(id: u64, shape: Shape, features: Vec<f64>, label: usize) -> Result<Self> {
        if features.len() != shape.len() {
            return Err(Error::invalid(format!(
                "sample {id}: {} features for shape {shape}",
                features.len()
            )));
        }
        Ok(Self { id, shape, features, label })
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub shape: Shape,
    pub classes: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, shape: Shape, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("a dataset needs at least two classes"));
        }
        for s in &samples {
            if s.shape != shape {
                return Err(Error::invalid(format!("sample {} has shape {}, expected {shape}", s.id, s.shape)));
            }
            if s.label >= classes {
                return Err(Error::invalid(format!("sample {} has label {} >= {classes}", s.id, s.label)));
            }
        }
        Ok(Self { samples, shape, classes })
    }
}

/// Isotropic Gaussian blobs around random centers in `[0,1]^dim`, clamped to `[0,1]`.
pub fn gaussian_blobs(seed: u64, n: usize, dim: usize, classes: usize, spread: f64) -> Result<Dataset> {
    if dim == 0 || !(spread >= 0.0) {
        return Err(Error::invalid("blobs need dim >= 1 and spread >= 0"));
    }
    let mut centers_rng = rng::stream(seed, "blobs/centers", 0);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| centers_rng.random_range(0.2..0.8)).collect())
        .collect();
    let noise = Normal::new(0.0, spread).map_err(|e| Error::invalid(e.to_string()))?;
    let samples = (0..n as u64)
        .map(|id| {
            let mut r = rng::stream(seed, "blobs/sample", id);
            let label = r.random_range(0..classes);
            let features = centers[label]
                .iter()
                .map(|c| (c + noise.sample(&mut r)).clamp(0.0, 1.0))
                .collect();
            Sample { id, shape: Shape::Vector(dim), features, label }
        })
        .collect();
    Dataset::new(samples, Shape::Vector(dim), classes)
}

/// Parameters for the synthetic shape-classification grids.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapesSpec {
    pub n: usize,
    pub side: usize,
    pub classes: usize,
    /// Standard deviation of per-pixel Gaussian noise.
    pub noise: f64,
    /// Probability of replacing a label with a uniformly random class.
    pub label_noise: f64,
}

impl Default for ShapesSpec {
    fn default() -> Self {
        Self { n: 2000, side: 8, classes: 4, noise: 0.3, label_noise: 0.0 }
    }
}

const SHAPE_KINDS: usize = 8;

/// Grayscale grids, one glyph per class (square, plus, bars, diagonal, ring, L, X),
/// jittered in position and intensity and covered in pixel noise.
pub fn shapes(seed: u64, spec: &ShapesSpec) -> Result<Dataset> {
    if spec.side < 4 {
        return Err(Error::invalid("shape grids need side >= 4"));
    }
    if spec.classes < 2 || spec.classes > SHAPE_KINDS {
        return Err(Error::invalid(format!("shapes supports 2..={SHAPE_KINDS} classes")));
    }
    if !(0.0..=1.0).contains(&spec.label_noise) || !(spec.noise >= 0.0) {
        return Err(Error::invalid("label_noise must be in [0,1] and noise >= 0"));
    }
    let side = spec.side;
    let shape = Shape::Grid { rows: side, cols: side };
    let pixel_noise = Normal::new(0.0, spec.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let samples = (0..spec.n as u64)
        .map(|id| {
            let mut r = rng::stream(seed, "shapes/sample", id);
            let class = r.random_range(0..spec.classes);
            let extent = side / 2;
            let jitter = side - extent;
            let top = r.random_range(0..=jitter);
            let left = r.random_range(0..=jitter);
            let intensity = r.random_range(0.6..1.0);
            let mut features = vec![0.0; side * side];
            for dr in 0..extent {
                for dc in 0..extent {
                    if glyph(class, dr, dc, extent) {
                        features[(top + dr) * side + left + dc] = intensity;
                    }
                }
            }
            for v in &mut features {
                *v = (*v + pixel_noise.sample(&mut r)).clamp(0.0, 1.0);
            }
            let label = if r.random::<f64>() < spec.label_noise {
                r.random_range(0..spec.classes)
            } else {
                class
            };
            Sample { id, shape, features, label }
        })
        .collect();
    Dataset::new(samples, shape, spec.classes)
}

fn glyph(class: usize, r: usize, c: usize, n: usize) -> bool {
    let last = n - 1;
    let mid = n / 2;
    match class {
        0 => true,
        1 => r == mid || c == mid,
        2 => r == mid || r + 1 == mid,
        3 => r == c,
        4 => r == 0 || c == 0 || r == last || c == last,
        5 => c == mid || c + 1 == mid,
        6 => c == 0 || r == last,
        _ => r == c || r + c == last,
    }
}

/// Reads samples stored one JSON object per line: `{"id", "shape", "features", "label"}`.
pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        let s = Sample::new(s.id, s.shape, s.features, s.label).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_samples(samples: &[Sample], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut w, s).map_err(|e| Error::invalid(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads an external grid dataset; class count is inferred from the largest label.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let samples = read_samples(path)?;
    let first = samples.first().ok_or_else(|| Error::invalid(format!("{} holds no samples", path.display())))?;
    let shape = first.shape;
    let classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    Dataset::new(samples, shape, classes.max(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_are_deterministic_and_in_range() {
        let spec = ShapesSpec { n: 50, ..Default::default() };
        let a = shapes(3, &spec).unwrap();
        let b = shapes(3, &spec).unwrap();
        assert_eq!(a.samples, b.samples);
        for s in &a.samples {
            assert_eq!(s.features.len(), 64);
            assert!(s.features.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.label < 4);
        }
        let c = shapes(4, &spec).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn blobs_respect_dimensions() {
        let d = gaussian_blobs(1, 30, 5, 3, 0.1).unwrap();
        assert_eq!(d.samples.len(), 30);
        assert!(d.samples.iter().all(|s| s.features.len() == 5 && s.label < 3));
    }

    #[test]
    fn dataset_rejects_bad_labels() {
        let s = Sample::new(0, Shape::Vector(1), vec![0.5], 3).unwrap();
        assert!(Dataset::new(vec![s], Shape::Vector(1), 2).is_err());
        assert!(Sample::new(0, Shape::Vector(2), vec![0.5], 0).is_err());
    }

    #[test]
    fn shape_parses() {
        assert_eq!("8x8".parse::<Shape>().unwrap(), Shape::Grid { rows: 8, cols: 8 });
        assert_eq!("10".parse::<Shape>().unwrap(), Shape::Vector(10));
        assert!("ax3".parse::<Shape>().is_err());
    }

    #[test]
    fn samples_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let d = shapes(9, &ShapesSpec { n: 5, ..Default::default() }).unwrap();
        write_samples(&d.samples, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.samples, d.samples);
    }
}
