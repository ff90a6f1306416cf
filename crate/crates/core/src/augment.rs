//! Transformation pool, per-sample transform sets, and their application to samples.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rand::SeedableRng;

use crate::data::{Sample, Shape};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// One primitive augmentation with its parameters already drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    HorizontalFlip,
    /// Shift right by `dx` columns and down by `dy` rows.
    Translate { dx: i32, dy: i32 },
    /// Counter-clockwise rotation about the grid center, nearest-neighbor sampled.
    Rotate { degrees: f64 },
    /// Zero-pad then crop back to size; the crop window ends up shifted by `(dx, dy)`.
    CropPad { dx: i32, dy: i32 },
    /// Horizontal shear about the center row.
    Shear { factor: f64 },
    /// Zero a `side`×`side` square. The center is given as fractions of the
    /// grid height and width, each in `[0, 1)`.
    Cutout { center: (f64, f64), side: usize },
    /// Gaussian noise with a fixed seed, so application stays deterministic.
    AdditiveNoise { sigma: f64, seed: u64 },
}

/// A composed pipeline; primitives are applied in order. Empty is the identity.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Pipeline(pub Vec<Transform>);

impl Pipeline {
    pub fn identity() -> Self {
        Self(Vec::new())
    }
}

/// The `k` pipelines that define `T(d)` for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSet(Vec<Pipeline>);

impl TransformSet {
    pub fn new(pipelines: Vec<Pipeline>) -> Result<Self> {
        if pipelines.is_empty() {
            return Err(Error::invalid("a transform set needs at least one pipeline"));
        }
        Ok(Self(pipelines))
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(vec![Pipeline::identity(); k])
    }

    pub fn pipelines(&self) -> &[Pipeline] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An enabled primitive and the range its parameters are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimitiveSpec {
    Flip { prob: f64 },
    Translate { max_shift: u32 },
    Rotate { max_degrees: f64 },
    CropPad { max_offset: u32 },
    Shear { max_factor: f64 },
    Cutout { max_side: u32 },
    Noise { sigma: f64 },
}

impl PrimitiveSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PrimitiveSpec::Flip { .. } => "flip",
            PrimitiveSpec::Translate { .. } => "translate",
            PrimitiveSpec::Rotate { .. } => "rotate",
            PrimitiveSpec::CropPad { .. } => "crop",
            PrimitiveSpec::Shear { .. } => "shear",
            PrimitiveSpec::Cutout { .. } => "cutout",
            PrimitiveSpec::Noise { .. } => "noise",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PrimitiveSpec::Flip { prob } => (0.0..=1.0).contains(&prob),
            PrimitiveSpec::Rotate { max_degrees } => max_degrees.is_finite() && max_degrees >= 0.0,
            PrimitiveSpec::Shear { max_factor } => max_factor.is_finite() && max_factor >= 0.0,
            PrimitiveSpec::Cutout { max_side } => max_side >= 1,
            PrimitiveSpec::Noise { sigma } => sigma.is_finite() && sigma >= 0.0,
            PrimitiveSpec::Translate { .. } | PrimitiveSpec::CropPad { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("bad parameter range for `{}`: {self:?}", self.kind())))
        }
    }
}

/// The transformation pool: which primitives are enabled and their ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolSpec {
    pub primitives: Vec<PrimitiveSpec>,
}

impl PoolSpec {
    /// Flip, translate, rotate, crop, shear, cutout. Offsets are an eighth of the
    /// grid side and the cutout side a quarter.
    pub fn default_image(side: usize) -> Self {
        let eighth = ((side / 8) as u32).max(1);
        let quarter = ((side / 4) as u32).max(1);
        Self {
            primitives: vec![
                PrimitiveSpec::Flip { prob: 0.5 },
                PrimitiveSpec::Translate { max_shift: eighth },
                PrimitiveSpec::Rotate { max_degrees: 15.0 },
                PrimitiveSpec::CropPad { max_offset: eighth },
                PrimitiveSpec::Shear { max_factor: 0.2 },
                PrimitiveSpec::Cutout { max_side: quarter },
            ],
        }
    }

    /// Additive noise only; for plain feature vectors.
    pub fn default_vector() -> Self {
        Self { primitives: vec![PrimitiveSpec::Noise { sigma: 0.05 }] }
    }

    pub fn default_for(shape: Shape) -> Self {
        match shape {
            Shape::Grid { rows, cols } => Self::default_image(rows.min(cols)),
            Shape::Vector(_) => Self::default_vector(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::config("transform pool is empty"));
        }
        self.primitives.iter().try_for_each(PrimitiveSpec::validate)
    }
}

fn signed(rng: &mut StreamRng, max: u32) -> i32 {
    let m = max as i32;
    rng.random_range(-m..=m)
}

fn symmetric(rng: &mut StreamRng, max: f64) -> f64 {
    if max == 0.0 {
        0.0
    } else {
        rng.random_range(-max..=max)
    }
}

/// Draws `k` pipelines. Each pipeline visits the enabled primitives in a uniformly
/// random order and draws every parameter uniformly from its range; a flip is kept
/// only when its coin comes up.
pub fn sample_transform_set(rng: &mut StreamRng, k: usize, pool: &PoolSpec) -> Result<TransformSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    pool.validate()?;
    let mut pipelines = Vec::with_capacity(k);
    for _ in 0..k {
        let mut order: Vec<usize> = (0..pool.primitives.len()).collect();
        order.shuffle(rng);
        let mut steps = Vec::with_capacity(order.len());
        for idx in order {
            let step = match pool.primitives[idx] {
                PrimitiveSpec::Flip { prob } => {
                    let coin = rng.random::<f64>() < prob;
                    if !coin {
                        continue;
                    }
                    Transform::HorizontalFlip
                }
                PrimitiveSpec::Translate { max_shift } => Transform::Translate {
                    dx: signed(rng, max_shift),
                    dy: signed(rng, max_shift),
                },
                PrimitiveSpec::Rotate { max_degrees } => Transform::Rotate { degrees: symmetric(rng, max_degrees) },
                PrimitiveSpec::CropPad { max_offset } => Transform::CropPad {
                    dx: signed(rng, max_offset),
                    dy: signed(rng, max_offset),
                },
                PrimitiveSpec::Shear { max_factor } => Transform::Shear { factor: symmetric(rng, max_factor) },
                PrimitiveSpec::Cutout { max_side } => Transform::Cutout {
                    center: (rng.random::<f64>(), rng.random::<f64>()),
                    side: rng.random_range(1..=max_side as usize),
                },
                PrimitiveSpec::Noise { sigma } => Transform::AdditiveNoise { sigma, seed: rng.random() },
            };
            steps.push(step);
        }
        pipelines.push(Pipeline(steps));
    }
    TransformSet::new(pipelines)
}

fn grid_dims(sample: &Sample, what: &str) -> Result<(usize, usize)> {
    match sample.shape {
        Shape::Grid { rows, cols } => Ok((rows, cols)),
        Shape::Vector(_) => Err(Error::invalid(format!("{what} needs a 2-D grid, sample {} is a vector", sample.id))),
    }
}

/// Builds an output grid by pulling each pixel from a source coordinate (or 0 when out of frame).
fn remap(src: &[f64], rows: usize, cols: usize, f: impl Fn(usize, usize) -> Option<(i64, i64)>) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if let Some((sr, sc)) = f(r, c) {
                if sr >= 0 && sc >= 0 && (sr as usize) < rows && (sc as usize) < cols {
                    out[r * cols + c] = src[sr as usize * cols + sc as usize];
                }
            }
        }
    }
    out
}

fn snap(x: f64) -> f64 {
    for target in [-1.0, 0.0, 1.0] {
        if (x - target).abs() < 1e-12 {
            return target;
        }
    }
    x
}

fn apply_one(t: &Transform, sample: &Sample, features: &[f64]) -> Result<Vec<f64>> {
    let shift = |dx: i32, dy: i32| -> Result<Vec<f64>> {
        let (rows, cols) = grid_dims(sample, "translate")?;
        Ok(remap(features, rows, cols, |r, c| Some((r as i64 - dy as i64, c as i64 - dx as i64))))
    };
    let mut out = match *t {
        Transform::HorizontalFlip => {
            let (rows, cols) = grid_dims(sample, "flip")?;
            remap(features, rows, cols, |r, c| Some((r as i64, (cols - 1 - c) as i64)))
        }
        Transform::Translate { dx, dy } | Transform::CropPad { dx, dy } => shift(dx, dy)?,
        Transform::Rotate { degrees } => {
            let (rows, cols) = grid_dims(sample, "rotate")?;
            let (sin, cos) = degrees.to_radians().sin_cos();
            let (sin, cos) = (snap(sin), snap(cos));
            let cy = (rows as f64 - 1.0) / 2.0;
            let cx = (cols as f64 - 1.0) / 2.0;
            remap(features, rows, cols, |r, c| {
                // y axis points up; invert the rotation to find the source pixel
                let x = c as f64 - cx;
                let y = cy - r as f64;
                let sx = x * cos + y * sin;
                let sy = -x * sin + y * cos;
                Some(((cy - sy).round() as i64, (cx + sx).round() as i64))
            })
        }
        Transform::Shear { factor } => {
            let (rows, cols) = grid_dims(sample, "shear")?;
            let cy = (rows as f64 - 1.0) / 2.0;
            remap(features, rows, cols, |r, c| {
                Some((r as i64, (c as f64 + factor * (r as f64 - cy)).round() as i64))
            })
        }
        Transform::Cutout { center, side } => {
            let (rows, cols) = grid_dims(sample, "cutout")?;
            let row = ((center.0 * rows as f64) as usize).min(rows - 1);
            let col = ((center.1 * cols as f64) as usize).min(cols - 1);
            let mut out = features.to_vec();
            let top = row.saturating_sub(side / 2);
            let left = col.saturating_sub(side / 2);
            for r in top..(top + side).min(rows) {
                for c in left..(left + side).min(cols) {
                    out[r * cols + c] = 0.0;
                }
            }
            out
        }
        Transform::AdditiveNoise { sigma, seed } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            features.iter().map(|v| v + normal.sample(&mut rng)).collect()
        }
    };
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// `t(d)`: same label and shape, features transformed and clamped to `[0,1]`.
pub fn apply(pipeline: &Pipeline, sample: &Sample) -> Result<Sample> {
    if sample.features.len() != sample.shape.len() {
        return Err(Error::invalid(format!("sample {} does not match its shape", sample.id)));
    }
    let mut features = sample.features.clone();
    for t in &pipeline.0 {
        features = apply_one(t, sample, &features)?;
    }
    Ok(Sample { id: sample.id, shape: sample.shape, features, label: sample.label })
}

/// `T(d)`: one augmented instance per pipeline, in set order.
pub fn augment_sample(sample: &Sample, set: &TransformSet) -> Result<Vec<Sample>> {
    set.pipelines().iter().map(|p| apply(p, sample)).collect()
}
