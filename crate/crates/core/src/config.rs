//! Experiment configuration: a TOML file of `section.key = value` lines, with
//! command-line `key=value` overrides merged on top.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attacks::{FeatureBuilder, MiNetworkConfig};
use crate::augment::{PoolSpec, PrimitiveSpec};
use crate::data::{gaussian_blobs, load_dataset, shapes, Dataset, Shape, ShapesSpec};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::rng;
use crate::target::{Architecture, AttackTransforms, AugmentSchedule, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Transform-set size used for training and attack; 0 trains without augmentation.
    pub k: usize,
    /// Bernoulli membership prior.
    pub q: f64,
    pub dataset: DatasetConfig,
    pub pool: PoolConfig,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub attack: AttackSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k: 8,
            q: 0.5,
            dataset: DatasetConfig::default(),
            pool: PoolConfig::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            attack: AttackSection::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Shapes,
    Blobs,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub n: usize,
    pub classes: usize,
    /// Grid side for `shapes`.
    pub side: usize,
    pub noise: f64,
    pub label_noise: f64,
    /// Feature dimension for `blobs`.
    pub dim: usize,
    pub spread: f64,
    /// Sample file for `file` (JSON lines).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let s = ShapesSpec::default();
        Self {
            kind: DatasetKind::Shapes,
            n: s.n,
            classes: s.classes,
            side: s.side,
            noise: s.noise,
            label_noise: s.label_noise,
            dim: 10,
            spread: 1.0,
            path: None,
        }
    }
}

/// Transform pool. When no key is set the pool defaults to the standard one for
/// the data shape; otherwise exactly the set keys with nonzero values are used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translate: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crop: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutout: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

impl PoolConfig {
    fn is_unset(&self) -> bool {
        *self == PoolConfig::default()
    }

    pub fn from_spec(spec: &PoolSpec) -> Self {
        let mut c = PoolConfig::default();
        for p in &spec.primitives {
            match *p {
                PrimitiveSpec::Flip { prob } => c.flip = Some(prob),
                PrimitiveSpec::Translate { max_shift } => c.translate = Some(max_shift),
                PrimitiveSpec::Rotate { max_degrees } => c.rotate = Some(max_degrees),
                PrimitiveSpec::CropPad { max_offset } => c.crop = Some(max_offset),
                PrimitiveSpec::Shear { max_factor } => c.shear = Some(max_factor),
                PrimitiveSpec::Cutout { max_side } => c.cutout = Some(max_side),
                PrimitiveSpec::Noise { sigma } => c.noise = Some(sigma),
            }
        }
        c
    }

    pub fn to_spec(&self, shape: Shape) -> Result<PoolSpec> {
        if self.is_unset() {
            return Ok(PoolSpec::default_for(shape));
        }
        let mut primitives = Vec::new();
        if let Some(prob) = self.flip.filter(|&v| v != 0.0) {
            primitives.push(PrimitiveSpec::Flip { prob });
        }
        if let Some(max_shift) = self.translate.filter(|&v| v != 0) {
            primitives.push(PrimitiveSpec::Translate { max_shift });
        }
        if let Some(max_degrees) = self.rotate.filter(|&v| v != 0.0) {
            primitives.push(PrimitiveSpec::Rotate { max_degrees });
        }
        if let Some(max_offset) = self.crop.filter(|&v| v != 0) {
            primitives.push(PrimitiveSpec::CropPad { max_offset });
        }
        if let Some(max_factor) = self.shear.filter(|&v| v != 0.0) {
            primitives.push(PrimitiveSpec::Shear { max_factor });
        }
        if let Some(max_side) = self.cutout.filter(|&v| v != 0) {
            primitives.push(PrimitiveSpec::Cutout { max_side });
        }
        if let Some(sigma) = self.noise.filter(|&v| v != 0.0) {
            primitives.push(PrimitiveSpec::Noise { sigma });
        }
        let spec = PoolSpec { primitives };
        spec.validate()?;
        if matches!(shape, Shape::Vector(_)) && spec.primitives.iter().any(|p| !matches!(p, PrimitiveSpec::Noise { .. })) {
            return Err(Error::config("vector data only supports the noise primitive"));
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Softmax,
    Mlp,
    Convnet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub arch: ArchKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { arch: ArchKind::Mlp, hidden: vec![64], activation: Activation::Tanh, channels: 8 }
    }
}

impl ModelConfig {
    pub fn architecture(&self) -> Architecture {
        match self.arch {
            ArchKind::Softmax => Architecture::SoftmaxRegression,
            ArchKind::Mlp => Architecture::Mlp { hidden: self.hidden.clone(), activation: self.activation },
            ArchKind::Convnet => Architecture::TinyConvNet { channels: self.channels, activation: self.activation },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    /// When nonzero, epochs are rescaled to `epochs * step_budget_k / max(k, 1)`
    /// so every k gets the same number of instance visits as `k = step_budget_k`.
    pub step_budget_k: usize,
    pub lr: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub batch: usize,
    pub momentum: f64,
    pub schedule: AugmentSchedule,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 60,
            step_budget_k: 8,
            lr: 0.02,
            decay_every: 0,
            decay_factor: 0.1,
            batch: 32,
            momentum: 0.9,
            schedule: AugmentSchedule::Fixed,
        }
    }
}

impl TrainSection {
    pub fn effective_epochs(&self, k: usize) -> usize {
        match self.step_budget_k {
            0 => self.epochs,
            budget => ((self.epochs * budget) as f64 / k.max(1) as f64).round() as usize,
        }
    }

    pub fn to_train_config(&self, k: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.effective_epochs(k),
            learning_rate: self.lr,
            decay_every: self.decay_every,
            decay_factor: self.decay_factor,
            batch_size: self.batch,
            momentum: self.momentum,
            schedule: self.schedule,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformSource {
    Resample,
    Reuse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    /// Moment order for M_moments.
    pub m: usize,
    pub epochs: usize,
    pub lr: f64,
    pub standardize: bool,
    pub transforms: TransformSource,
    /// Loss-set size queried when the target was trained with `k = 0`.
    pub k_when_unaugmented: usize,
    /// Attack-train records per class (members and non-members).
    pub train_per_class: usize,
    /// Histogram bins for overlap estimates.
    pub bins: usize,
}

impl Default for AttackSection {
    fn default() -> Self {
        let n = MiNetworkConfig::default();
        Self {
            m: 10,
            epochs: n.epochs,
            lr: n.learning_rate,
            standardize: n.standardize,
            transforms: TransformSource::Reuse,
            k_when_unaugmented: 10,
            train_per_class: 200,
            bins: 50,
        }
    }
}

impl AttackSection {
    pub fn network_config(&self) -> MiNetworkConfig {
        MiNetworkConfig { epochs: self.epochs, learning_rate: self.lr, standardize: self.standardize }
    }

    pub fn moments(&self) -> FeatureBuilder {
        FeatureBuilder::Moments { order: self.m }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text` and applies `key=value` overrides (dotted keys allowed).
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.k > 256 {
            return Err(Error::config("k above 256 is not supported"));
        }
        if self.attack.m == 0 {
            return Err(Error::config("attack.m must be >= 1"));
        }
        if self.attack.k_when_unaugmented == 0 {
            return Err(Error::config("attack.k_when_unaugmented must be >= 1"));
        }
        if self.attack.train_per_class == 0 {
            return Err(Error::config("attack.train_per_class must be >= 1"));
        }
        if self.attack.bins == 0 {
            return Err(Error::config("attack.bins must be >= 1"));
        }
        if !(self.attack.lr > 0.0 && self.attack.lr.is_finite()) {
            return Err(Error::config("attack.lr must be positive"));
        }
        if self.dataset.kind == DatasetKind::File && self.dataset.path.is_none() {
            return Err(Error::config("dataset.kind = \"file\" needs dataset.path"));
        }
        Ok(())
    }

    /// Canonical TOML: every key, fixed order. Fingerprints and manifests use this.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_dataset(&self) -> Result<Dataset> {
        let d = &self.dataset;
        let seed = rng::derive_seed(self.seed, "dataset", 0);
        match d.kind {
            DatasetKind::Shapes => shapes(
                seed,
                &ShapesSpec { n: d.n, side: d.side, classes: d.classes, noise: d.noise, label_noise: d.label_noise },
            ),
            DatasetKind::Blobs => gaussian_blobs(seed, d.n, d.dim, d.classes, d.spread),
            DatasetKind::File => load_dataset(d.path.as_deref().expect("validated")),
        }
    }

    pub fn pool_spec(&self, shape: Shape) -> Result<PoolSpec> {
        self.pool.to_spec(shape)
    }

    /// Effective loss-set size for attacks.
    pub fn attack_k(&self) -> usize {
        if self.k == 0 {
            self.attack.k_when_unaugmented
        } else {
            self.k
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        self.train.to_train_config(self.k)
    }

    pub fn train_seed(&self) -> u64 {
        rng::derive_seed(self.seed, "train", 0)
    }

    pub fn attack_transforms(&self) -> AttackTransforms {
        match self.attack.transforms {
            TransformSource::Resample => AttackTransforms::Resample { seed: rng::derive_seed(self.seed, "attack", 0) },
            TransformSource::Reuse => AttackTransforms::Reuse {
                train_seed: self.train_seed(),
                schedule: self.train.schedule,
                epochs: self.train.effective_epochs(self.k),
            },
        }
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{assignment}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::config("empty override key"))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn dotted_keys_and_comments() {
        let c = ExperimentConfig::parse("# desk run\nseed = 4\nk = 2\ntrain.epochs = 5\nmodel.arch = \"convnet\"\n").unwrap();
        assert_eq!((c.seed, c.k, c.train.epochs, c.model.arch), (4, 2, 5, ArchKind::Convnet));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::parse("sede = 1"), Err(Error::InvalidConfig(_))));
        assert!(ExperimentConfig::parse("train.epoch = 1").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let o = vec!["k=4".to_string(), "train.schedule=per-epoch".to_string(), "attack.standardize=false".to_string()];
        let c = ExperimentConfig::parse_with_overrides("k = 2", &o).unwrap();
        assert_eq!(c.k, 4);
        assert_eq!(c.train.schedule, AugmentSchedule::PerEpoch);
        assert!(!c.attack.standardize);
        assert!(ExperimentConfig::parse_with_overrides("", &["k".into()]).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::parse("q = 1.0").is_err());
        assert!(ExperimentConfig::parse("dataset.kind = \"file\"").is_err());
    }

    #[test]
    fn step_budget_rescales_epochs() {
        let t = TrainSection::default();
        assert_eq!(t.effective_epochs(8), 60);
        assert_eq!(t.effective_epochs(1), 480);
        assert_eq!(t.effective_epochs(0), 480);
        assert_eq!(t.effective_epochs(16), 30);
        let plain = TrainSection { step_budget_k: 0, ..t };
        assert_eq!(plain.effective_epochs(1), 60);
    }

    #[test]
    fn canonical_round_trips() {
        let mut c = ExperimentConfig::default();
        c.pool.translate = Some(2);
        c.dataset.path = Some("x.jsonl".into());
        let back = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
        assert_ne!(ExperimentConfig::default().fingerprint(), c.fingerprint());
    }

    #[test]
    fn pool_defaults_follow_shape() {
        let c = ExperimentConfig::default();
        assert_eq!(c.pool_spec(Shape::Grid { rows: 8, cols: 8 }).unwrap(), PoolSpec::default_image(8));
        let custom = ExperimentConfig::parse("pool.flip = 1.0").unwrap();
        assert_eq!(custom.pool_spec(Shape::Grid { rows: 8, cols: 8 }).unwrap().primitives, vec![PrimitiveSpec::Flip { prob: 1.0 }]);
        assert!(custom.pool_spec(Shape::Vector(4)).is_err());
        let round = PoolConfig::from_spec(&PoolSpec::default_image(8));
        assert_eq!(round.to_spec(Shape::Grid { rows: 8, cols: 8 }).unwrap(), PoolSpec::default_image(8));
    }
}
