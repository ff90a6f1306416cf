use crate::error::{Error, Result};
use crate::loss::sigmoid;
use crate::nn::{Activation, Layer, Network};
use crate::records::MembershipRecord;
use crate::rng;

use super::features::FeatureBuilder;

pub const HIDDEN: usize = 20;

/// Fully connected `input → 20 → 20 → 1` with tanh hidden units and a sigmoid output.
#[derive(Clone, Debug, PartialEq)]
pub struct MiNetwork {
    net: Network,
    theta: Vec<f64>,
}

impl MiNetwork {
    pub fn zeros(input_len: usize) -> Result<Self> {
        if input_len == 0 {
            return Err(Error::invalid("MI network needs at least one input"));
        }
        let net = Network::new(
            input_len,
            vec![
                Layer::Dense { inputs: input_len, outputs: HIDDEN },
                Layer::Act(Activation::Tanh),
                Layer::Dense { inputs: HIDDEN, outputs: HIDDEN },
                Layer::Act(Activation::Tanh),
                Layer::Dense { inputs: HIDDEN, outputs: 1 },
            ],
        )?;
        let theta = vec![0.0; net.param_count()];
        Ok(Self { net, theta })
    }

    pub fn with_theta(input_len: usize, theta: Vec<f64>) -> Result<Self> {
        let mut n = Self::zeros(input_len)?;
        if theta.len() != n.theta.len() {
            return Err(Error::invalid(format!("MI network needs {} parameters, got {}", n.theta.len(), theta.len())));
        }
        n.theta = theta;
        Ok(n)
    }

    pub fn input_len(&self) -> usize {
        self.net.input_len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    /// Member probability in (0, 1).
    pub fn output(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_len() {
            return Err(Error::invalid(format!("MI network expects {} features, got {}", self.input_len(), x.len())));
        }
        Ok(sigmoid(self.net.forward(&self.theta, x)[0]))
    }

    /// Mean binary cross-entropy over `(x, y)` pairs and its gradient at `theta`.
    pub fn bce_and_gradient(&self, theta: &[f64], xs: &[Vec<f64>], ys: &[bool]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; theta.len()];
        let mut total = 0.0;
        let n = xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let trace = self.net.forward_trace(theta, x);
            let z = trace.output()[0];
            let y = if y { 1.0 } else { 0.0 };
            // softplus(z) - y z, stable for large |z|
            total += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
            self.net.backward(theta, &trace, &[(sigmoid(z) - y) / n], &mut grad);
        }
        (total / n, grad)
    }

    pub fn bce(&self, theta: &[f64], xs: &[Vec<f64>], ys: &[bool]) -> f64 {
        let n = xs.len() as f64;
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let z = self.net.forward(theta, x)[0];
                let y = if y { 1.0 } else { 0.0 };
                z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
            })
            .sum::<f64>()
            / n
    }
}

/// Per-coordinate affine standardization fitted on attack-train features.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(xs: &[Vec<f64>]) -> Self {
        let dim = xs[0].len();
        let n = xs.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|j| {
                let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiNetworkConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub standardize: bool,
}

impl Default for MiNetworkConfig {
    fn default() -> Self {
        Self { epochs: 2000, learning_rate: 0.1, standardize: true }
    }
}

/// A trained MI network bundled with the feature pipeline it was trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct MiAttack {
    pub builder: FeatureBuilder,
    pub standardizer: Option<Standardizer>,
    pub network: MiNetwork,
}

impl MiAttack {
    pub fn features(&self, record: &MembershipRecord) -> Result<Vec<f64>> {
        let raw = self.builder.build(&record.losses)?.0;
        if raw.len() != self.network.input_len() {
            return Err(Error::invalid(format!(
                "record {} yields {} features, network expects {}",
                record.id,
                raw.len(),
                self.network.input_len()
            )));
        }
        Ok(match &self.standardizer {
            Some(s) => s.apply(&raw),
            None => raw,
        })
    }

    pub fn score(&self, record: &MembershipRecord) -> Result<f64> {
        self.network.output(&self.features(record)?)
    }
}

/// Full-batch gradient descent on binary cross-entropy over `(builder(losses), member)`.
pub fn train_mi_network(
    records: &[MembershipRecord],
    builder: FeatureBuilder,
    config: &MiNetworkConfig,
    seed: u64,
) -> Result<MiAttack> {
    if !records.iter().any(|r| r.member) || !records.iter().any(|r| !r.member) {
        return Err(Error::invalid("MI network training needs members and non-members"));
    }
    let raw = records.iter().map(|r| builder.build(&r.losses).map(|f| f.0)).collect::<Result<Vec<_>>>()?;
    let dim = raw[0].len();
    if raw.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("feature vectors differ in length; loss sets must share k"));
    }
    let standardizer = config.standardize.then(|| Standardizer::fit(&raw));
    let xs: Vec<Vec<f64>> = match &standardizer {
        Some(s) => raw.iter().map(|x| s.apply(x)).collect(),
        None => raw,
    };
    let ys: Vec<bool> = records.iter().map(|r| r.member).collect();

    let mut network = MiNetwork::zeros(dim)?;
    network.theta = network.net.init(&mut rng::stream(seed, "mi-network/init", 0));
    for epoch in 0..config.epochs {
        let (loss, grad) = network.bce_and_gradient(&network.theta, &xs, &ys);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingFailure { epoch });
        }
        for (t, g) in network.theta.iter_mut().zip(&grad) {
            *t -= config.learning_rate * g;
        }
    }
    Ok(MiAttack { builder, standardizer, network })
}

/// Member iff the network output is strictly above 0.5.
pub fn mi_network_attack(record: &MembershipRecord, attack: &MiAttack) -> Result<bool> {
    Ok(attack.score(record)? > 0.5)
}
