use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::records::{fmt_f64, parse_f64, MembershipRecord};

use super::features::FeatureBuilder;
use super::network::{mi_network_attack, MiAttack, MiNetwork, Standardizer};
use super::threshold::{Statistic, ThresholdModel};

/// A calibrated decision rule, as stored in an attack checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackModel {
    Threshold(ThresholdModel),
    Network(MiAttack),
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn split_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

impl AttackModel {
    pub fn decide(&self, record: &MembershipRecord) -> Result<bool> {
        match self {
            AttackModel::Threshold(t) => t.decide(record),
            AttackModel::Network(n) => mi_network_attack(record, n),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# augmi attack model\n");
        match self {
            AttackModel::Threshold(t) => {
                let _ = writeln!(out, "kind = threshold");
                let _ = writeln!(out, "statistic = {}", t.statistic.id());
                let _ = writeln!(out, "tau = {}", fmt_f64(t.tau));
            }
            AttackModel::Network(n) => {
                let _ = writeln!(out, "kind = network");
                let _ = writeln!(out, "builder = {}", n.builder.id());
                let _ = writeln!(out, "inputs = {}", n.network.input_len());
                match &n.standardizer {
                    Some(s) => {
                        let _ = writeln!(out, "standardize = true");
                        let _ = writeln!(out, "feature_mean = {}", join(&s.mean));
                        let _ = writeln!(out, "feature_scale = {}", join(&s.scale));
                    }
                    None => {
                        let _ = writeln!(out, "standardize = false");
                    }
                }
                let _ = writeln!(out, "params = {}", n.network.param_count());
                out.push_str("theta\n");
                for v in n.network.theta() {
                    out.push_str(&fmt_f64(*v));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut theta = Vec::new();
        let mut in_theta = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if in_theta {
                theta.push(parse_f64(line).map_err(|e| parse_err(i + 1, e.to_string()))?);
            } else if line == "theta" {
                in_theta = true;
            } else {
                let (k, v) = line.split_once('=').ok_or_else(|| parse_err(i + 1, format!("expected `key = value`, got `{line}`")))?;
                header.insert(k.trim().into(), v.trim().into());
            }
        }
        let get = |k: &str| header.get(k).map(String::as_str).ok_or_else(|| parse_err(0, format!("attack model is missing `{k}`")));
        match get("kind")? {
            "threshold" => Ok(AttackModel::Threshold(ThresholdModel {
                tau: parse_f64(get("tau")?)?,
                statistic: Statistic::parse(get("statistic")?)?,
            })),
            "network" => {
                let builder = FeatureBuilder::parse(get("builder")?)?;
                let inputs: usize = get("inputs")?.parse().map_err(|_| parse_err(0, "bad `inputs`".into()))?;
                let params: usize = get("params")?.parse().map_err(|_| parse_err(0, "bad `params`".into()))?;
                if theta.len() != params {
                    return Err(parse_err(0, format!("expected {params} parameters, found {}", theta.len())));
                }
                let standardizer = match get("standardize")? {
                    "true" => Some(Standardizer {
                        mean: split_floats(get("feature_mean")?)?,
                        scale: split_floats(get("feature_scale")?)?,
                    }),
                    "false" => None,
                    other => return Err(parse_err(0, format!("bad `standardize` value `{other}`"))),
                };
                if let Some(s) = &standardizer {
                    if s.mean.len() != inputs || s.scale.len() != inputs {
                        return Err(parse_err(0, "standardization constants do not match `inputs`".into()));
                    }
                }
                Ok(AttackModel::Network(MiAttack { builder, standardizer, network: MiNetwork::with_theta(inputs, theta)? }))
            }
            other => Err(parse_err(0, format!("unknown attack kind `{other}`"))),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
