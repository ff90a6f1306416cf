use crate::error::{Error, Result};
use crate::records::LossSet;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

// Summing in sorted order makes every statistic below bit-identical under any
// reordering of the input.
fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean_statistic(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::invalid("mean of an empty loss set"));
    }
    Ok(sorted(losses).iter().sum::<f64>() / losses.len() as f64)
}

/// Power means `v_i = ((1/k) Σ l^i)^{1/i}` for `i = 1..=order`.
pub fn moment_features(losses: &[f64], order: usize) -> Result<FeatureVector> {
    if losses.is_empty() {
        return Err(Error::invalid("moments of an empty loss set"));
    }
    if order == 0 {
        return Err(Error::invalid("moment order must be at least 1"));
    }
    if let Some(v) = losses.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("moments need finite non-negative losses, got {v}")));
    }
    let values = sorted(losses);
    let n = values.len() as f64;
    let features = (1..=order)
        .map(|i| {
            let raw = values.iter().map(|l| l.powi(i as i32)).sum::<f64>() / n;
            if i == 1 {
                raw
            } else {
                raw.powf(1.0 / i as f64)
            }
        })
        .collect();
    Ok(FeatureVector(features))
}

/// The losses in storage order. Not permutation-invariant.
pub fn raw_loss_features(losses: &[f64]) -> Result<FeatureVector> {
    if losses.is_empty() {
        return Err(Error::invalid("raw features of an empty loss set"));
    }
    Ok(FeatureVector(losses.to_vec()))
}

/// Maps a loss set to the MI network's input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureBuilder {
    RawLosses,
    Moments { order: usize },
}

impl FeatureBuilder {
    pub fn build(&self, losses: &LossSet) -> Result<FeatureVector> {
        match *self {
            FeatureBuilder::RawLosses => raw_loss_features(losses.values()),
            FeatureBuilder::Moments { order } => moment_features(losses.values(), order),
        }
    }

    pub fn id(&self) -> String {
        match self {
            FeatureBuilder::RawLosses => "raw-losses".into(),
            FeatureBuilder::Moments { order } => format!("moments:{order}"),
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        match id.split_once(':') {
            None if id == "raw-losses" => Ok(FeatureBuilder::RawLosses),
            Some(("moments", m)) => Ok(FeatureBuilder::Moments {
                order: m.parse().map_err(|_| Error::invalid(format!("bad moment order in `{id}`")))?,
            }),
            _ => Err(Error::invalid(format!("unknown feature builder `{id}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sets() {
        assert_eq!(mean_statistic(&[0.5, 0.5, 0.5]).unwrap(), 0.5);
        let v = moment_features(&[0.7; 5], 6).unwrap();
        for x in &v.0 {
            assert!((x - 0.7).abs() <= 1e-15, "{x}");
        }
    }

    #[test]
    fn small_examples() {
        assert_eq!(mean_statistic(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mean_statistic(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        let v = moment_features(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(v.0[0], 2.0);
        // sqrt(14/3), 40-digit reference
        assert!((v.0[1] - 2.160_246_899_469_286_7).abs() < 1e-15);
    }

    #[test]
    fn first_moment_is_the_mean() {
        let l = [0.3, 0.01, 2.5, 0.7];
        assert_eq!(moment_features(&l, 3).unwrap().0[0], mean_statistic(&l).unwrap());
    }

    #[test]
    fn mean_matches_compensated_sum() {
        use rand::Rng;
        let mut r = crate::rng::stream(42, "mean-oracle", 0);
        let l: Vec<f64> = (0..10).map(|_| r.random_range(0.0..5.0)).collect();
        // Kahan summation as the independent oracle
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for x in &l {
            let y = x - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let oracle = sum / 10.0;
        assert!((mean_statistic(&l).unwrap() - oracle).abs() <= 4.0 * f64::EPSILON * oracle);
    }

    #[test]
    fn errors() {
        assert!(mean_statistic(&[]).is_err());
        assert!(moment_features(&[], 2).is_err());
        assert!(moment_features(&[1.0], 0).is_err());
        assert!(matches!(moment_features(&[0.1, -0.2], 2), Err(Error::InvalidInput(_))));
        assert!(raw_loss_features(&[]).is_err());
    }

    #[test]
    fn raw_features_keep_order() {
        assert_eq!(raw_loss_features(&[0.1, 0.2]).unwrap().0, vec![0.1, 0.2]);
        assert_ne!(raw_loss_features(&[0.2, 0.1]).unwrap().0, vec![0.1, 0.2]);
    }

    #[test]
    fn builder_ids_round_trip() {
        for b in [FeatureBuilder::RawLosses, FeatureBuilder::Moments { order: 10 }] {
            assert_eq!(FeatureBuilder::parse(&b.id()).unwrap(), b);
        }
        assert!(FeatureBuilder::parse("moments:x").is_err());
        assert!(FeatureBuilder::parse("logits").is_err());
    }
}
