//! Cross-entropy and the small numeric helpers shared across modules.

use crate::error::{Error, Result};

/// `-log softmax(logits)[label]`, evaluated as `(max - z_y) + ln(1 + Σ_{j≠argmax} exp(z_j - max))`.
///
/// Both terms are non-negative, so the result is too.
pub fn cross_entropy_loss(logits: &[f64], label: usize) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::invalid("empty logit vector"));
    }
    if label >= logits.len() {
        return Err(Error::invalid(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::invalid("non-finite logits"));
    }
    let (argmax, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, z)| if z > acc.1 { (i, z) } else { acc });
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, z)| (z - max).exp())
        .sum();
    Ok((max - logits[label]) + rest.ln_1p())
}

/// Mean test loss minus mean train loss.
pub fn generalization_gap(train_losses: &[f64], test_losses: &[f64]) -> Result<f64> {
    if train_losses.is_empty() || test_losses.is_empty() {
        return Err(Error::invalid("generalization gap needs non-empty loss lists"));
    }
    Ok(mean(test_losses) - mean(train_losses))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `ln Σ exp(x)` with max-subtraction. Returns `-inf` when every term is `-inf`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(q / (1 - q))`, infinite at the endpoints.
pub fn logit(q: f64) -> f64 {
    q.ln() - (1.0 - q).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        assert!((cross_entropy_loss(&[0.0, 0.0], 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy_loss(&[0.0; 4], 3).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(cross_entropy_loss(&[0.0; 4], 3).unwrap(), 4f64.ln());
    }

    #[test]
    fn confident_logit() {
        // -ln(e^10 / (e^10 + 1)) = ln(1 + e^-10), 40-digit reference
        let v = cross_entropy_loss(&[10.0, 0.0], 0).unwrap();
        assert!((v - 4.539_889_921_686_464_7e-5).abs() < 1e-18, "{v}");
    }

    #[test]
    fn rejects_bad_logits() {
        assert!(matches!(cross_entropy_loss(&[f64::NAN, 0.0], 0), Err(Error::InvalidInput(_))));
        assert!(matches!(cross_entropy_loss(&[f64::INFINITY, 0.0], 1), Err(Error::InvalidInput(_))));
        assert!(cross_entropy_loss(&[0.0, 0.0], 2).is_err());
        assert!(cross_entropy_loss(&[], 0).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(generalization_gap(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!((generalization_gap(&[0.2, 0.4], &[0.8, 1.2]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(generalization_gap(&[0.5], &[0.5]).unwrap(), 0.0);
        assert!(generalization_gap(&[], &[0.5]).is_err());
        assert!(generalization_gap(&[0.5], &[]).is_err());
    }

    #[test]
    fn lse_handles_all_negative_infinity() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn loss_is_non_negative(logits in prop::collection::vec(-50.0f64..50.0, 1..8), pick in 0usize..8) {
            let label = pick % logits.len();
            prop_assert!(cross_entropy_loss(&logits, label).unwrap() >= 0.0);
        }

        #[test]
        fn loss_is_shift_invariant(
            logits in prop::collection::vec(-20.0f64..20.0, 2..8),
            pick in 0usize..8,
            shift in -100.0f64..100.0,
        ) {
            let label = pick % logits.len();
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            let a = cross_entropy_loss(&logits, label).unwrap();
            let b = cross_entropy_loss(&shifted, label).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }
}
