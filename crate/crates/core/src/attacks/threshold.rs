use crate::error::{Error, Result};
use crate::records::MembershipRecord;

use super::features::mean_statistic;

/// Which single loss a single-loss threshold looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossSelector {
    /// Element `j` of the stored loss set.
    Element(usize),
    /// The untransformed sample's loss.
    Original,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    SingleLoss(LossSelector),
    MeanLoss,
}

impl Statistic {
    pub fn value(&self, record: &MembershipRecord) -> Result<f64> {
        match *self {
            Statistic::MeanLoss => mean_statistic(record.losses.values()),
            Statistic::SingleLoss(LossSelector::Element(j)) => record.losses.values().get(j).copied().ok_or_else(|| {
                Error::invalid(format!("record {} has {} losses, element {j} requested", record.id, record.losses.len()))
            }),
            Statistic::SingleLoss(LossSelector::Original) => record
                .original_loss
                .ok_or_else(|| Error::invalid(format!("record {} carries no original-sample loss", record.id))),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Statistic::MeanLoss => "mean".into(),
            Statistic::SingleLoss(LossSelector::Original) => "original".into(),
            Statistic::SingleLoss(LossSelector::Element(j)) => format!("element:{j}"),
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "mean" => Ok(Statistic::MeanLoss),
            "original" => Ok(Statistic::SingleLoss(LossSelector::Original)),
            _ => match id.split_once(':') {
                Some(("element", j)) => Ok(Statistic::SingleLoss(LossSelector::Element(
                    j.parse().map_err(|_| Error::invalid(format!("bad element index in `{id}`")))?,
                ))),
                _ => Err(Error::invalid(format!("unknown statistic `{id}`"))),
            },
        }
    }
}

/// Decides "member" exactly when `statistic < tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdModel {
    pub tau: f64,
    pub statistic: Statistic,
}

impl ThresholdModel {
    pub fn decide(&self, record: &MembershipRecord) -> Result<bool> {
        Ok(self.statistic.value(record)? < self.tau)
    }
}

/// Mean of true-positive and true-negative rates.
pub fn balanced_accuracy(tp: usize, tn: usize, fp: usize, fn_: usize) -> f64 {
    let tpr = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let tnr = if tn + fp == 0 { 0.0 } else { tn as f64 / (tn + fp) as f64 };
    0.5 * (tpr + tnr)
}

/// Picks the threshold maximizing balanced accuracy on `records`.
///
/// Candidates are `-inf`, the midpoints between consecutive distinct statistic
/// values, and `+inf`. Ties go to the smallest candidate.
pub fn calibrate_threshold(records: &[MembershipRecord], statistic: Statistic) -> Result<ThresholdModel> {
    let mut scored = records
        .iter()
        .map(|r| Ok((statistic.value(r)?, r.member)))
        .collect::<Result<Vec<(f64, bool)>>>()?;
    let positives = scored.iter().filter(|(_, m)| *m).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Calibration("calibration records need both members and non-members".into()));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let score = |tp: usize, fp: usize| balanced_accuracy(tp, negatives - fp, fp, positives - tp);
    let mut best_tau = f64::NEG_INFINITY;
    let mut best = score(0, 0);
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < scored.len() {
        let v = scored[i].0;
        while i < scored.len() && scored[i].0 == v {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // everything <= v is now classified as member
        let tau = match scored.get(i) {
            Some(&(next, _)) => {
                let mid = (v + next) / 2.0;
                if mid > v {
                    mid
                } else {
                    next
                }
            }
            None => f64::INFINITY,
        };
        let s = score(tp, fp);
        if s > best {
            best = s;
            best_tau = tau;
        }
    }
    Ok(ThresholdModel { tau: best_tau, statistic })
}

/// Single-loss baseline: member iff the selected loss is below `tau`.
pub fn mloss_attack(record: &MembershipRecord, model: &ThresholdModel) -> Result<bool> {
    match model.statistic {
        Statistic::SingleLoss(_) => model.decide(record),
        Statistic::MeanLoss => Err(Error::invalid("mloss_attack needs a single-loss threshold")),
    }
}

/// Member iff the mean of the loss set is below `tau`.
pub fn mmean_attack(record: &MembershipRecord, model: &ThresholdModel) -> Result<bool> {
    match model.statistic {
        Statistic::MeanLoss => model.decide(record),
        Statistic::SingleLoss(_) => Err(Error::invalid("mmean_attack needs a mean-loss threshold")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{LossSet, Split};
    use rand::Rng;

    fn rec(id: u64, member: bool, losses: Vec<f64>) -> MembershipRecord {
        MembershipRecord { id, member, split: Split::AttackTrain, losses: LossSet::new(losses).unwrap(), original_loss: None }
    }

    #[test]
    fn separable_gives_midpoint() {
        let mut recs: Vec<_> = (0..5).map(|i| rec(i, true, vec![0.1])).collect();
        recs.extend((5..10).map(|i| rec(i, false, vec![0.9])));
        let m = calibrate_threshold(&recs, Statistic::MeanLoss).unwrap();
        assert_eq!(m.tau, 0.5);
        assert!(recs.iter().all(|r| m.decide(r).unwrap() == r.member));
    }

    #[test]
    fn single_class_fails() {
        let recs: Vec<_> = (0..5).map(|i| rec(i, true, vec![0.1])).collect();
        assert!(matches!(calibrate_threshold(&recs, Statistic::MeanLoss), Err(Error::Calibration(_))));
    }

    #[test]
    fn boundary_is_strict() {
        let m = ThresholdModel { tau: 0.5, statistic: Statistic::SingleLoss(LossSelector::Element(0)) };
        assert!(mloss_attack(&rec(0, true, vec![0.01]), &m).unwrap());
        assert!(!mloss_attack(&rec(0, true, vec![0.5]), &m).unwrap());
        let mean = ThresholdModel { tau: 0.5, statistic: Statistic::MeanLoss };
        assert!(mmean_attack(&rec(0, true, vec![0.2, 0.4, 0.6]), &mean).unwrap());
        assert!(mloss_attack(&rec(0, true, vec![0.2]), &mean).is_err());
        assert!(mmean_attack(&rec(0, true, vec![0.2]), &m).is_err());
    }

    #[test]
    fn k1_mean_matches_single_loss() {
        let single = ThresholdModel { tau: 0.3, statistic: Statistic::SingleLoss(LossSelector::Element(0)) };
        let mean = ThresholdModel { tau: 0.3, ..single };
        let mean = ThresholdModel { statistic: Statistic::MeanLoss, ..mean };
        for v in [0.0, 0.1, 0.3, 0.31, 2.0] {
            let r = rec(0, false, vec![v]);
            assert_eq!(mloss_attack(&r, &single).unwrap(), mmean_attack(&r, &mean).unwrap());
        }
    }

    #[test]
    fn missing_side_channel() {
        let m = ThresholdModel { tau: 0.5, statistic: Statistic::SingleLoss(LossSelector::Original) };
        assert!(matches!(mloss_attack(&rec(0, true, vec![0.1]), &m), Err(Error::InvalidInput(_))));
    }

    fn brute_force(recs: &[MembershipRecord]) -> (f64, f64) {
        let mut vals: Vec<f64> = recs.iter().map(|r| r.losses.values()[0]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let mut cands = vec![f64::NEG_INFINITY];
        cands.extend(vals.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        cands.push(f64::INFINITY);
        let mut best = (f64::NEG_INFINITY, -1.0);
        for tau in cands {
            let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
            for r in recs {
                match (r.losses.values()[0] < tau, r.member) {
                    (true, true) => tp += 1,
                    (false, false) => tn += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                }
            }
            let ba = balanced_accuracy(tp, tn, fp, fn_);
            if ba > best.1 {
                best = (tau, ba);
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        for seed in 0..20 {
            let mut r = crate::rng::stream(seed, "calib", 0);
            let recs: Vec<_> = (0..50)
                .map(|i| {
                    let member = i % 3 != 0;
                    let v = if member { r.random_range(0.0..1.2) } else { r.random_range(0.4..2.0) };
                    rec(i, member, vec![(v * 20.0f64).round() / 20.0])
                })
                .collect();
            let (tau, ba) = brute_force(&recs);
            let m = calibrate_threshold(&recs, Statistic::SingleLoss(LossSelector::Element(0))).unwrap();
            assert_eq!(m.tau, tau, "seed {seed}");
            let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
            for r in &recs {
                match (m.decide(r).unwrap(), r.member) {
                    (true, true) => tp += 1,
                    (false, false) => tn += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                }
            }
            assert_eq!(balanced_accuracy(tp, tn, fp, fn_), ba);
        }
    }

    #[test]
    fn no_signal_stays_near_chance() {
        let mut r = crate::rng::stream(1, "null", 0);
        let recs: Vec<_> = (0..4000).map(|i| rec(i, i % 2 == 0, vec![r.random_range(0.0..1.0)])).collect();
        let (calib, eval) = recs.split_at(2000);
        let m = calibrate_threshold(calib, Statistic::MeanLoss).unwrap();
        let correct = eval.iter().filter(|r| m.decide(r).unwrap() == r.member).count();
        let acc = correct as f64 / eval.len() as f64;
        assert!((acc - 0.5).abs() < 0.04, "{acc}");
    }

    #[test]
    fn statistic_ids_round_trip() {
        for s in [Statistic::MeanLoss, Statistic::SingleLoss(LossSelector::Original), Statistic::SingleLoss(LossSelector::Element(3))] {
            assert_eq!(Statistic::parse(&s.id()).unwrap(), s);
        }
    }
}
