use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::attacks::{
    balanced_accuracy, calibrate_threshold, train_mi_network, AttackKind, AttackModel, FeatureBuilder, LossSelector,
    Statistic, ThresholdModel,
};
use crate::config::ExperimentConfig;
use crate::data::Dataset;
use crate::error::{Error, Result, StageExt};
use crate::records::{check_split_disjoint, MembershipRecord, Split};
use crate::rng;
use crate::target::{extract_loss_sets, train, TargetModel, TrainReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn tally(records: &[MembershipRecord], mut decide: impl FnMut(&MembershipRecord) -> Result<bool>) -> Result<Self> {
        let mut c = Confusion::default();
        for r in records {
            match (decide(r)?, r.member) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Plain accuracy; equal to balanced accuracy on a balanced set.
    pub fn success_rate(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn balanced_accuracy(&self) -> f64 {
        balanced_accuracy(self.tp, self.tn, self.fp, self.fn_)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackResult {
    pub attack: String,
    pub k: usize,
    pub success_rate: f64,
    #[serde(flatten)]
    pub counts: Confusion,
    /// Generalization gap of the target model.
    pub gap: f64,
    pub seed: u64,
    /// Statistic or feature map the attack ended up using.
    pub detail: String,
    pub fingerprint: String,
}

#[derive(Clone, Debug)]
pub struct FittedAttack {
    pub kind: AttackKind,
    pub model: AttackModel,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub train_report: TrainReport,
    pub records: Vec<MembershipRecord>,
    pub attacks: Vec<FittedAttack>,
    pub results: Vec<AttackResult>,
}

impl ExperimentOutcome {
    pub fn result(&self, kind: AttackKind) -> Option<&AttackResult> {
        self.results.iter().find(|r| r.attack == kind.name())
    }
}

/// Independent Bernoulli(q) membership bits; both classes must be non-empty.
pub fn draw_membership(seed: u64, n: usize, q: f64) -> Result<Vec<bool>> {
    let mut r = rng::stream(seed, "membership", 0);
    let members: Vec<bool> = (0..n).map(|_| r.random::<f64>() < q).collect();
    if !members.iter().any(|&m| m) || members.iter().all(|&m| m) {
        return Err(Error::invalid("membership draw left one side empty; increase n"));
    }
    Ok(members)
}

/// `per_class` members and non-members go to attack-train; the rest are
/// downsampled to a balanced attack-eval set. Leftovers stay unassigned.
pub fn assign_splits(records: &mut [MembershipRecord], per_class: usize, seed: u64) -> Result<()> {
    let mut members: Vec<usize> = (0..records.len()).filter(|&i| records[i].member).collect();
    let mut others: Vec<usize> = (0..records.len()).filter(|&i| !records[i].member).collect();
    members.shuffle(&mut rng::stream(seed, "attack-split", 0));
    others.shuffle(&mut rng::stream(seed, "attack-split", 1));
    let eval = members.len().min(others.len()).checked_sub(per_class).filter(|&e| e > 0).ok_or_else(|| {
        Error::invalid(format!(
            "{} members and {} non-members leave no evaluation records after {per_class} per class for attack training",
            members.len(),
            others.len()
        ))
    })?;
    for group in [&members, &others] {
        for (pos, &i) in group.iter().enumerate() {
            records[i].split = if pos < per_class {
                Split::AttackTrain
            } else if pos < per_class + eval {
                Split::AttackEval
            } else {
                Split::Unassigned
            };
        }
    }
    check_split_disjoint(records)
}

pub fn split_of(records: &[MembershipRecord], split: Split) -> Vec<MembershipRecord> {
    records.iter().filter(|r| r.split == split).cloned().collect()
}

/// Generates data, draws membership and trains the target.
pub fn train_target(config: &ExperimentConfig) -> Result<(Dataset, Vec<bool>, TargetModel, TrainReport)> {
    let dataset = config.build_dataset().stage("dataset")?;
    let members = draw_membership(config.seed, dataset.samples.len(), config.q).stage("membership")?;
    let pool = config.pool_spec(dataset.shape).stage("pool")?;
    let (model, report) = train(
        &dataset,
        &members,
        config.k,
        &pool,
        &config.model.architecture(),
        &config.train_config(),
        config.train_seed(),
    )
    .stage("train")?;
    Ok((dataset, members, model, report))
}

/// Queries loss sets for every sample and assigns attack splits.
pub fn extract_records(
    config: &ExperimentConfig,
    dataset: &Dataset,
    members: &[bool],
    model: &TargetModel,
) -> Result<Vec<MembershipRecord>> {
    let pool = config.pool_spec(dataset.shape).stage("pool")?;
    let mut records =
        extract_loss_sets(model, &dataset.samples, members, config.attack_k(), &pool, &config.attack_transforms())
            .stage("extract")?;
    assign_splits(&mut records, config.attack.train_per_class, config.seed).stage("split")?;
    Ok(records)
}

/// Calibrates a threshold for every single-loss candidate (the original sample's
/// loss, then each element) and keeps the one with the best calibration score.
/// Ties keep the earlier candidate.
pub fn best_single_loss_protocol(calibration: &[MembershipRecord]) -> Result<ThresholdModel> {
    let k = calibration.first().ok_or_else(|| Error::Calibration("no calibration records".into()))?.losses.len();
    let mut candidates = Vec::with_capacity(k + 1);
    if calibration.iter().all(|r| r.original_loss.is_some()) {
        candidates.push(LossSelector::Original);
    }
    candidates.extend((0..k).map(LossSelector::Element));
    let mut best: Option<(f64, ThresholdModel)> = None;
    for sel in candidates {
        let model = calibrate_threshold(calibration, Statistic::SingleLoss(sel))?;
        let score = Confusion::tally(calibration, |r| model.decide(r))?.balanced_accuracy();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, model));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Fits all four attacks on attack-train records.
pub fn fit_attacks(config: &ExperimentConfig, train_records: &[MembershipRecord]) -> Result<Vec<FittedAttack>> {
    let net = config.attack.network_config();
    let mut out = Vec::with_capacity(AttackKind::ALL.len());
    for (i, kind) in AttackKind::ALL.into_iter().enumerate() {
        let net_seed = rng::derive_seed(config.seed, "mi-network", i as u64);
        let model = match kind {
            AttackKind::Loss => AttackModel::Threshold(best_single_loss_protocol(train_records)?),
            AttackKind::Mean => AttackModel::Threshold(calibrate_threshold(train_records, Statistic::MeanLoss)?),
            AttackKind::NnLoss => {
                AttackModel::Network(train_mi_network(train_records, FeatureBuilder::RawLosses, &net, net_seed)?)
            }
            AttackKind::Moments => {
                AttackModel::Network(train_mi_network(train_records, config.attack.moments(), &net, net_seed)?)
            }
        };
        out.push(FittedAttack { kind, model });
    }
    Ok(out)
}

pub fn detail(model: &AttackModel) -> String {
    match model {
        AttackModel::Threshold(t) => t.statistic.id(),
        AttackModel::Network(n) => n.builder.id(),
    }
}

/// Scores fitted attacks on a balanced evaluation set.
pub fn score_attacks(
    config: &ExperimentConfig,
    attacks: &[FittedAttack],
    eval: &[MembershipRecord],
    gap: f64,
) -> Result<Vec<AttackResult>> {
    let members = eval.iter().filter(|r| r.member).count();
    if members * 2 != eval.len() {
        return Err(Error::Invariant(format!("evaluation set is unbalanced: {members} of {}", eval.len())));
    }
    let fingerprint = config.fingerprint();
    attacks
        .iter()
        .map(|a| {
            let counts = Confusion::tally(eval, |r| a.model.decide(r))?;
            Ok(AttackResult {
                attack: a.kind.name().to_string(),
                k: config.k,
                success_rate: counts.success_rate(),
                counts,
                gap,
                seed: config.seed,
                detail: detail(&a.model),
                fingerprint: fingerprint.clone(),
            })
        })
        .collect()
}

/// Generate, split, train, extract, fit all four attacks, score on attack-eval.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let (dataset, members, model, train_report) = train_target(config)?;
    let records = extract_records(config, &dataset, &members, &model)?;
    let attacks = fit_attacks(config, &split_of(&records, Split::AttackTrain)).stage("attack-train")?;
    let gap = train_report.generalization_gap.unwrap_or(f64::NAN);
    let results = score_attacks(config, &attacks, &split_of(&records, Split::AttackEval), gap).stage("attack-eval")?;
    Ok(ExperimentOutcome { config: config.clone(), train_report, records, attacks, results })
}

/// One fresh experiment per `k`.
pub fn sweep_k(config: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<ExperimentOutcome>> {
    if k_values.is_empty() {
        return Err(Error::config("sweep needs at least one k"));
    }
    k_values
        .iter()
        .map(|&k| {
            let mut c = config.clone();
            c.k = k;
            run_experiment(&c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::LossSet;

    fn rec(id: u64, member: bool, losses: Vec<f64>, original: f64) -> MembershipRecord {
        MembershipRecord { id, member, split: Split::AttackTrain, losses: LossSet::new(losses).unwrap(), original_loss: Some(original) }
    }

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.dataset.n = 300;
        c.k = 2;
        c.train.epochs = 3;
        c.attack.train_per_class = 40;
        c.attack.epochs = 50;
        c
    }

    #[test]
    fn confusion_counts() {
        let records: Vec<_> = (0..4).map(|i| rec(i, i < 2, vec![1.0], 0.0)).collect();
        let c = Confusion::tally(&records, |r| Ok(r.id % 2 == 0)).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 1, 1));
        assert_eq!(c.success_rate(), 0.5);
    }

    #[test]
    fn splits_are_balanced_and_disjoint() {
        let mut records: Vec<_> = (0..50).map(|i| rec(i, i % 3 == 0, vec![1.0], 0.0)).collect();
        assign_splits(&mut records, 5, 1).unwrap();
        let train = split_of(&records, Split::AttackTrain);
        let eval = split_of(&records, Split::AttackEval);
        assert_eq!(train.iter().filter(|r| r.member).count(), 5);
        assert_eq!(train.len(), 10);
        assert_eq!(eval.iter().filter(|r| r.member).count() * 2, eval.len());
        assert_eq!(eval.len(), 2 * (17 - 5));
        assert!(assign_splits(&mut records, 17, 1).is_err());
    }

    #[test]
    fn best_single_loss_matches_exhaustive_loop() {
        let mut r = rng::stream(3, "records", 0);
        let records: Vec<_> = (0..60)
            .map(|i| {
                let member = i % 2 == 0;
                let shift = if member { 0.0 } else { 0.3 };
                let losses = (0..3).map(|j| r.random::<f64>() + shift * j as f64).collect();
                rec(i, member, losses, r.random::<f64>())
            })
            .collect();
        let chosen = best_single_loss_protocol(&records).unwrap();
        let mut best = (f64::NEG_INFINITY, String::new());
        for sel in [LossSelector::Original, LossSelector::Element(0), LossSelector::Element(1), LossSelector::Element(2)] {
            let m = calibrate_threshold(&records, Statistic::SingleLoss(sel)).unwrap();
            let s = Confusion::tally(&records, |x| m.decide(x)).unwrap().balanced_accuracy();
            if s > best.0 {
                best = (s, m.statistic.id());
            }
        }
        assert_eq!(chosen.statistic.id(), best.1);
        assert_eq!(chosen.statistic.id(), "element:2");
    }

    #[test]
    fn single_identity_element_is_plain_mloss() {
        let records: Vec<_> = (0..20).map(|i| rec(i, i % 2 == 0, vec![i as f64], i as f64)).collect();
        let chosen = best_single_loss_protocol(&records).unwrap();
        let plain = calibrate_threshold(&records, Statistic::SingleLoss(LossSelector::Original)).unwrap();
        assert_eq!(chosen, plain);
    }

    #[test]
    fn experiment_is_deterministic_and_balanced() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.results.len(), 4);
        for r in &a.results {
            assert_eq!(r.counts.tp + r.counts.fn_, r.counts.tn + r.counts.fp);
            assert_eq!(r.success_rate, (r.counts.tp + r.counts.tn) as f64 / r.counts.total() as f64);
        }
    }

    #[test]
    fn sweep_gives_one_outcome_per_k() {
        let out = sweep_k(&small(), &[1]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].results.iter().all(|r| r.k == 1));
        assert!(sweep_k(&small(), &[]).is_err());
    }

    #[test]
    fn stage_failures_name_the_stage() {
        let mut c = small();
        c.attack.train_per_class = 10_000;
        match run_experiment(&c) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "split"),
            other => panic!("{other:?}"),
        }
    }
}
