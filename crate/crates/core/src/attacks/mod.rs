//! Membership-inference attacks over loss sets.
//!
//! Everything here consumes [`MembershipRecord`](crate::records::MembershipRecord)s
//! only; no attack can see model parameters.

mod checkpoint;
mod features;
mod network;
mod threshold;

pub use checkpoint::AttackModel;
pub use features::{mean_statistic, moment_features, raw_loss_features, FeatureBuilder, FeatureVector};
pub use network::{mi_network_attack, train_mi_network, MiAttack, MiNetwork, MiNetworkConfig, Standardizer};
pub use threshold::{
    balanced_accuracy, calibrate_threshold, mloss_attack, mmean_attack, LossSelector, Statistic, ThresholdModel,
};

/// The four attacks compared throughout the toolkit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackKind {
    /// Threshold on a single loss value.
    Loss,
    /// Threshold on the mean of the loss set.
    Mean,
    /// MI network on the raw, ordered loss values.
    NnLoss,
    /// MI network on normalized raw moments.
    Moments,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [AttackKind::Loss, AttackKind::Mean, AttackKind::NnLoss, AttackKind::Moments];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Loss => "M_loss",
            AttackKind::Mean => "M_mean",
            AttackKind::NnLoss => "M_NN_loss",
            AttackKind::Moments => "M_moments",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "loss" | "M_loss" => Ok(AttackKind::Loss),
            "mean" | "M_mean" => Ok(AttackKind::Mean),
            "nn-loss" | "M_NN_loss" => Ok(AttackKind::NnLoss),
            "moments" | "M_moments" => Ok(AttackKind::Moments),
            other => Err(crate::Error::InvalidInput(format!("unknown attack `{other}`"))),
        }
    }
}
