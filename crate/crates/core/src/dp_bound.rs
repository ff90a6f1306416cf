//! Group-privacy ceiling on membership inference and an enumeration check of it.

use serde::Serialize;

use crate::bayes_oracle::{direct_posterior_mi, DiscreteWorld};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DpParams {
    /// Total privacy level over a sample's whole transform set.
    pub epsilon: f64,
    /// Group size; the per-instance level is `epsilon / k`.
    pub k: usize,
    pub q: f64,
}

impl DpParams {
    pub fn new(epsilon: f64, k: usize, q: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if k == 0 {
            return Err(Error::invalid("group size k must be >= 1"));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1), got {q}")));
        }
        Ok(Self { epsilon, k, q })
    }

    pub fn per_instance_epsilon(&self) -> f64 {
        self.epsilon / self.k as f64
    }
}

/// `σ(ε + ln(q / (1 - q)))`, written as `q / (q + (1 - q) e^{-ε})`.
///
/// That form returns `q` exactly at `ε = 0` and does not depend on `k`.
pub fn mi_upper_bound(params: &DpParams) -> f64 {
    let q = params.q;
    q / (q + (1.0 - q) * (-params.epsilon).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct WorldCheckReport {
    pub epsilon: f64,
    pub k: usize,
    pub q: f64,
    pub trials: usize,
    pub bound: f64,
    pub max_posterior: f64,
    /// `max_posterior / bound`; 1 means the bound is attained.
    pub max_ratio: f64,
}

/// World whose per-sample energy `Σ_j ℓ_ij(θ)/γ` stays in `[0, ε]`: each of the
/// `k` instances has loss at most `γ ε / k`. Flipping one membership bit then
/// moves every log posterior ratio by at most `ε`.
pub fn epsilon_world(seed: u64, params: &DpParams, n: usize, dims: u32, gamma: f64) -> Result<DiscreteWorld> {
    let cap = gamma * params.per_instance_epsilon();
    DiscreteWorld::random(seed, n, params.k, dims, params.q, gamma, cap)
}

/// Enumerates `trials` ε-constrained worlds and checks every grid point's exact
/// membership posterior against [`mi_upper_bound`].
pub fn randomized_world_check(params: &DpParams, trials: usize, seed: u64) -> Result<WorldCheckReport> {
    let bound = mi_upper_bound(params);
    let mut max_posterior = 0.0f64;
    for t in 0..trials as u64 {
        let world_seed = rng::derive_seed(seed, "dp-world", t);
        let n = 3 + (t % 3) as usize;
        let world = epsilon_world(world_seed, params, n, 3, 1.0)?;
        for p in direct_posterior_mi(&world) {
            if p > bound + 1e-12 {
                return Err(Error::Invariant(format!(
                    "posterior {p} exceeds bound {bound} in world seed {world_seed}"
                )));
            }
            max_posterior = max_posterior.max(p);
        }
    }
    Ok(WorldCheckReport {
        epsilon: params.epsilon,
        k: params.k,
        q: params.q,
        trials,
        bound,
        max_posterior,
        max_ratio: max_posterior / bound,
    })
}
