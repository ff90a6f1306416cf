//! Exact membership posteriors on small, fully enumerable worlds.
//!
//! A world has `n` samples with fixed transform sets, a finite parameter grid,
//! and a loss for every (sample, augmented instance, grid point). Parameters
//! are distributed as `p(θ | m) ∝ exp(-L_m(θ)/γ)` with
//! `L_m(θ) = Σ_i m_i Σ_j ℓ_ij(θ)`, and memberships are i.i.d. Bernoulli(q).
//! Sample 0 is the target `d_1`; its `K` is the remaining membership bits.
//!
//! Three routes compute `P(m_1 = 1 | θ, T(d_1))`:
//! - [`direct_posterior_mi`]: Bayes over the full joint, no structure used;
//! - [`optimal_mi_theorem1`]: expectation over `K` of the sigmoid of the
//!   log posterior ratio plus the prior log-odds;
//! - [`optimal_mi_theorem2`]: the same expectation with the log ratio replaced
//!   by the closed form `τ_K − Σℓ(θ, d_1)/γ`.
//!
//! Every function returns one value per grid point, since the normalizers
//! already cost a pass over the whole grid.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::{log_sum_exp, logit, sigmoid};
use crate::rng;

pub const MAX_SAMPLES: usize = 12;
pub const MAX_GRID: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteWorld {
    theta_grid: Vec<Vec<f64>>,
    /// `losses[i][j][g]`: loss of augmented instance `j` of sample `i` at grid point `g`.
    losses: Vec<Vec<Vec<f64>>>,
    q: f64,
    gamma: f64,
    /// `energy[i][g] = Σ_j losses[i][j][g] / γ`.
    energy: Vec<Vec<f64>>,
}

impl DiscreteWorld {
    pub fn new(theta_grid: Vec<Vec<f64>>, losses: Vec<Vec<Vec<f64>>>, q: f64, gamma: f64) -> Result<Self> {
        let n = losses.len();
        let g = theta_grid.len();
        if n == 0 || n > MAX_SAMPLES {
            return Err(Error::invalid(format!("worlds hold 1..={MAX_SAMPLES} samples, got {n}")));
        }
        if g == 0 || g > MAX_GRID {
            return Err(Error::invalid(format!("grid size must be in 1..={MAX_GRID}, got {g}")));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("membership prior {q} outside [0, 1]")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("temperature must be positive and finite, got {gamma}")));
        }
        for (i, rows) in losses.iter().enumerate() {
            if rows.is_empty() {
                return Err(Error::invalid(format!("sample {i} has an empty transform set")));
            }
            for row in rows {
                if row.len() != g {
                    return Err(Error::invalid(format!("sample {i}: loss row has {} entries for {g} grid points", row.len())));
                }
                if row.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(Error::invalid(format!("sample {i}: losses must be finite and >= 0")));
                }
            }
        }
        let mut w = Self { theta_grid, losses, q, gamma, energy: Vec::new() };
        w.refresh();
        Ok(w)
    }

    fn refresh(&mut self) {
        let g = self.theta_grid.len();
        self.energy = self
            .losses
            .iter()
            .map(|rows| (0..g).map(|z| rows.iter().map(|r| r[z]).sum::<f64>() / self.gamma).collect())
            .collect();
    }

    /// Seeded world on the grid `{-1, 0, 1}^dims` with losses uniform in `[0, max_loss]`.
    pub fn random(seed: u64, n: usize, k: usize, dims: u32, q: f64, gamma: f64, max_loss: f64) -> Result<Self> {
        let mut r = rng::stream(seed, "world", 0);
        let grid = ternary_grid(dims);
        let g = grid.len();
        let losses = (0..n)
            .map(|_| (0..k).map(|_| (0..g).map(|_| r.random_range(0.0..=max_loss)).collect()).collect())
            .collect();
        Self::new(grid, losses, q, gamma)
    }

    pub fn samples(&self) -> usize {
        self.losses.len()
    }

    pub fn grid_len(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn theta_grid(&self) -> &[Vec<f64>] {
        &self.theta_grid
    }

    pub fn losses(&self) -> &[Vec<Vec<f64>>] {
        &self.losses
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.theta_grid.clone(), self.losses.clone(), q, self.gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.theta_grid.clone(), self.losses.clone(), self.q, gamma)
    }

    /// Replaces the loss table of sample `i`.
    pub fn with_sample_losses(&self, i: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut losses = self.losses.clone();
        *losses.get_mut(i).ok_or_else(|| Error::invalid(format!("no sample {i}")))? = rows;
        Self::new(self.theta_grid.clone(), losses, self.q, self.gamma)
    }

    fn log_prior_bit(&self, member: bool) -> f64 {
        if member {
            self.q.ln()
        } else {
            (1.0 - self.q).ln()
        }
    }

    /// `ln P(m)` for a membership bitmask (bit `i` is sample `i`).
    fn log_prior(&self, config: u32) -> f64 {
        (0..self.samples()).map(|i| self.log_prior_bit(config >> i & 1 == 1)).sum()
    }

    /// Log masses of the grid posterior for a membership bitmask.
    fn log_posterior_mask(&self, config: u32) -> Vec<f64> {
        let g = self.grid_len();
        let neg_energy: Vec<f64> = (0..g)
            .map(|z| -(0..self.samples()).filter(|i| config >> i & 1 == 1).map(|i| self.energy[i][z]).sum::<f64>())
            .collect();
        let norm = log_sum_exp(neg_energy.iter().copied());
        neg_energy.into_iter().map(|e| e - norm).collect()
    }

    fn check_config(&self, config: &[bool]) -> Result<u32> {
        if config.len() != self.samples() {
            return Err(Error::invalid(format!("configuration has {} bits for {} samples", config.len(), self.samples())));
        }
        Ok(config.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (b as u32) << i))
    }
}

/// All points of `{-1, 0, 1}^dims` (3^dims of them).
pub fn ternary_grid(dims: u32) -> Vec<Vec<f64>> {
    (0..3usize.pow(dims))
        .map(|mut idx| {
            (0..dims)
                .map(|_| {
                    let d = idx % 3;
                    idx /= 3;
                    d as f64 - 1.0
                })
                .collect()
        })
        .collect()
}

/// `p(θ | m)` over the grid, normalized in log space.
pub fn posterior(world: &DiscreteWorld, config: &[bool]) -> Result<Vec<f64>> {
    let mask = world.check_config(config)?;
    let masses: Vec<f64> = world.log_posterior_mask(mask).into_iter().map(f64::exp).collect();
    if masses.iter().all(|&m| m == 0.0) {
        return Err(Error::Invariant("posterior underflowed to zero everywhere".into()));
    }
    Ok(masses)
}

/// Brute-force Bayes over every membership configuration, one value per grid point.
pub fn direct_posterior_mi(world: &DiscreteWorld) -> Vec<f64> {
    let g = world.grid_len();
    let configs = 1u32 << world.samples();
    let mut log_joint: Vec<Vec<f64>> = Vec::with_capacity(configs as usize);
    for config in 0..configs {
        let prior = world.log_prior(config);
        log_joint.push(world.log_posterior_mask(config).into_iter().map(|lp| prior + lp).collect());
    }
    (0..g)
        .map(|z| {
            let member = log_sum_exp((0..configs).filter(|c| c & 1 == 1).map(|c| log_joint[c as usize][z]));
            let all = log_sum_exp((0..configs).map(|c| log_joint[c as usize][z]));
            if member == f64::NEG_INFINITY {
                0.0
            } else {
                (member - all).exp()
            }
        })
        .collect()
}

/// Per-`K` log weight `ln P(K | θ, T(d_1))` (unnormalized) and conditional value.
fn expectation_over_k(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let terms: Vec<(f64, f64)> = terms.collect();
    let norm = log_sum_exp(terms.iter().map(|t| t.0));
    terms.iter().map(|(lw, v)| if *lw == f64::NEG_INFINITY { 0.0 } else { (lw - norm).exp() * v }).sum()
}

fn k_weight(world: &DiscreteWorld, k_config: u32, log_alpha: f64, log_beta: f64) -> f64 {
    let log_p_k: f64 = (1..world.samples()).map(|i| world.log_prior_bit(k_config >> i & 1 == 1)).sum();
    log_p_k + log_sum_exp([world.q.ln() + log_alpha, (1.0 - world.q).ln() + log_beta])
}

/// `E_K[σ(ln(α/β) + ln(q/(1-q)))]`, with `K ~ P(K | θ, T(d_1))`.
pub fn optimal_mi_theorem1(world: &DiscreteWorld) -> Vec<f64> {
    let g = world.grid_len();
    let c_q = logit(world.q);
    let ks: Vec<u32> = (0..1u32 << (world.samples() - 1)).map(|k| k << 1).collect();
    let tables: Vec<(Vec<f64>, Vec<f64>)> =
        ks.iter().map(|&k| (world.log_posterior_mask(k | 1), world.log_posterior_mask(k))).collect();
    (0..g)
        .map(|z| {
            expectation_over_k(ks.iter().zip(&tables).map(|(&k, (alpha, beta))| {
                let (la, lb) = (alpha[z], beta[z]);
                (k_weight(world, k, la, lb), sigmoid(la - lb + c_q))
            }))
        })
        .collect()
}

/// `E_K[σ(τ_K − Σℓ_T(θ, d_1)/γ + c_q)]` with `τ_K = −ln Σ_z exp(−Σℓ_T(z, d_1)/γ) p_K(z)`.
pub fn optimal_mi_theorem2(world: &DiscreteWorld) -> Vec<f64> {
    let g = world.grid_len();
    let c_q = logit(world.q);
    let target = &world.energy[0];
    let ks: Vec<u32> = (0..1u32 << (world.samples() - 1)).map(|k| k << 1).collect();
    let per_k: Vec<(Vec<f64>, f64)> = ks
        .iter()
        .map(|&k| {
            let log_p_k = world.log_posterior_mask(k);
            let tau = -log_sum_exp((0..g).map(|z| -target[z] + log_p_k[z]));
            (log_p_k, tau)
        })
        .collect();
    (0..g)
        .map(|z| {
            expectation_over_k(ks.iter().zip(&per_k).map(|(&k, (log_p_k, tau))| {
                let log_ratio = tau - target[z];
                let log_beta = log_p_k[z];
                (k_weight(world, k, log_beta + log_ratio, log_beta), sigmoid(log_ratio + c_q))
            }))
        })
        .collect()
}

/// A world where `d_1` comes in several variants and each variant induces a
/// distribution over candidate transform sets (each a loss table for sample 0).
#[derive(Clone, Debug)]
pub struct EntropyWorld {
    pub base: DiscreteWorld,
    /// Loss tables `[instance][grid]` for sample 0, one per transform-set outcome.
    pub options: Vec<Vec<Vec<f64>>>,
    /// `P(option | variant)`; variants are equally likely.
    pub option_given_variant: Vec<Vec<f64>>,
}

fn plogp_ratio(p: f64, total: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * (p / total).ln()
    }
}

/// `(H(m_1 | θ, T(d_1)), H(m_1 | θ, d_1))` in nats, by enumeration.
pub fn entropy_inequality_check(world: &EntropyWorld) -> Result<(f64, f64)> {
    let variants = world.option_given_variant.len();
    if variants == 0 || world.options.is_empty() {
        return Err(Error::invalid("entropy worlds need variants and options"));
    }
    for row in &world.option_given_variant {
        if row.len() != world.options.len() || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("each variant needs a distribution over the options"));
        }
    }
    let g = world.base.grid_len();
    // joint[o][m1][z] = Σ_K P(m_1, K) p(θ_z | m_1, K, option o)
    let mut joint = Vec::with_capacity(world.options.len());
    for rows in &world.options {
        let w = world.base.with_sample_losses(0, rows.clone())?;
        let mut j = vec![vec![0.0; g]; 2];
        for config in 0..1u32 << w.samples() {
            let prior = w.log_prior(config).exp();
            if prior == 0.0 {
                continue;
            }
            let m1 = (config & 1) as usize;
            for (z, lp) in w.log_posterior_mask(config).into_iter().enumerate() {
                j[m1][z] += prior * lp.exp();
            }
        }
        joint.push(j);
    }
    let p_variant = 1.0 / variants as f64;
    let p_option: Vec<f64> = (0..world.options.len())
        .map(|o| world.option_given_variant.iter().map(|row| p_variant * row[o]).sum())
        .collect();

    let mut h_aug = 0.0;
    for (o, j) in joint.iter().enumerate() {
        for z in 0..g {
            let total = j[0][z] + j[1][z];
            h_aug += p_option[o] * (plogp_ratio(j[0][z], total) + plogp_ratio(j[1][z], total));
        }
    }
    let mut h_single = 0.0;
    for row in &world.option_given_variant {
        for z in 0..g {
            let pm: Vec<f64> = (0..2).map(|m| row.iter().zip(&joint).map(|(po, j)| po * j[m][z]).sum()).collect();
            let total = pm[0] + pm[1];
            h_single += p_variant * (plogp_ratio(pm[0], total) + plogp_ratio(pm[1], total));
        }
    }
    Ok((h_aug, h_single))
}

/// Random entropy world: `options` candidate transform sets for `d_1`, `variants`
/// variants with random mixing over them.
pub fn random_entropy_world(seed: u64, base: DiscreteWorld, options: usize, variants: usize) -> EntropyWorld {
    let mut r = rng::stream(seed, "entropy-world", 0);
    let k = base.losses()[0].len();
    let g = base.grid_len();
    let option_tables = (0..options)
        .map(|_| (0..k).map(|_| (0..g).map(|_| r.random_range(0.0..=5.0)).collect()).collect())
        .collect();
    let option_given_variant = (0..variants)
        .map(|_| {
            let raw: Vec<f64> = (0..options).map(|_| r.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    EntropyWorld { base, options: option_tables, option_given_variant }
}

/// One seeded verification instance from the standard generator:
/// `n ∈ {3..=6}`, grid `{27, 243, 729}`, `k ∈ {1, 2, 3}`, losses uniform in `[0, 5]`.
pub fn generated_world(seed: u64, gamma: f64) -> Result<DiscreteWorld> {
    let mut r = rng::stream(seed, "world-shape", 0);
    let n = r.random_range(3..=6);
    let dims = [3u32, 5, 6][r.random_range(0..3)];
    let k = r.random_range(1..=3);
    let q = r.random_range(0.1..0.9);
    DiscreteWorld::random(seed, n, k, dims, q, gamma, 5.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub worlds: usize,
    pub gammas: Vec<f64>,
    pub tolerance: f64,
    pub max_error_theorem1: f64,
    pub max_error_theorem2: f64,
    pub max_normalization_error: f64,
    pub out_of_range: usize,
    pub entropy_trials: usize,
    /// Trials where `H(m|θ,T(d)) <= H(m|θ,d)` (up to 1e-12).
    pub entropy_aug_le_single: usize,
    /// Trials where `H(m|θ,T(d)) >= H(m|θ,d)` (up to 1e-12).
    pub entropy_aug_ge_single: usize,
    pub passed: bool,
}

/// Runs both theorem equivalences on `worlds` seeded worlds per temperature and
/// tallies the entropy comparison on `entropy_trials` random entropy worlds.
pub fn verification_suite(seed: u64, worlds: usize, gammas: &[f64], entropy_trials: usize) -> Result<OracleReport> {
    let tolerance = 1e-10;
    let (mut e1, mut e2, mut norm_err, mut out_of_range) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for w in 0..worlds as u64 {
        let gamma = gammas[w as usize % gammas.len()];
        let world = generated_world(rng::derive_seed(seed, "oracle-world", w), gamma)?;
        let direct = direct_posterior_mi(&world);
        let t1 = optimal_mi_theorem1(&world);
        let t2 = optimal_mi_theorem2(&world);
        for ((d, a), b) in direct.iter().zip(&t1).zip(&t2) {
            e1 = e1.max((d - a).abs());
            e2 = e2.max((d - b).abs());
            out_of_range += [*d, *a, *b].iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
        }
        let config: Vec<bool> = (0..world.samples()).map(|i| (w >> i) & 1 == 1).collect();
        norm_err = norm_err.max((posterior(&world, &config)?.iter().sum::<f64>() - 1.0).abs());
    }
    let (mut le, mut ge) = (0, 0);
    for t in 0..entropy_trials as u64 {
        let s = rng::derive_seed(seed, "oracle-entropy", t);
        let base = DiscreteWorld::random(s, 3, 2, 3, 0.5, 1.0, 5.0)?;
        let ew = random_entropy_world(s, base, 3, 2);
        let (h_aug, h_single) = entropy_inequality_check(&ew)?;
        if h_aug <= h_single + 1e-12 {
            le += 1;
        }
        if h_aug + 1e-12 >= h_single {
            ge += 1;
        }
    }
    let passed = e1 <= tolerance && e2 <= tolerance && norm_err <= 1e-12 && out_of_range == 0;
    Ok(OracleReport {
        worlds,
        gammas: gammas.to_vec(),
        tolerance,
        max_error_theorem1: e1,
        max_error_theorem2: e2,
        max_normalization_error: norm_err,
        out_of_range,
        entropy_trials,
        entropy_aug_le_single: le,
        entropy_aug_ge_single: ge,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(seed: u64, n: usize, q: f64, gamma: f64) -> DiscreteWorld {
        DiscreteWorld::random(seed, n, 2, 3, q, gamma, 5.0).unwrap()
    }

    #[test]
    fn equal_losses_give_uniform_posterior() {
        let grid = ternary_grid(2);
        let losses = vec![vec![vec![1.5; 9]; 2]; 3];
        let w = DiscreteWorld::new(grid, losses, 0.5, 1.0).unwrap();
        let p = posterior(&w, &[true, false, true]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn hot_posterior_is_uniform() {
        let w = world(1, 4, 0.5, 1e9);
        let p = posterior(&w, &[true; 4]).unwrap();
        let tv: f64 = p.iter().map(|v| (v - 1.0 / 27.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-6, "{tv}");
    }

    #[test]
    fn three_point_grid_by_hand() {
        // one sample, one instance: masses ∝ exp(-ℓ/γ)
        let grid = vec![vec![0.0], vec![1.0], vec![2.0]];
        let w = DiscreteWorld::new(grid, vec![vec![vec![0.5, 1.0, 2.0]]], 0.5, 0.5).unwrap();
        let p = posterior(&w, &[true]).unwrap();
        let expect = [0.705_384_512_698_241_2, 0.259_496_460_342_419_1, 0.035_119_026_959_339_72];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn cold_worlds_do_not_overflow() {
        let w = world(3, 5, 0.4, 0.01);
        let p = posterior(&w, &[true; 5]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in direct_posterior_mi(&w).into_iter().chain(optimal_mi_theorem2(&w)) {
            assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn membership_independent_losses_return_the_prior() {
        let grid = ternary_grid(2);
        let mut r = rng::stream(0, "flat", 0);
        // sample 0's losses are constant in θ, so α = β for every K
        let mut losses = vec![vec![vec![2.0; 9]]];
        losses.extend((0..3).map(|_| vec![(0..9).map(|_| r.random_range(0.0..5.0)).collect::<Vec<f64>>()]));
        for q in [0.3, 0.5, 0.8] {
            let w = DiscreteWorld::new(grid.clone(), losses.clone(), q, 1.0).unwrap();
            for v in optimal_mi_theorem1(&w) {
                assert!((v - q).abs() < 1e-15, "{v} vs {q}");
            }
        }
    }

    #[test]
    fn symmetric_world_at_half() {
        let w = DiscreteWorld::new(ternary_grid(1), vec![vec![vec![1.0; 3]]; 3], 0.5, 1.0).unwrap();
        for v in optimal_mi_theorem1(&w).into_iter().chain(optimal_mi_theorem2(&w)).chain(direct_posterior_mi(&w)) {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_priors() {
        let w = world(5, 4, 0.5, 1.0);
        assert!(direct_posterior_mi(&w.with_q(1.0).unwrap()).iter().all(|&v| v == 1.0));
        assert!(direct_posterior_mi(&w.with_q(0.0).unwrap()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn routes_agree_on_four_sample_worlds() {
        for seed in 0..10 {
            for gamma in [0.1, 1.0, 10.0] {
                let w = world(seed, 4, 0.3 + 0.04 * seed as f64, gamma);
                let d = direct_posterior_mi(&w);
                let t1 = optimal_mi_theorem1(&w);
                let t2 = optimal_mi_theorem2(&w);
                for z in 0..w.grid_len() {
                    assert!((d[z] - t1[z]).abs() <= 1e-10);
                    assert!((d[z] - t2[z]).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn hot_theorem2_returns_prior() {
        let w = world(7, 4, 0.35, 1e12);
        for v in optimal_mi_theorem2(&w) {
            assert!((v - 0.35).abs() < 1e-9);
        }
    }

    #[test]
    fn low_loss_at_observed_theta_raises_membership() {
        let w = world(8, 4, 0.5, 1.0);
        let mut rows = w.losses()[0].clone();
        for row in &mut rows {
            for (z, v) in row.iter_mut().enumerate() {
                *v = if z == 0 { 0.0 } else { 5.0 };
            }
        }
        let w = w.with_sample_losses(0, rows).unwrap();
        assert!(optimal_mi_theorem2(&w)[0] > 0.5);
    }

    #[test]
    fn decreasing_observed_loss_never_lowers_membership() {
        for seed in 0..20 {
            let w = world(seed, 4, 0.5, 1.0);
            let z = (seed as usize * 7) % w.grid_len();
            let mut prev = optimal_mi_theorem2(&w)[z];
            let mut rows = w.losses()[0].clone();
            for _ in 0..5 {
                for row in &mut rows {
                    row[z] *= 0.7;
                }
                let next = optimal_mi_theorem2(&w.with_sample_losses(0, rows.clone()).unwrap())[z];
                assert!(next >= prev - 1e-15, "seed {seed}: {next} < {prev}");
                prev = next;
            }
        }
    }

    #[test]
    fn rejects_oversized_worlds() {
        assert!(DiscreteWorld::random(0, 13, 1, 2, 0.5, 1.0, 5.0).is_err());
        assert!(DiscreteWorld::new(ternary_grid(1), vec![vec![vec![-1.0; 3]]], 0.5, 1.0).is_err());
        assert!(DiscreteWorld::new(ternary_grid(1), vec![vec![vec![1.0; 3]]], 0.5, 0.0).is_err());
    }

    #[test]
    fn identity_transform_sets_make_entropies_equal() {
        let base = world(2, 3, 0.5, 1.0);
        let mut ew = random_entropy_world(2, base, 3, 3);
        ew.option_given_variant = (0..3).map(|v| (0..3).map(|o| if o == v { 1.0 } else { 0.0 }).collect()).collect();
        let (a, s) = entropy_inequality_check(&ew).unwrap();
        assert!((a - s).abs() < 1e-12, "{a} vs {s}");
    }

    #[test]
    fn deterministic_membership_has_zero_entropy() {
        for q in [0.0, 1.0] {
            let base = world(4, 3, q, 1.0);
            let ew = random_entropy_world(4, base, 2, 2);
            let (a, s) = entropy_inequality_check(&ew).unwrap();
            assert_eq!((a, s), (0.0, 0.0));
        }
    }

    #[test]
    fn suite_passes_on_a_few_worlds() {
        let report = verification_suite(1, 6, &[0.1, 1.0, 10.0], 4).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.entropy_aug_le_single, 4);
    }
}
