//! Exchangeable Bernoulli components behind a distribution on their sum.
//!
//! Any distribution `p_0..p_m` on the number of successes `S` has exactly
//! one exchangeable joint law on `(X_1, ..., X_m)` with that sum: every
//! binary sequence with `k` ones gets probability `p_k / C(m, k)`. The
//! extreme points `e_l` of the exchangeable laws are the uniform
//! distributions on sequences with exactly `l` ones, and the mixture weight
//! on `e_l` is `p_l`.
//!
//! The pair `(X_1, X_2)` is summarized by `p00`, `p01 = p10` and `p11`, with
//! `p00 + 2 p01 + p11 = 1`. These are computed from factorial moments of
//! the sum rather than by enumerating `2^m` sequences.

use serde::Serialize;

use crate::comb::CombParams;
use crate::error::{domain, Result};
use crate::special::ln_choose;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumDistribution {
    m: usize,
    probs: Vec<f64>,
}

impl SumDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return domain("need probabilities for 0..=m with m >= 1");
        }
        if probs.iter().any(|&p| p.is_nan() || p < 0.0) {
            return domain("probabilities must be non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            m: probs.len() - 1,
            probs,
        })
    }

    pub fn from_comb(params: &CombParams) -> Self {
        Self {
            m: params.m(),
            probs: params.pmf_table(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Joint probabilities of any two distinct components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairwiseProbs {
    pub p00: f64,
    pub p01: f64,
    pub p11: f64,
}

/// Mixture weights on the extreme points `e_0..e_m`. They coincide with the
/// sum probabilities.
pub fn extreme_point_weights(sum_dist: &SumDistribution) -> Vec<f64> {
    sum_dist.probs.clone()
}

/// Probability of the specific sequence `bits` under the exchangeable law.
pub fn sequence_probability(sum_dist: &SumDistribution, bits: &[bool]) -> Result<f64> {
    if bits.len() != sum_dist.m {
        return domain(format!(
            "sequence has length {}, expected {}",
            bits.len(),
            sum_dist.m
        ));
    }
    let k = bits.iter().filter(|&&b| b).count();
    Ok(sum_dist.probs[k] * (-ln_choose(sum_dist.m, k)).exp())
}

/// Pair probabilities from the factorial moments of the sum:
/// `p11 = E[W(W-1)]`, `p01 = E[W(m-W)]`, `p00 = E[(m-W)(m-W-1)]`, each
/// divided by `m(m-1)`.
pub fn pairwise_from_sum(sum_dist: &SumDistribution) -> Result<PairwiseProbs> {
    let m = sum_dist.m;
    if m < 2 {
        return domain("pairwise probabilities need m >= 2");
    }
    let pairs = (m * (m - 1)) as f64;
    let (mut p00, mut p01, mut p11) = (0.0, 0.0, 0.0);
    for (k, &pk) in sum_dist.probs.iter().enumerate() {
        let ones = k as f64;
        let zeros = (m - k) as f64;
        p11 += pk * ones * (ones - 1.0);
        p01 += pk * ones * zeros;
        p00 += pk * zeros * (zeros - 1.0);
    }
    Ok(PairwiseProbs {
        p00: p00 / pairs,
        p01: p01 / pairs,
        p11: p11 / pairs,
    })
}

pub fn pairwise_probs(params: &CombParams) -> Result<PairwiseProbs> {
    pairwise_from_sum(&SumDistribution::from_comb(params))
}

/// Common correlation between two components,
/// `(Var W / (m q (1 - q)) - 1) / (m - 1)` with `q = E[W] / m`.
///
/// The mean is measured from whichever end of `0..=m` is closer, so
/// near-degenerate margins keep their precision.
pub fn component_correlation(params: &CombParams) -> Result<f64> {
    let sum = SumDistribution::from_comb(params);
    let m = sum.m;
    if m < 2 {
        return domain("correlation needs m >= 2");
    }
    let up: f64 = sum
        .probs
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum();
    let down: f64 = sum
        .probs
        .iter()
        .enumerate()
        .map(|(k, p)| (m - k) as f64 * p)
        .sum();
    if !(up > 0.0 && down > 0.0) {
        return domain(format!(
            "correlation undefined for degenerate margin q = {}",
            up / m as f64
        ));
    }
    let var: f64 = if up <= down {
        sum.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * (k as f64 - up).powi(2))
            .sum()
    } else {
        sum.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * ((m - k) as f64 - down).powi(2))
            .sum()
    };
    let binomial_var = up * down / m as f64;
    Ok((var / binomial_var - 1.0) / (m - 1) as f64)
}

/// `(p, pairwise_probs(m, p, nu))` along `p_grid`.
pub fn pairwise_curve(m: usize, nu: f64, p_grid: &[f64]) -> Result<Vec<(f64, PairwiseProbs)>> {
    p_grid
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return domain(format!("grid point {p} outside (0, 1)"));
            }
            Ok((p, pairwise_probs(&CombParams::new(m, p, nu)?)?))
        })
        .collect()
}

/// `steps` evenly spaced interior points of `(0, 1)`: `i / (steps + 1)`.
pub fn interior_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| i as f64 / (steps + 1) as f64).collect()
}
