//! The Conway-Maxwell binomial (COMB) distribution.
//!
//! For `m` Bernoulli components with success parameter `p` and association
//! parameter `nu`,
//!
//! ```text
//! P{W = k} = p^k (1-p)^(m-k) C(m,k)^nu / S(p, nu),   k = 0..m
//! ```
//!
//! `nu = 1` is the binomial, `nu > 1` pulls mass toward the centre (negative
//! association between components) and `nu < 1` pushes it to the tails
//! (positive association).
//!
//! Every kernel is evaluated in log space: `C(m,k)^nu` overflows quickly for
//! moderate `m` and `|nu|`.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{ln_choose, ln_split_factorial, log_sum_exp, logistic, pairwise_sum};

/// Mean-parameterized COMB distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombParams {
    m: usize,
    p: f64,
    nu: f64,
}

/// Natural parameterization: `psi = ln(p / (1 - p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombNatural {
    m: usize,
    psi: f64,
    nu: f64,
}

/// Summary moments of the number of successes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// `E[W (W - 1)]`.
    pub second_factorial: f64,
}

/// Which generating function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratingFunction {
    /// `E[t^W]`
    Probability,
    /// `E[e^(tW)]`
    Moment,
    /// `E[e^(itW)]`
    Characteristic,
}

impl CombParams {
    pub fn new(m: usize, p: f64, nu: f64) -> Result<Self> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("p out of range [0, 1]: {p}"));
        }
        if !nu.is_finite() {
            return domain(format!("nu must be finite, got {nu}"));
        }
        Ok(Self { m, p, nu })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn is_endpoint(&self) -> bool {
        self.p == 0.0 || self.p == 1.0
    }

    /// Unnormalized log weight of `k`.
    fn ln_weight(&self, k: usize) -> f64 {
        let kf = k as f64;
        let rest = (self.m - k) as f64;
        kf * self.p.ln() + rest * (-self.p).ln_1p() + self.nu * ln_choose(self.m, k)
    }

    /// `ln S(p, nu)`. Only defined for `0 < p < 1`; the endpoints are point
    /// masses and [`pmf`](Self::pmf) handles them directly.
    pub fn log_normalizer(&self) -> Result<f64> {
        if self.is_endpoint() {
            return domain("log normalizer requires 0 < p < 1");
        }
        let terms: Vec<f64> = (0..=self.m).map(|k| self.ln_weight(k)).collect();
        Ok(log_sum_exp(&terms))
    }

    /// `ln P{W = k}`.
    pub fn ln_pmf(&self, k: usize) -> Result<f64> {
        if k > self.m {
            return domain(format!("k = {k} outside 0..={}", self.m));
        }
        if self.p == 0.0 {
            return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
        }
        if self.p == 1.0 {
            return Ok(if k == self.m { 0.0 } else { f64::NEG_INFINITY });
        }
        Ok(self.ln_weight(k) - self.log_normalizer()?)
    }

    pub fn pmf(&self, k: usize) -> Result<f64> {
        self.ln_pmf(k).map(f64::exp)
    }

    /// The whole pmf `P{W = 0}, ..., P{W = m}` with one normalizer evaluation.
    pub fn pmf_table(&self) -> Vec<f64> {
        if self.p == 0.0 {
            return indicator(self.m + 1, 0);
        }
        if self.p == 1.0 {
            return indicator(self.m + 1, self.m);
        }
        let ln_w: Vec<f64> = (0..=self.m).map(|k| self.ln_weight(k)).collect();
        let ln_s = log_sum_exp(&ln_w);
        ln_w.into_iter().map(|w| (w - ln_s).exp()).collect()
    }

    /// Mean, variance and second factorial moment by direct summation.
    pub fn moments(&self) -> Moments {
        moments_of(&self.pmf_table())
    }

    pub fn to_natural(&self) -> Result<CombNatural> {
        if self.is_endpoint() {
            return domain("natural parameters require 0 < p < 1");
        }
        CombNatural::new(self.m, (self.p / (1.0 - self.p)).ln(), self.nu)
    }

    /// `ln T(x, nu)` for `x > 0`, where `T(x, nu) = sum_k x^k C(m,k)^nu`.
    fn ln_t(&self, ln_x: f64) -> f64 {
        let terms: Vec<f64> = (0..=self.m)
            .map(|k| k as f64 * ln_x + self.nu * ln_choose(self.m, k))
            .collect();
        log_sum_exp(&terms)
    }

    /// Probability generating function `E[t^W]`, evaluated as
    /// `T(t p/(1-p), nu) / T(p/(1-p), nu)`.
    pub fn pgf(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return domain(format!("t must be finite, got {t}"));
        }
        if self.is_endpoint() {
            let k = if self.p == 0.0 { 0 } else { self.m };
            return Ok(t.powi(k as i32));
        }
        let ln_odds = self.p.ln() - (-self.p).ln_1p();
        let ln_base = self.ln_t(ln_odds);
        if t > 0.0 {
            return Ok((self.ln_t(t.ln() + ln_odds) - ln_base).exp());
        }
        if t == 0.0 {
            // only the k = 0 term survives
            return Ok((self.nu * ln_choose(self.m, 0) - ln_base).exp());
        }
        // Negative argument: alternating series, scaled by the largest magnitude.
        let ln_abs = t.abs().ln() + ln_odds;
        let mags: Vec<f64> = (0..=self.m)
            .map(|k| k as f64 * ln_abs + self.nu * ln_choose(self.m, k))
            .collect();
        let top = mags.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let signed: Vec<f64> = mags
            .iter()
            .enumerate()
            .map(|(k, &l)| if k % 2 == 0 { 1.0 } else { -1.0 } * (l - top).exp())
            .collect();
        Ok(pairwise_sum(&signed) * (top - ln_base).exp())
    }

    /// Moment generating function `E[e^(tW)]`.
    pub fn mgf(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return domain(format!("t must be finite, got {t}"));
        }
        if self.is_endpoint() {
            let k = if self.p == 0.0 { 0 } else { self.m };
            return Ok((t * k as f64).exp());
        }
        let ln_odds = self.p.ln() - (-self.p).ln_1p();
        Ok((self.ln_t(t + ln_odds) - self.ln_t(ln_odds)).exp())
    }

    /// Characteristic function `E[e^(itW)]`.
    pub fn cf(&self, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return domain(format!("t must be finite, got {t}"));
        }
        let table = self.pmf_table();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, pk) in table.iter().enumerate() {
            acc += Complex64::from_polar(*pk, t * k as f64);
        }
        Ok(acc)
    }

    /// Dispatch on [`GeneratingFunction`]. Real-valued kinds come back with a
    /// zero imaginary part.
    pub fn generating_function(&self, kind: GeneratingFunction, t: f64) -> Result<Complex64> {
        match kind {
            GeneratingFunction::Probability => self.pgf(t).map(|v| Complex64::new(v, 0.0)),
            GeneratingFunction::Moment => self.mgf(t).map(|v| Complex64::new(v, 0.0)),
            GeneratingFunction::Characteristic => self.cf(t),
        }
    }

    /// `n` independent draws using inverse-CDF lookup on the pmf table.
    ///
    /// The generator is ChaCha20 (`rand_chacha`) seeded with
    /// `seed_from_u64(seed)`; each uniform is the top 53 bits of one
    /// `next_u64` call. Both are stable across releases, so a seed
    /// reproduces the same draws.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<usize> {
        let cdf = cumulative(&self.pmf_table());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u = uniform(&mut rng);
                cdf.partition_point(|&c| c <= u).min(self.m)
            })
            .collect()
    }
}

/// `[0, 1)` uniform from the top 53 bits of a 64-bit draw.
pub(crate) fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn indicator(len: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[at] = 1.0;
    v
}

pub(crate) fn moments_of(pmf: &[f64]) -> Moments {
    let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let second_factorial: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p)
        .sum();
    let variance = (second_factorial + mean - mean * mean).max(0.0);
    Moments {
        mean,
        variance,
        second_factorial,
    }
}

impl CombNatural {
    pub fn new(m: usize, psi: f64, nu: f64) -> Result<Self> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        if !psi.is_finite() || !nu.is_finite() {
            return domain(format!("psi and nu must be finite, got ({psi}, {nu})"));
        }
        Ok(Self { m, psi, nu })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn to_mean(&self) -> Result<CombParams> {
        CombParams::new(self.m, logistic(self.psi), self.nu)
    }

    /// `ln P{W = k}` as `psi k - nu ln[k!(m-k)!] - ln Z(psi, nu)`.
    pub fn ln_pmf(&self, k: usize) -> Result<f64> {
        if k > self.m {
            return domain(format!("k = {k} outside 0..={}", self.m));
        }
        Ok(natural_ln_weight(self.m, self.psi, self.nu, k)
            - log_partition(self.m, self.psi, self.nu))
    }

    pub fn pmf(&self, k: usize) -> Result<f64> {
        self.ln_pmf(k).map(f64::exp)
    }

    pub fn pmf_table(&self) -> Vec<f64> {
        gibbs(self.m, self.psi, self.nu)
    }
}

#[inline]
fn natural_ln_weight(m: usize, psi: f64, nu: f64, k: usize) -> f64 {
    psi * k as f64 - nu * ln_split_factorial(m, k)
}

/// `ln Z(psi, nu) = ln sum_k e^(psi k) / [k!(m-k)!]^nu`.
///
/// This is the normalizer of the natural parameterization and the partition
/// function that appears in the conjugate posterior.
pub fn log_partition(m: usize, psi: f64, nu: f64) -> f64 {
    let terms: Vec<f64> = (0..=m).map(|k| natural_ln_weight(m, psi, nu, k)).collect();
    log_sum_exp(&terms)
}

/// The distribution proportional to `e^(psi k) / [k!(m-k)!]^nu` over `0..=m`.
pub(crate) fn gibbs(m: usize, psi: f64, nu: f64) -> Vec<f64> {
    let ln_w: Vec<f64> = (0..=m).map(|k| natural_ln_weight(m, psi, nu, k)).collect();
    let ln_z = log_sum_exp(&ln_w);
    ln_w.into_iter().map(|w| (w - ln_z).exp()).collect()
}

/// Value, gradient and Hessian of `ln Z` in `(psi, nu)`.
///
/// The gradient is the mean of `(k, -ln[k!(m-k)!])` under the Gibbs weights
/// and the Hessian is their covariance.
pub fn log_partition_derivatives(m: usize, psi: f64, nu: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let q = gibbs(m, psi, nu);
    let mut mean = [0.0; 2];
    for (k, qk) in q.iter().enumerate() {
        mean[0] += qk * k as f64;
        mean[1] -= qk * ln_split_factorial(m, k);
    }
    let mut cov = [[0.0; 2]; 2];
    for (k, qk) in q.iter().enumerate() {
        let d = [k as f64 - mean[0], -ln_split_factorial(m, k) - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += qk * d[i] * d[j];
            }
        }
    }
    (log_partition(m, psi, nu), mean, cov)
}
