//! Conjugate Bayesian inference for the COMB distribution.
//!
//! In the natural parameters `(psi, nu)` the likelihood of one observation is
//! `e^(psi k) / [k!(m-k)!]^nu / Z(psi, nu)`, so the family
//!
//! ```text
//! h(psi, nu) ∝ g(psi, nu) e^(a psi - b nu) Z(psi, nu)^(-c)
//! ```
//!
//! is closed under sampling: observing `k` adds `k` to `a`,
//! `ln[k!(m-k)!]` to `b` and one to `c`. The tempering factor `g` is a
//! product of normal densities, by default `phi(psi) phi(nu - 1)`, which
//! keeps the family proper for every `(a, b, c)` with `c >= 0`.

mod bound;
mod grid;
mod kernel;
mod map;
mod propriety;

pub use bound::jensen_lower_bound;
pub use grid::{GridAxis, GridSpec, PosteriorGrid};
pub use kernel::{log_posterior_kernel, NormalTempering, Posterior};
pub use map::{fitted_counts, map_estimate, MapOptions, MapResult};
pub use propriety::{propriety_check, ProprietyLevel, ProprietyReport};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::ln_split_factorial;

/// Count-of-counts data: `counts[k]` observations equal to `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    m: usize,
    counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn new(m: usize, counts: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        if counts.len() != m + 1 {
            return domain(format!(
                "expected {} counts for m = {m}, got {}",
                m + 1,
                counts.len()
            ));
        }
        if counts.iter().sum::<u64>() == 0 {
            return domain("frequency table has no observations");
        }
        Ok(Self { m, counts })
    }

    /// Tabulate raw observations, each in `0..=m`.
    pub fn from_observations(m: usize, obs: &[usize]) -> Result<Self> {
        let mut counts = vec![0; m + 1];
        for &k in obs {
            if k > m {
                return domain(format!("observation {k} outside 0..={m}"));
            }
            counts[k] += 1;
        }
        Self::new(m, counts)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn sufficient_stats(&self) -> SufficientStats {
        sufficient_stats(self)
    }
}

/// `S1 = sum k_i`, `S2 = sum ln[k_i!(m-k_i)!]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub s1: u64,
    pub s2: f64,
    pub n: u64,
    pub m: usize,
}

pub fn sufficient_stats(table: &FrequencyTable) -> SufficientStats {
    let mut s1 = 0;
    let mut s2 = 0.0;
    for (k, &nk) in table.counts.iter().enumerate() {
        s1 += k as u64 * nk;
        s2 += nk as f64 * ln_split_factorial(table.m, k);
    }
    SufficientStats {
        s1,
        s2,
        n: table.n(),
        m: table.m,
    }
}

/// Conjugate hyperparameters `(a, b, c)` for a fixed `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: usize,
}

impl Hyperparams {
    pub fn new(a: f64, b: f64, c: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return domain(format!("hyperparameters must be finite: ({a}, {b}, {c})"));
        }
        if c < 0.0 {
            return domain(format!("c must be non-negative, got {c}"));
        }
        if m == 0 {
            return domain("m must be at least 1");
        }
        Ok(Self { a, b, c, m })
    }

    /// `a = b = c = 0`: the tempering factor alone.
    pub fn flat(m: usize) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            m,
        }
    }

    /// One observation `k`.
    pub fn update(&self, k: usize) -> Result<Self> {
        if k > self.m {
            return domain(format!("observation {k} outside 0..={}", self.m));
        }
        Ok(Self {
            a: self.a + k as f64,
            b: self.b + ln_split_factorial(self.m, k),
            c: self.c + 1.0,
            m: self.m,
        })
    }

    /// All observations summarized by `stats` at once.
    pub fn update_batch(&self, stats: &SufficientStats) -> Result<Self> {
        if stats.m != self.m {
            return domain(format!(
                "data have m = {}, hyperparameters m = {}",
                stats.m, self.m
            ));
        }
        Ok(Self {
            a: self.a + stats.s1 as f64,
            b: self.b + stats.s2,
            c: self.c + stats.n as f64,
            m: self.m,
        })
    }
}

/// Convenience: `Hyperparams::update` under its operational name.
pub fn conjugate_update(hyper: &Hyperparams, k: usize) -> Result<Hyperparams> {
    hyper.update(k)
}
