//! Conway-Maxwell-Poisson distribution and its conditional link to COMB.
//!
//! `P{W = x} = lambda^x / ((x!)^nu M(lambda, nu))` with
//! `M(lambda, nu) = sum_j lambda^j / (j!)^nu`. The series converges for
//! `nu > 0`, and for `nu = 0` only when `lambda < 1` (geometric case).

use serde::Serialize;

use crate::comb::CombParams;
use crate::error::{domain, Error, Result};
use crate::special::{ln_factorial, log_sum_exp};

/// Hard cap on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;

/// Relative size of the remaining tail at which the series is cut.
const TAIL_TOLERANCE: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmpParams {
    pub lambda: f64,
    pub nu: f64,
    /// Maximum number of series terms before giving up.
    pub truncation: usize,
}

/// A CMP distribution with its series evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct Cmp {
    params: CmpParams,
    log_normalizer: f64,
    terms: usize,
}

impl CmpParams {
    pub fn new(lambda: f64, nu: f64) -> Result<Self> {
        Self::with_truncation(lambda, nu, DEFAULT_MAX_TERMS)
    }

    pub fn with_truncation(lambda: f64, nu: f64, truncation: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return domain(format!("lambda must be positive and finite, got {lambda}"));
        }
        if !nu.is_finite() {
            return domain(format!("nu must be finite, got {nu}"));
        }
        if truncation == 0 {
            return domain("truncation must be positive");
        }
        Ok(Self {
            lambda,
            nu,
            truncation,
        })
    }

    fn check_convergent(&self) -> Result<()> {
        if self.nu < 0.0 || (self.nu == 0.0 && self.lambda >= 1.0) {
            return Err(Error::Divergent {
                lambda: self.lambda,
                nu: self.nu,
            });
        }
        Ok(())
    }

    #[inline]
    fn ln_term(&self, j: usize) -> f64 {
        j as f64 * self.lambda.ln() - self.nu * ln_factorial(j)
    }

    /// `ln M(lambda, nu)` with the number of terms used.
    pub fn log_normalizer(&self) -> Result<(f64, usize)> {
        self.check_convergent()?;
        let ln_lambda = self.lambda.ln();
        let mut terms: Vec<f64> = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for j in 0..self.truncation {
            let t = self.ln_term(j);
            terms.push(t);
            running = log_add(running, t);
            // Ratio of the next term to this one: lambda / (j+1)^nu, which
            // decreases in j. Once it is below one the remaining tail is
            // bounded by a geometric series.
            let ln_ratio = ln_lambda - self.nu * ((j + 1) as f64).ln();
            if ln_ratio < 0.0 {
                let r = ln_ratio.exp();
                let ln_tail = t + ln_ratio - (-r).ln_1p();
                if ln_tail - running < TAIL_TOLERANCE.ln() {
                    return Ok((log_sum_exp(&terms), terms.len()));
                }
            }
        }
        Err(Error::CapExceeded {
            what: "CMP normalizer series",
            required: self.truncation as u128 + 1,
            cap: self.truncation as u128,
        })
    }

    pub fn build(&self) -> Result<Cmp> {
        let (log_normalizer, terms) = self.log_normalizer()?;
        Ok(Cmp {
            params: *self,
            log_normalizer,
            terms,
        })
    }

    pub fn pmf(&self, x: usize) -> Result<f64> {
        self.build().map(|c| c.pmf(x))
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Cmp {
    pub fn params(&self) -> &CmpParams {
        &self.params
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Number of series terms summed; the truncation range is `0..terms`.
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn ln_pmf(&self, x: usize) -> f64 {
        self.params.ln_term(x) - self.log_normalizer
    }

    pub fn pmf(&self, x: usize) -> f64 {
        self.ln_pmf(x).exp()
    }
}

/// `X | X + Y = m` for independent `X ~ CMP(lambda1, nu)`,
/// `Y ~ CMP(lambda2, nu)` is `COMB(m, lambda1 / (lambda1 + lambda2), nu)`.
pub fn comb_from_cmp_conditional(
    lambda1: f64,
    lambda2: f64,
    nu: f64,
    m: usize,
) -> Result<CombParams> {
    if !(lambda1 > 0.0 && lambda2 > 0.0) {
        return domain(format!(
            "rates must be positive, got ({lambda1}, {lambda2})"
        ));
    }
    CmpParams::new(lambda1, nu)?.check_convergent()?;
    CombParams::new(m, lambda1 / (lambda1 + lambda2), nu)
}
