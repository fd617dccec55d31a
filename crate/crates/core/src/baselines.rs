//! Comparison models for count-of-counts data: the binomial fit, the
//! correlated-binomial mixture and the squared-error metric.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::inference::FrequencyTable;
use crate::special::ln_choose;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialFit {
    pub p_hat: f64,
    pub fitted: Vec<f64>,
}

fn binomial_pmf(m: usize, p: f64, k: usize) -> f64 {
    if p == 0.0 {
        f64::from(k == 0)
    } else if p == 1.0 {
        f64::from(k == m)
    } else {
        (ln_choose(m, k) + k as f64 * p.ln() + (m - k) as f64 * (-p).ln_1p()).exp()
    }
}

/// Maximum-likelihood binomial: `p_hat = S1 / (n m)` and expected counts
/// `n Binom(k; m, p_hat)`.
pub fn binomial_mle_fit(table: &FrequencyTable) -> BinomialFit {
    let stats = table.sufficient_stats();
    let m = table.m();
    let n = stats.n as f64;
    let p_hat = stats.s1 as f64 / (n * m as f64);
    let fitted = (0..=m).map(|k| n * binomial_pmf(m, p_hat, k)).collect();
    BinomialFit { p_hat, fitted }
}

/// Correlated binomial: with probability `1 - rho` a `Binomial(m, p)`, with
/// probability `rho` all components equal (`0` w.p. `1 - p`, `m` w.p. `p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CbParams {
    m: usize,
    p: f64,
    rho: f64,
}

impl CbParams {
    pub fn new(m: usize, p: f64, rho: f64) -> Result<Self> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("p out of range [0, 1]: {p}"));
        }
        if !(0.0..=1.0).contains(&rho) {
            return domain(format!("rho out of range [0, 1]: {rho}"));
        }
        Ok(Self { m, p, rho })
    }

    pub fn pmf(&self, k: usize) -> Result<f64> {
        if k > self.m {
            return domain(format!("k = {k} outside 0..={}", self.m));
        }
        let endpoint = if k == 0 {
            1.0 - self.p
        } else if k == self.m {
            self.p
        } else {
            0.0
        };
        Ok((1.0 - self.rho) * binomial_pmf(self.m, self.p, k) + self.rho * endpoint)
    }
}

pub fn cb_pmf(params: &CbParams, k: usize) -> Result<f64> {
    params.pmf(k)
}

/// Sum of squared differences.
pub fn sse(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    if observed.len() != fitted.len() {
        return domain(format!(
            "length mismatch: {} observed, {} fitted",
            observed.len(),
            fitted.len()
        ));
    }
    Ok(observed
        .iter()
        .zip(fitted)
        .map(|(o, f)| (o - f).powi(2))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SOYBEAN_BINOMIAL_FIT, SOYBEAN_CB_FIT, SOYBEAN_COUNTS};
    use approx::assert_abs_diff_eq;

    fn soybean() -> FrequencyTable {
        FrequencyTable::new(6, SOYBEAN_COUNTS.to_vec()).unwrap()
    }

    fn observed() -> Vec<f64> {
        SOYBEAN_COUNTS.iter().map(|&c| c as f64).collect()
    }

    #[test]
    fn binomial_fit_soybean() {
        let fit = binomial_mle_fit(&soybean());
        assert_abs_diff_eq!(fit.p_hat, 74.0 / 120.0, epsilon = 1e-15);
        for (got, want) in fit.fitted.iter().zip(SOYBEAN_BINOMIAL_FIT) {
            assert_abs_diff_eq!(*got, want, epsilon = 0.02);
        }
        assert_abs_diff_eq!(sse(&observed(), &fit.fitted).unwrap(), 8.96, epsilon = 0.03);
    }

    #[test]
    fn binomial_fit_all_zeros() {
        let fit = binomial_mle_fit(&FrequencyTable::new(4, vec![5, 0, 0, 0, 0]).unwrap());
        assert_eq!(fit.p_hat, 0.0);
        assert_eq!(fit.fitted, vec![5.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cb_examples() {
        let cb = CbParams::new(6, 0.6, 1.0).unwrap();
        let table: Vec<f64> = (0..=6).map(|k| cb.pmf(k).unwrap()).collect();
        assert_abs_diff_eq!(table[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(table[6], 0.6, epsilon = 1e-15);
        assert!(table[1..6].iter().all(|&p| p == 0.0));

        let cb = CbParams::new(6, 0.6167, 0.13).unwrap();
        let hand = 0.87 * 0.3833f64.powi(6) + 0.13 * 0.3833;
        assert_abs_diff_eq!(cb.pmf(0).unwrap(), hand, epsilon = 1e-12);
        assert_abs_diff_eq!(cb.pmf(0).unwrap(), 0.0526, epsilon = 1e-4);

        assert!(cb.pmf(7).is_err());
        assert!(CbParams::new(6, 0.5, 1.5).is_err());
        assert!(CbParams::new(6, 0.5, -0.1).is_err());
    }

    #[test]
    fn sse_examples() {
        assert_eq!(sse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(sse(&[1.0], &[1.0, 2.0]).is_err());
        assert_abs_diff_eq!(
            sse(&observed(), &SOYBEAN_CB_FIT).unwrap(),
            4.16,
            epsilon = 0.03
        );
    }
}
