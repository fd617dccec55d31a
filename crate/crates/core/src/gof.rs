//! Pearson chi-square goodness of fit for discrete samples.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of observed category counts against model probabilities.
///
/// Adjacent categories are pooled left to right until each pooled expected
/// count is at least `min_expected`; a short remainder joins the last pool.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return domain("observed and probability vectors differ in length");
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return domain("no observations");
    }
    let n = n as f64;
    let mut pools: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += n * p;
        if e >= min_expected {
            pools.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pools.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pools.push((o, e)),
        }
    }
    if pools.len() < 2 {
        return domain("fewer than two categories after pooling");
    }
    let statistic: f64 = pools.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pools.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit() {
        let t = chi_square_gof(&[25, 50, 25], &[0.25, 0.5, 0.25], 5.0).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_small_cells() {
        let t = chi_square_gof(&[1, 49, 50], &[0.01, 0.49, 0.5], 5.0).unwrap();
        assert_eq!(t.dof, 1);
    }

    #[test]
    fn gross_misfit_rejected() {
        let t = chi_square_gof(&[90, 10], &[0.5, 0.5], 5.0).unwrap();
        assert!(t.p_value < 1e-10);
    }
}
