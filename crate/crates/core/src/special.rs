//! Small numerical helpers shared across the distributions.

use statrs::function::gamma::ln_gamma;

/// `ln(n!)`. Exact integer factorials up to `20!`, log-gamma beyond.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    if n <= 20 {
        ((1..=n as u64).product::<u64>() as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(m, k)` via log-gamma. Symmetric in `k <-> m - k` bit for bit.
#[inline]
pub fn ln_choose(m: usize, k: usize) -> f64 {
    debug_assert!(k <= m);
    ln_factorial(m) - (ln_factorial(k) + ln_factorial(m - k))
}

/// `ln[k! (m-k)!]`, the per-observation statistic of the natural parameterization.
#[inline]
pub fn ln_split_factorial(m: usize, k: usize) -> f64 {
    debug_assert!(k <= m);
    ln_factorial(k) + ln_factorial(m - k)
}

/// Log of the multinomial coefficient `m! / (k_1! ... k_r!)` with `m = sum k_i`.
pub fn ln_multinomial(counts: &[usize]) -> f64 {
    let m: usize = counts.iter().sum();
    ln_factorial(m) - counts.iter().map(|&k| ln_factorial(k)).sum::<f64>()
}

/// Pairwise (tree) summation. Deterministic for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let (lo, hi) = xs.split_at(xs.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// `ln sum exp(x_i)`, shifting by the maximum. Returns `-inf` for an empty
/// slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let scaled: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    max + pairwise_sum(&scaled).ln()
}

/// Log density of `N(mean, sd^2)` at `x`.
#[inline]
pub fn ln_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Logistic transform `e^psi / (1 + e^psi)` without overflow.
#[inline]
pub fn logistic(psi: f64) -> f64 {
    if psi >= 0.0 {
        1.0 / (1.0 + (-psi).exp())
    } else {
        let e = psi.exp();
        e / (1.0 + e)
    }
}

/// Log-odds `ln(p / (1 - p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `x * ln(x)` with the convention `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(6) - 720f64.ln()).abs() < 1e-13);
        assert!((ln_choose(6, 3) - 20f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn choose_is_symmetric_exactly() {
        for m in 0..40 {
            for k in 0..=m {
                assert_eq!(ln_choose(m, k), ln_choose(m, m - k));
            }
        }
    }

    #[test]
    fn lse_handles_infinities() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn logistic_roundtrip() {
        for &psi in &[-30.0, -1.2, 0.0, 0.3, 5.0] {
            assert!((logit(logistic(psi)) - psi).abs() < 1e-9);
        }
        assert_eq!(logistic(0.0), 0.5);
    }
}
