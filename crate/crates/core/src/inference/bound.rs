use crate::error::{domain, Result};
use crate::special::{ln_split_factorial, xlogx};

/// Jensen lower bound on `ln Z(psi, nu)` for any distribution `q` on `0..=m`:
///
/// ```text
/// ln Z >= psi E[Q] - nu E[ln(Q!(m-Q)!)] - sum_k q_k ln q_k
/// ```
///
/// with `0 ln 0 = 0`. Equality holds when `q` is the COMB pmf at
/// `(psi, nu)`.
pub fn jensen_lower_bound(psi: f64, nu: f64, m: usize, q: &[f64]) -> Result<f64> {
    if q.len() != m + 1 {
        return domain(format!("q has {} entries, expected {}", q.len(), m + 1));
    }
    if q.iter().any(|&x| x.is_nan() || x < 0.0) {
        return domain("q must be non-negative");
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return domain(format!("q sums to {total}, not 1"));
    }
    let mut bound = 0.0;
    for (k, &qk) in q.iter().enumerate() {
        if qk > 0.0 {
            bound += qk * (psi * k as f64 - nu * ln_split_factorial(m, k));
        }
        bound -= xlogx(qk);
    }
    Ok(bound)
}
