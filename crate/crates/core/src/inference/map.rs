use serde::{Deserialize, Serialize};

use super::grid::{evaluate_kernel, GridSpec};
use super::kernel::Posterior;
use super::Hyperparams;
use crate::comb::CombNatural;
use crate::error::{domain, Error, Result};

/// Newton refinement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    /// Seeding lattice.
    pub grid: GridSpec,
    /// Finite-difference step, scaled by `max(1, |x|)` per coordinate.
    pub fd_step: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            fd_step: 1e-4,
            grad_tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Posterior mode and the inverse of the negative Hessian there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapResult {
    pub psi_hat: f64,
    pub nu_hat: f64,
    pub sigma: [[f64; 2]; 2],
    pub iterations: usize,
    pub grad_norm: f64,
    pub log_kernel: f64,
}

impl MapResult {
    /// `n` times the fitted pmf at the mode.
    pub fn fitted_counts(&self, m: usize, n: f64) -> Result<Vec<f64>> {
        fitted_counts(self, m, n)
    }
}

struct Derivatives {
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

fn finite_differences(f: &impl Fn(f64, f64) -> f64, x: [f64; 2], step: f64) -> Derivatives {
    let h = [step * x[0].abs().max(1.0), step * x[1].abs().max(1.0)];
    let at = |dx: f64, dy: f64| f(x[0] + dx, x[1] + dy);
    let f0 = at(0.0, 0.0);
    let fxp = at(h[0], 0.0);
    let fxm = at(-h[0], 0.0);
    let fyp = at(0.0, h[1]);
    let fym = at(0.0, -h[1]);
    let grad = [(fxp - fxm) / (2.0 * h[0]), (fyp - fym) / (2.0 * h[1])];
    let hxx = (fxp - 2.0 * f0 + fxm) / (h[0] * h[0]);
    let hyy = (fyp - 2.0 * f0 + fym) / (h[1] * h[1]);
    let hxy = (at(h[0], h[1]) - at(h[0], -h[1]) - at(-h[0], h[1]) + at(-h[0], -h[1]))
        / (4.0 * h[0] * h[1]);
    Derivatives {
        grad,
        hess: [[hxx, hxy], [hxy, hyy]],
    }
}

fn invert(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

impl Posterior {
    /// Grid argmax refined by Newton ascent on finite-difference derivatives.
    pub fn map_estimate(&self, opts: &MapOptions) -> Result<MapResult> {
        let (psi, nu, values) = evaluate_kernel(self, &opts.grid)?;
        let best = values
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
        let mut x = [psi[best / nu.len()], nu[best % nu.len()]];
        let f = |a: f64, b: f64| self.log_kernel(a, b);
        let mut fx = f(x[0], x[1]);
        let mut trace = vec![x];

        for iter in 0..=opts.max_iter {
            let d = finite_differences(&f, x, opts.fd_step);
            let grad_norm = d.grad[0].hypot(d.grad[1]);
            let neg_hess = [
                [-d.hess[0][0], -d.hess[0][1]],
                [-d.hess[1][0], -d.hess[1][1]],
            ];
            let pd = neg_hess[0][0] > 0.0
                && neg_hess[0][0] * neg_hess[1][1] - neg_hess[0][1] * neg_hess[1][0] > 0.0;
            if grad_norm < opts.grad_tol {
                if !pd {
                    return Err(Error::Numeric(format!(
                        "Hessian at ({}, {}) is not negative definite",
                        x[0], x[1]
                    )));
                }
                let sigma =
                    invert(neg_hess).ok_or_else(|| Error::Numeric("singular Hessian".into()))?;
                return Ok(MapResult {
                    psi_hat: x[0],
                    nu_hat: x[1],
                    sigma,
                    iterations: iter,
                    grad_norm,
                    log_kernel: fx,
                });
            }
            if iter == opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    grad_norm,
                    trace,
                });
            }
            // Newton direction when the Hessian is usable, gradient otherwise.
            let dir = match (pd, invert(neg_hess)) {
                (true, Some(inv)) => [
                    inv[0][0] * d.grad[0] + inv[0][1] * d.grad[1],
                    inv[1][0] * d.grad[0] + inv[1][1] * d.grad[1],
                ],
                _ => [d.grad[0] / grad_norm, d.grad[1] / grad_norm],
            };
            let mut t = 1.0;
            for _ in 0..50 {
                let y = [x[0] + t * dir[0], x[1] + t * dir[1]];
                let fy = f(y[0], y[1]);
                if fy >= fx {
                    x = y;
                    fx = fy;
                    break;
                }
                t *= 0.5;
            }
            trace.push(x);
        }
        unreachable!("loop returns on its final iteration")
    }
}

/// MAP estimate with default tempering and options.
pub fn map_estimate(hyper: &Hyperparams) -> Result<MapResult> {
    Posterior::new(*hyper).map_estimate(&MapOptions::default())
}

/// `n P{W = k}` at the MAP, `k = 0..=m`.
pub fn fitted_counts(map: &MapResult, m: usize, n: f64) -> Result<Vec<f64>> {
    if !(n.is_finite() && n >= 0.0) {
        return domain(format!("n must be a non-negative count, got {n}"));
    }
    let dist = CombNatural::new(m, map.psi_hat, map.nu_hat)?;
    Ok(dist.pmf_table().into_iter().map(|p| n * p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_prior_mode_is_the_tempering_centre() {
        let map = map_estimate(&Hyperparams::flat(6)).unwrap();
        assert_abs_diff_eq!(map.psi_hat, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(map.nu_hat, 1.0, epsilon = 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(map.sigma[i][j], id, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn fitted_counts_fair_binomial() {
        let map = MapResult {
            psi_hat: 0.0,
            nu_hat: 1.0,
            sigma: [[1.0, 0.0], [0.0, 1.0]],
            iterations: 0,
            grad_norm: 0.0,
            log_kernel: 0.0,
        };
        let fit = fitted_counts(&map, 2, 4.0).unwrap();
        for (got, want) in fit.iter().zip([1.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(fitted_counts(&map, 2, -1.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let opts = MapOptions {
            max_iter: 0,
            ..MapOptions::default()
        };
        let hyper = Hyperparams::new(74.0, 88.69, 20.0, 6).unwrap();
        match Posterior::new(hyper).map_estimate(&opts) {
            Err(Error::NoConvergence { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
