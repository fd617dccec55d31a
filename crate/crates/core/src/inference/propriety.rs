//! Numerical witness that the conjugate family is proper.
//!
//! The kernel is integrated over nested boxes `[-L, L]^2` with `L` doubling
//! from 5; each level adds the integral over the new annulus. The family is
//! declared proper at the given hyperparameters when the last annulus adds
//! less than `1e-12` of the accumulated mass.
//!
//! Integration is adaptive Gauss-Legendre on rectangles. A rectangle is
//! dropped when an analytic Gaussian upper bound on the kernel shows its
//! mass is negligible. The bound comes from Jensen's inequality
//! `ln Z >= psi E[Q] - nu E[ln(Q!(m-Q)!)] + H(Q)` with `Q` the COMB pmf at
//! the posterior mode, which makes it tight at the mode.

use serde::Serialize;
use statrs::function::erf::erfc;

use super::kernel::Posterior;
use super::Hyperparams;
use crate::comb::gibbs;
use crate::error::{domain, Result};
use crate::special::{ln_split_factorial, xlogx};

/// Half-width of the innermost box.
pub const BASE_HALF_WIDTH: f64 = 5.0;
/// Relative mass the final annulus may add.
pub const TAIL_TOLERANCE: f64 = 1e-12;

const GL_ORDER: usize = 10;
const MAX_DEPTH: usize = 48;
const LOCAL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProprietyLevel {
    pub half_width: f64,
    /// Integral over `[-L, L]^2`, relative to the kernel value at the mode.
    pub mass: f64,
    /// Integral over the annulus added at this level (the whole box at level 0).
    pub increment: f64,
    pub relative_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProprietyReport {
    pub levels: Vec<ProprietyLevel>,
    /// Posterior mode used as the reference point.
    pub mode: [f64; 2],
    /// Log kernel at the mode; masses are scaled by its exponential.
    pub log_reference: f64,
    /// Log of the integral over the largest box: an estimate of `ln 1/K(a,b,c)`.
    pub log_integral: f64,
    pub tail_tolerance: f64,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect {
                x0: self.x0,
                x1: xm,
                y0: self.y0,
                y1: ym,
            },
            Rect {
                x0: xm,
                x1: self.x1,
                y0: self.y0,
                y1: ym,
            },
            Rect {
                x0: self.x0,
                x1: xm,
                y0: ym,
                y1: self.y1,
            },
            Rect {
                x0: xm,
                x1: self.x1,
                y0: ym,
                y1: self.y1,
            },
        ]
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `P(lo < Z < hi)` for standard normal `Z`, accurate in both tails.
fn normal_interval(lo: f64, hi: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if lo >= 0.0 {
        0.5 * (erfc(lo / s) - erfc(hi / s))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi / s) - erfc(-lo / s))
    } else {
        1.0 - 0.5 * erfc(hi / s) - 0.5 * erfc(-lo / s)
    }
}

/// Separable Gaussian dominating `exp(log_kernel - log_reference)`.
struct GaussianBound {
    centre: [f64; 2],
    sd: [f64; 2],
    log_peak: f64,
}

impl GaussianBound {
    fn new(post: &Posterior, at: [f64; 2], log_reference: f64) -> Self {
        let Hyperparams { a, b, c, m } = post.hyper;
        let t = &post.tempering;
        let q = gibbs(m, at[0], at[1]);
        let mean_k: f64 = q.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let mean_lf: f64 = q
            .iter()
            .enumerate()
            .map(|(k, p)| p * ln_split_factorial(m, k))
            .sum();
        let entropy: f64 = -q.iter().map(|&p| xlogx(p)).sum::<f64>();
        // ln kernel <= ln phi(psi) + alpha psi + ln phi(nu) - beta nu - c H
        let alpha = a - c * mean_k;
        let beta = b - c * mean_lf;
        let (vp, vn) = (t.psi_sd * t.psi_sd, t.nu_sd * t.nu_sd);
        let centre = [t.psi_mean + alpha * vp, t.nu_mean - beta * vn];
        let log_peak = alpha * t.psi_mean + 0.5 * alpha * alpha * vp - beta * t.nu_mean
            + 0.5 * beta * beta * vn
            - (2.0 * std::f64::consts::PI * t.psi_sd * t.nu_sd).ln()
            - c * entropy;
        Self {
            centre,
            sd: [t.psi_sd, t.nu_sd],
            log_peak: log_peak - log_reference,
        }
    }

    fn mass(&self, r: &Rect) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let px = normal_interval(
            (r.x0 - self.centre[0]) / self.sd[0],
            (r.x1 - self.centre[0]) / self.sd[0],
        );
        let py = normal_interval(
            (r.y0 - self.centre[1]) / self.sd[1],
            (r.y1 - self.centre[1]) / self.sd[1],
        );
        self.log_peak.exp() * tau * self.sd[0] * self.sd[1] * px * py
    }
}

struct Integrator<'a> {
    post: &'a Posterior,
    log_reference: f64,
    bound: GaussianBound,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    abs_tol: f64,
}

impl Integrator<'_> {
    fn rule(&self, r: &Rect) -> f64 {
        let (hx, hy) = (0.5 * (r.x1 - r.x0), 0.5 * (r.y1 - r.y0));
        let (cx, cy) = (0.5 * (r.x1 + r.x0), 0.5 * (r.y1 + r.y0));
        let mut acc = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let x = cx + hx * xi;
            let mut row = 0.0;
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                let y = cy + hy * yj;
                row += wj * (self.post.log_kernel(x, y) - self.log_reference).exp();
            }
            acc += wi * row;
        }
        acc * hx * hy
    }

    fn integrate(&self, r: &Rect) -> f64 {
        let whole = self.rule(r);
        self.refine(r, whole, 0)
    }

    fn refine(&self, r: &Rect, whole: f64, depth: usize) -> f64 {
        if self.bound.mass(r) < self.abs_tol {
            return 0.0;
        }
        let parts = r.quarters();
        let estimates = parts.map(|p| self.rule(&p));
        let sum: f64 = estimates.iter().sum();
        if (sum - whole).abs() <= self.abs_tol.max(LOCAL_REL_TOL * sum.abs()) || depth >= MAX_DEPTH
        {
            return sum;
        }
        parts
            .iter()
            .zip(estimates)
            .map(|(p, e)| self.refine(p, e, depth + 1))
            .sum()
    }
}

impl Posterior {
    /// Integrate the kernel on `expansion_levels` nested boxes.
    pub fn propriety_check(&self, expansion_levels: usize) -> Result<ProprietyReport> {
        if expansion_levels < 2 {
            return domain("need at least two expansion levels");
        }
        let mode = self.mode();
        let (log_reference, _, hess) = self.log_kernel_derivatives(mode[0], mode[1]);
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let laplace_mass = 2.0 * std::f64::consts::PI / det.sqrt();
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        let integrator = Integrator {
            post: self,
            log_reference,
            bound: GaussianBound::new(self, mode, log_reference),
            nodes,
            weights,
            abs_tol: 1e-16 * laplace_mass,
        };

        let mut levels = Vec::with_capacity(expansion_levels);
        let mut mass = 0.0;
        let mut inner = 0.0;
        for i in 0..expansion_levels {
            let l = BASE_HALF_WIDTH * (1u64 << i) as f64;
            let increment = if i == 0 {
                integrator.integrate(&Rect {
                    x0: -l,
                    x1: l,
                    y0: -l,
                    y1: l,
                })
            } else {
                // annulus [-l, l]^2 minus [-inner, inner]^2
                [
                    Rect {
                        x0: -l,
                        x1: l,
                        y0: inner,
                        y1: l,
                    },
                    Rect {
                        x0: -l,
                        x1: l,
                        y0: -l,
                        y1: -inner,
                    },
                    Rect {
                        x0: -l,
                        x1: -inner,
                        y0: -inner,
                        y1: inner,
                    },
                    Rect {
                        x0: inner,
                        x1: l,
                        y0: -inner,
                        y1: inner,
                    },
                ]
                .iter()
                .map(|r| integrator.integrate(r))
                .sum()
            };
            mass += increment;
            let relative_increment = if mass > 0.0 {
                increment / mass
            } else {
                f64::INFINITY
            };
            levels.push(ProprietyLevel {
                half_width: l,
                mass,
                increment,
                relative_increment,
            });
            inner = l;
        }
        let last = levels.last().expect("at least two levels");
        let converged = mass > 0.0 && mass.is_finite() && last.relative_increment < TAIL_TOLERANCE;
        Ok(ProprietyReport {
            log_integral: log_reference + mass.ln(),
            levels,
            mode,
            log_reference,
            tail_tolerance: TAIL_TOLERANCE,
            converged,
        })
    }
}

/// Propriety check with the default tempering.
pub fn propriety_check(hyper: &Hyperparams, expansion_levels: usize) -> Result<ProprietyReport> {
    Posterior::new(*hyper).propriety_check(expansion_levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let x18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_abs_diff_eq!(x18, 2.0 / 19.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_interval_tails() {
        // statrs erfc is good to ~1e-10, plenty for a pruning bound
        assert_abs_diff_eq!(
            normal_interval(-1.0, 1.0),
            0.682_689_492_137_085_9,
            epsilon = 1e-10
        );
        assert!(normal_interval(30.0, 31.0) > 0.0);
        assert_abs_diff_eq!(
            normal_interval(-f64::INFINITY, f64::INFINITY),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn flat_prior_integrates_to_one() {
        let report = propriety_check(&Hyperparams::flat(6), 3).unwrap();
        assert!(report.converged);
        assert_abs_diff_eq!(report.log_integral, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_form_without_partition() {
        // c = 0: the integral of phi(psi) e^(a psi) phi(nu-1) e^(-b nu) is
        // exp(a^2/2) exp(-b + b^2/2).
        let (a, b) = (1.3, -0.8);
        let report = propriety_check(&Hyperparams::new(a, b, 0.0, 4).unwrap(), 4).unwrap();
        assert!(report.converged);
        assert_abs_diff_eq!(
            report.log_integral,
            0.5 * a * a - b + 0.5 * b * b,
            epsilon = 1e-9
        );
    }

    #[test]
    fn needs_two_levels() {
        assert!(propriety_check(&Hyperparams::flat(6), 1).is_err());
    }
}
