use serde::{Deserialize, Serialize};

use super::Hyperparams;
use crate::comb::{log_partition, log_partition_derivatives};
use crate::error::{domain, Result};
use crate::special::ln_normal_pdf;

/// Independent normal tempering densities on `psi` and `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalTempering {
    pub psi_mean: f64,
    pub psi_sd: f64,
    pub nu_mean: f64,
    pub nu_sd: f64,
}

impl Default for NormalTempering {
    /// `phi(psi) phi(nu - 1)`: centred on the fair binomial.
    fn default() -> Self {
        Self {
            psi_mean: 0.0,
            psi_sd: 1.0,
            nu_mean: 1.0,
            nu_sd: 1.0,
        }
    }
}

impl NormalTempering {
    pub fn new(psi_mean: f64, psi_var: f64, nu_mean: f64, nu_var: f64) -> Result<Self> {
        if ![psi_mean, psi_var, nu_mean, nu_var]
            .iter()
            .all(|x| x.is_finite())
        {
            return domain("tempering parameters must be finite");
        }
        if psi_var <= 0.0 || nu_var <= 0.0 {
            return domain("tempering variances must be positive");
        }
        Ok(Self {
            psi_mean,
            psi_sd: psi_var.sqrt(),
            nu_mean,
            nu_sd: nu_var.sqrt(),
        })
    }

    pub fn ln_density(&self, psi: f64, nu: f64) -> f64 {
        ln_normal_pdf(psi, self.psi_mean, self.psi_sd) + ln_normal_pdf(nu, self.nu_mean, self.nu_sd)
    }
}

/// A conjugate posterior (or prior): hyperparameters plus tempering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub hyper: Hyperparams,
    pub tempering: NormalTempering,
}

impl Posterior {
    pub fn new(hyper: Hyperparams) -> Self {
        Self {
            hyper,
            tempering: NormalTempering::default(),
        }
    }

    pub fn with_tempering(hyper: Hyperparams, tempering: NormalTempering) -> Self {
        Self { hyper, tempering }
    }

    /// `ln g(psi, nu) + a psi - b nu - c ln Z(psi, nu)`.
    pub fn log_kernel(&self, psi: f64, nu: f64) -> f64 {
        let Hyperparams { a, b, c, m } = self.hyper;
        let mut v = self.tempering.ln_density(psi, nu) + a * psi - b * nu;
        if c != 0.0 {
            v -= c * log_partition(m, psi, nu);
        }
        v
    }

    /// Analytic gradient and Hessian of the log kernel.
    pub(crate) fn log_kernel_derivatives(
        &self,
        psi: f64,
        nu: f64,
    ) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let Hyperparams { a, b, c, m } = self.hyper;
        let t = &self.tempering;
        let (ln_z, gz, hz) = log_partition_derivatives(m, psi, nu);
        let value = t.ln_density(psi, nu) + a * psi - b * nu - c * ln_z;
        let grad = [
            -(psi - t.psi_mean) / (t.psi_sd * t.psi_sd) + a - c * gz[0],
            -(nu - t.nu_mean) / (t.nu_sd * t.nu_sd) - b - c * gz[1],
        ];
        let hess = [
            [-1.0 / (t.psi_sd * t.psi_sd) - c * hz[0][0], -c * hz[0][1]],
            [-c * hz[1][0], -1.0 / (t.nu_sd * t.nu_sd) - c * hz[1][1]],
        ];
        (value, grad, hess)
    }

    /// The unique maximizer of the (strictly log-concave) kernel, by damped
    /// Newton with analytic derivatives.
    pub(crate) fn mode(&self) -> [f64; 2] {
        let mut x = [self.tempering.psi_mean, self.tempering.nu_mean];
        let (mut fx, _, _) = self.log_kernel_derivatives(x[0], x[1]);
        for _ in 0..500 {
            let (_, g, h) = self.log_kernel_derivatives(x[0], x[1]);
            if g[0].hypot(g[1]) < 1e-12 * (1.0 + fx.abs()) {
                break;
            }
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let step = [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ];
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let y = [x[0] + t * step[0], x[1] + t * step[1]];
                let fy = self.log_kernel(y[0], y[1]);
                if fy >= fx {
                    moved = y != x;
                    x = y;
                    fx = fy;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        x
    }
}

/// Log posterior kernel with the default `phi(psi) phi(nu - 1)` tempering.
pub fn log_posterior_kernel(psi: f64, nu: f64, hyper: &Hyperparams) -> f64 {
    Posterior::new(*hyper).log_kernel(psi, nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_split_factorial;
    use approx::assert_abs_diff_eq;

    fn soybean() -> Hyperparams {
        Hyperparams::new(74.0, 88.691_214_118_576_32, 20.0, 6).unwrap()
    }

    /// Z summed directly in linear space.
    fn z_direct(m: usize, psi: f64, nu: f64) -> f64 {
        (0..=m)
            .map(|k| (psi * k as f64).exp() / ln_split_factorial(m, k).exp().powf(nu))
            .sum()
    }

    #[test]
    fn flat_kernel_is_the_tempering() {
        let h = Hyperparams::flat(6);
        let v = log_posterior_kernel(0.4, -0.3, &h);
        let expect = ln_normal_pdf(0.4, 0.0, 1.0) + ln_normal_pdf(-0.3, 1.0, 1.0);
        assert_abs_diff_eq!(v, expect, epsilon = 1e-14);
        let mode = Posterior::new(h).mode();
        assert_abs_diff_eq!(mode[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mode[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_against_direct_partition() {
        let h = soybean();
        for &(psi, nu) in &[(0.3, 0.54), (-1.1, 2.3)] {
            let expect = ln_normal_pdf(psi, 0.0, 1.0) + ln_normal_pdf(nu, 1.0, 1.0) + h.a * psi
                - h.b * nu
                - h.c * z_direct(6, psi, nu).ln();
            assert_abs_diff_eq!(log_posterior_kernel(psi, nu, &h), expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn analytic_gradient_vanishes_at_mode() {
        let post = Posterior::new(soybean());
        let x = post.mode();
        let (_, g, h) = post.log_kernel_derivatives(x[0], x[1]);
        assert!(g[0].hypot(g[1]) < 1e-9);
        assert!(h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0);
    }

    #[test]
    fn tempering_validation() {
        assert!(NormalTempering::new(0.0, 0.0, 1.0, 1.0).is_err());
        let t = NormalTempering::new(0.5, 4.0, 1.0, 0.25).unwrap();
        assert_eq!((t.psi_sd, t.nu_sd), (2.0, 0.5));
    }
}
