//! Run configuration: flat `key = value` pairs (TOML syntax).
//!
//! ```text
//! # prior hyperparameters
//! a = 0
//! b = 0
//! c = 0
//! psi_prior_mean = 0
//! psi_prior_var = 1
//! nu_prior_mean = 1
//! nu_prior_var = 1
//!
//! grid_psi = [-5.0, 5.0]
//! grid_nu = [-4.0, 6.0]
//! grid_points = 401
//!
//! fd_step = 1e-4
//! grad_tol = 1e-8
//! max_iter = 100
//!
//! seed = 0
//! out = "results/soybean"
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::Path;

use comb_stats::inference::{GridAxis, GridSpec, Hyperparams, MapOptions, NormalTempering};
use serde::{Deserialize, Serialize};

use crate::error::{input, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub psi_prior_mean: f64,
    pub psi_prior_var: f64,
    pub nu_prior_mean: f64,
    pub nu_prior_var: f64,
    pub grid_psi: [f64; 2],
    pub grid_nu: [f64; 2],
    pub grid_points: usize,
    pub fd_step: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        let opts = MapOptions::default();
        let temper = NormalTempering::default();
        Self {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            psi_prior_mean: temper.psi_mean,
            psi_prior_var: temper.psi_sd * temper.psi_sd,
            nu_prior_mean: temper.nu_mean,
            nu_prior_var: temper.nu_sd * temper.nu_sd,
            grid_psi: [grid.psi.lo, grid.psi.hi],
            grid_nu: [grid.nu.lo, grid.nu.hi],
            grid_points: grid.psi.points,
            fd_step: opts.fd_step,
            grad_tol: opts.grad_tol,
            max_iter: opts.max_iter,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        let config: Self = toml::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {}", path.display(), e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.prior(1)?;
        self.tempering()?;
        self.map_options()?;
        Ok(())
    }

    pub fn prior(&self, m: usize) -> CliResult<Hyperparams> {
        Ok(Hyperparams::new(self.a, self.b, self.c, m)?)
    }

    pub fn tempering(&self) -> CliResult<NormalTempering> {
        Ok(NormalTempering::new(
            self.psi_prior_mean,
            self.psi_prior_var,
            self.nu_prior_mean,
            self.nu_prior_var,
        )?)
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        Ok(GridSpec {
            psi: GridAxis::new(self.grid_psi[0], self.grid_psi[1], self.grid_points)?,
            nu: GridAxis::new(self.grid_nu[0], self.grid_nu[1], self.grid_points)?,
        })
    }

    pub fn map_options(&self) -> CliResult<MapOptions> {
        if !(self.fd_step > 0.0 && self.fd_step < 1.0) {
            return input(format!("fd_step must lie in (0, 1), got {}", self.fd_step));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return input(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iter == 0 {
            return input("max_iter must be at least 1");
        }
        Ok(MapOptions {
            grid: self.grid()?,
            fd_step: self.fd_step,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library() {
        let config = RunConfig::default();
        assert_eq!(config.grid().unwrap(), GridSpec::default());
        assert_eq!(config.tempering().unwrap(), NormalTempering::default());
        assert_eq!(config.map_options().unwrap(), MapOptions::default());
    }

    #[test]
    fn parses_partial_file() {
        let config: RunConfig = toml::from_str("a = 1.5\ngrid_points = 64\nseed = 9").unwrap();
        assert_eq!(config.a, 1.5);
        assert_eq!(config.grid_points, 64);
        assert_eq!(config.seed, 9);
        assert_eq!(config.c, 0.0);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(toml::from_str::<RunConfig>("alpha = 1").is_err());
        let config: RunConfig = toml::from_str("c = -1").unwrap();
        assert!(config.validate().is_err());
        let config: RunConfig = toml::from_str("grid_points = 8").unwrap();
        assert!(config.validate().is_err());
    }
}
