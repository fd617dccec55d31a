use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::Posterior;
use crate::error::{domain, Error, Result};
use crate::special::log_sum_exp;

/// Uniform lattice `lo, ..., hi` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return domain(format!(
                "axis bounds must be finite and increasing: [{lo}, {hi}]"
            ));
        }
        if points < 32 {
            return domain(format!("axis needs at least 32 points, got {points}"));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.lo + span * i as f64 / last)
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    /// Same range, spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

/// Trapezoidal weights for strictly increasing nodes.
fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
            let right = if i + 1 < n {
                nodes[i + 1] - nodes[i]
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub psi: GridAxis,
    pub nu: GridAxis,
}

impl Default for GridSpec {
    /// `psi` in `[-5, 5]`, `nu` in `[-4, 6]`, 401 points each.
    fn default() -> Self {
        Self {
            psi: GridAxis {
                lo: -5.0,
                hi: 5.0,
                points: 401,
            },
            nu: GridAxis {
                lo: -4.0,
                hi: 6.0,
                points: 401,
            },
        }
    }
}

impl GridSpec {
    pub fn refined(&self) -> Self {
        Self {
            psi: self.psi.refined(),
            nu: self.nu.refined(),
        }
    }
}

/// Posterior log density on a `(psi, nu)` lattice, normalized so the
/// trapezoidal integral over the lattice is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorGrid {
    psi_axis: Vec<f64>,
    nu_axis: Vec<f64>,
    /// Row-major: index `i * nu_axis.len() + j` for `(psi_i, nu_j)`.
    log_density: Vec<f64>,
    /// Log of the trapezoidal integral of the unnormalized kernel.
    log_normalizer: f64,
}

/// Kernel values on the lattice, row by row. Rows are evaluated in parallel
/// and collected in order.
pub(crate) fn evaluate_kernel(
    post: &Posterior,
    spec: &GridSpec,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    GridAxis::new(spec.psi.lo, spec.psi.hi, spec.psi.points)?;
    GridAxis::new(spec.nu.lo, spec.nu.hi, spec.nu.points)?;
    let psi = spec.psi.nodes();
    let nu = spec.nu.nodes();
    let rows: Vec<Vec<f64>> = psi
        .par_iter()
        .map(|&x| nu.iter().map(|&y| post.log_kernel(x, y)).collect())
        .collect();
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        let (i, j) = (idx / nu.len(), idx % nu.len());
        return Err(Error::Numeric(format!(
            "kernel is {} at psi = {}, nu = {}",
            values[idx], psi[i], nu[j]
        )));
    }
    Ok((psi, nu, values))
}

impl PosteriorGrid {
    pub fn evaluate(post: &Posterior, spec: &GridSpec) -> Result<Self> {
        let (psi_axis, nu_axis, kernel) = evaluate_kernel(post, spec)?;
        let wp = trapezoid_weights(&psi_axis);
        let wn = trapezoid_weights(&nu_axis);
        let nn = nu_axis.len();
        let weighted: Vec<f64> = kernel
            .iter()
            .enumerate()
            .map(|(idx, v)| v + (wp[idx / nn] * wn[idx % nn]).ln())
            .collect();
        let log_normalizer = log_sum_exp(&weighted);
        let log_density = kernel.iter().map(|v| v - log_normalizer).collect();
        Ok(Self {
            psi_axis,
            nu_axis,
            log_density,
            log_normalizer,
        })
    }

    pub fn psi_axis(&self) -> &[f64] {
        &self.psi_axis
    }

    pub fn nu_axis(&self) -> &[f64] {
        &self.nu_axis
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn density(&self, i: usize, j: usize) -> f64 {
        self.log_density[i * self.nu_axis.len() + j].exp()
    }

    /// Trapezoidal weight times density at every node; sums to one.
    pub fn cell_masses(&self) -> Vec<f64> {
        let wp = trapezoid_weights(&self.psi_axis);
        let wn = trapezoid_weights(&self.nu_axis);
        let nn = self.nu_axis.len();
        self.log_density
            .iter()
            .enumerate()
            .map(|(idx, ld)| wp[idx / nn] * wn[idx % nn] * ld.exp())
            .collect()
    }

    /// Lattice node with the largest density: `(psi, nu)`. Ties go to the
    /// first node in row-major order.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = 0;
        for (idx, v) in self.log_density.iter().enumerate() {
            if *v > self.log_density[best] {
                best = idx;
            }
        }
        let nn = self.nu_axis.len();
        (self.psi_axis[best / nn], self.nu_axis[best % nn])
    }

    /// Total variation between this grid and the bivariate normal
    /// `N(mean, cov)`, both taken as densities on the lattice nodes with
    /// trapezoidal weights.
    pub fn tv_to_normal(&self, mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<f64> {
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if !(det > 0.0 && cov[0][0] > 0.0) {
            return domain("covariance must be positive definite");
        }
        let inv = [
            [cov[1][1] / det, -cov[0][1] / det],
            [-cov[1][0] / det, cov[0][0] / det],
        ];
        let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
        let wp = trapezoid_weights(&self.psi_axis);
        let wn = trapezoid_weights(&self.nu_axis);
        let nn = self.nu_axis.len();
        let mut tv = 0.0;
        for (idx, ld) in self.log_density.iter().enumerate() {
            let (i, j) = (idx / nn, idx % nn);
            let d = [self.psi_axis[i] - mean[0], self.nu_axis[j] - mean[1]];
            let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1])
                + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
            let normal = norm * (-0.5 * q).exp();
            tv += wp[i] * wn[j] * (ld.exp() - normal).abs();
        }
        Ok(0.5 * tv)
    }

    /// CSV with a schema comment line and columns `psi,nu,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# schema_version: 1")?;
        writeln!(out, "psi,nu,density")?;
        let nn = self.nu_axis.len();
        for (idx, ld) in self.log_density.iter().enumerate() {
            writeln!(
                out,
                "{},{},{:e}",
                self.psi_axis[idx / nn],
                self.nu_axis[idx % nn],
                ld.exp()
            )?;
        }
        Ok(())
    }
}
