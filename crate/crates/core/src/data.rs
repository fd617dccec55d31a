//! Seedling-competition reference data: 20 pots of six seedlings, each pot
//! scored for the number of seedlings judged successful.

/// Number of pots with `k = 0..=6` successful seedlings.
pub const SOYBEAN_COUNTS: [u64; 7] = [0, 2, 2, 5, 5, 3, 3];

/// Seedlings per pot.
pub const SOYBEAN_M: usize = 6;

/// Published binomial expected counts.
pub const SOYBEAN_BINOMIAL_FIT: [f64; 7] = [0.06, 0.61, 2.46, 5.28, 6.37, 4.10, 1.09];

/// Published correlated-binomial expected counts (reference values only).
pub const SOYBEAN_CB_FIT: [f64; 7] = [1.19, 0.79, 2.73, 5.03, 5.21, 2.87, 2.17];

/// Published COMB expected counts.
pub const SOYBEAN_COMB_FIT: [f64; 7] = [0.35, 1.24, 2.76, 4.36, 5.04, 4.14, 2.12];

/// Published posterior mode `(psi, nu)`.
pub const SOYBEAN_MAP: [f64; 2] = [0.30, 0.54];

/// Published inverse Hessian at the mode.
pub const SOYBEAN_SIGMA: [[f64; 2]; 2] = [[0.028, 0.018], [0.018, 0.063]];
