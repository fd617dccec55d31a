//! Conway-Maxwell binomial (COMB), Poisson (CMP) and multinomial (COMM)
//! distributions, with exact conjugate Bayesian inference for COMB and the
//! exchangeable representation of its Bernoulli components.
//!
//! ```
//! use comb_stats::comb::CombParams;
//!
//! // nu < 1: positively associated components, heavier tails than binomial
//! let dist = CombParams::new(6, 0.5, 0.5).unwrap();
//! let table = dist.pmf_table();
//! assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! ```

pub mod baselines;
pub mod cmp;
pub mod comb;
pub mod comm;
pub mod data;
pub mod error;
pub mod exchangeable;
pub mod gof;
pub mod inference;
pub mod special;

pub use comb::{CombNatural, CombParams};
pub use error::{Error, Result};
