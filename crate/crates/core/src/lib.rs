#![no_std]
//! Numerical core for score-based generative modeling on the unit box.
//!
//! Everything here is allocation-based but IO-free and `no_std`: the
//! companion `scorelab` crate carries file formats, configuration and the CLI.
//!
//! Module map:
//! - [`grid`]: cell-centered grid, discrete gradient / divergence / Laplacian
//!   with no-flux boundaries and the Neumann spectral gap.
//! - [`density`]: densities and the bump / tilted families.
//! - [`fpe`]: implicit Chang-Cooper solver for drift-diffusion and an upwind
//!   solver for pure transport.
//! - [`score`]: forward heat process, exact score, score-matching loss,
//!   perturbed score ladders and the reverse density solve.
//! - [`moser`]: exact transfer between two densities via a Neumann Poisson
//!   potential.
//! - [`neural`]: wide networks, random-feature fits and the oscillating
//!   width-`d` weight schedule.
//! - [`particles`]: reflected Euler-Maruyama and flow integrators.
//! - [`metrics`]: L2, weighted L2, H1, W1 and KL.

extern crate alloc;

pub mod density;
pub mod error;
pub mod fpe;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod moser;
pub mod neural;
pub mod particles;
pub mod score;

pub use error::{Error, Result};
