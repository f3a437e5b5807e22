//! Bayesian time-varying Poisson autoregression (TVBARC) and INGARCH
//! (TVBINGARCH) models for count time series.
//!
//! Coefficient functions are B-spline expansions constrained so that every
//! parameter value gives a stable, positive intensity. Posterior sampling uses
//! blocked Hamiltonian Monte Carlo.
//!
//! ```
//! use tvcount::{model::{ModelKind, ModelSpec}, sampler::{run_chain, SamplerConfig}, simgen};
//!
//! let truth = simgen::TrueFunctions::preset("ar1").unwrap();
//! let sim = simgen::simulate(&truth, ModelKind::Ar, 100, 7).unwrap();
//! let config = SamplerConfig { n_iter: 40, n_burnin: 20, ..Default::default() };
//! let fit = run_chain(&ModelSpec::ar(1), &sim.series, &config).unwrap();
//! assert_eq!(fit.len(), 20);
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod posterior;
pub mod sampler;
pub mod simgen;
pub mod spline;

pub use error::{Error, Result};
