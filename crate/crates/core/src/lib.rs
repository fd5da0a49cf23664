//! Evolution of feedforward neural networks with strongly typed genetic
//! programming.
//!
//! A GP tree ([`grammar::GpTree`]) encodes a whole network, topology and
//! weights. [`decoder::decode`] turns it into a [`network::Network`], whose
//! fitness is its training MSE plus a per-neuron penalty. The outer loop in
//! [`evolution::run`] periodically hands the best individuals to a real-coded
//! GA ([`weight_opt`]) that tunes their constants and writes them back.
//!
//! ```no_run
//! use gpann::data::{load_csv, normalize, CsvSchema};
//! use gpann::evolution::{run, EvolutionConfig};
//!
//! let ds = normalize(&load_csv("crates/core/data/iris.csv", &CsvSchema::default())?);
//! let config = EvolutionConfig { effort_budget: 50_000, ..EvolutionConfig::default() };
//! let report = run(&config, &ds, None, None)?;
//! println!("{} neurons, mse {}", report.reachable_neurons, report.train_mse);
//! # Ok::<(), gpann::Error>(())
//! ```

pub mod cli;
pub mod data;
pub mod decoder;
pub mod error;
pub mod evolution;
pub mod grammar;
pub mod network;
pub mod weight_opt;

pub use error::{Error, Result};

/// `git describe`-style identifier of the build.
pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("GPANN_BUILD_ID"));
