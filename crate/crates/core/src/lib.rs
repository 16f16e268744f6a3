//! Discrete-time congestion simulation under central-authority signaling.
//!
//! A central authority observes per-resource costs and broadcasts either a
//! scalar or an interval per resource. Agents of risk type `omega` pick the
//! resource (or path) minimising `omega * lo + (1 - omega) * hi`. The crate
//! provides:
//!
//! * [`network`]: TNTP network/demand ingestion and tight shortest-path DAGs,
//! * [`costs`]: BPR travel times, capacity excess and social cost,
//! * [`signaling`]: cost histories and the pluggable signaling schemes,
//! * [`population`]: risk types and the population-renewal process,
//! * [`assignment`]: mapping signals and populations to flows,
//! * [`engine`]: the per-period network simulation and its CSV output,
//! * [`abstract_model`]: the M-resource model, convergence checks and the
//!   flapping construction,
//! * [`cli`]: the `signalsim` command line.

pub mod abstract_model;
pub mod assignment;
pub mod cli;
pub mod costs;
pub mod engine;
pub mod error;
pub mod instances;
pub mod network;
pub mod population;
pub mod rng;
pub mod signaling;
pub mod stats;

pub use error::{Error, Result};
