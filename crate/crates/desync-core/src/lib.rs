//! Desynchronization laboratory.
//!
//! Pulse-coupled oscillator desynchronization treated as numerical
//! optimization. The crate is split into four layers:
//!
//! * [`math`]: objectives, gradients, round bounds and spectral certificates.
//! * [`rounds`]: synchronous vector iterations and a convergence runner.
//! * [`sim`]: a discrete-event simulator of the fire-message protocol.
//! * [`experiment`]: config parsing, trial sweeps and report emission.

pub mod error;
pub mod experiment;
pub mod math;
pub mod rounds;
pub mod sim;

pub use error::{Error, Result};
