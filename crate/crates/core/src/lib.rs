//! Quasi-steady-state simulator of an islanded microgrid in which a
//! photovoltaic array (with perturb-and-observe maximum power point
//! tracking) and a direct-methanol fuel cell feed a shared constant-power
//! load through two droop-controlled inverters.
//!
//! Modules:
//! - [`pv`] — ideal single-diode PV array (I-V / P-V curves, MPP oracle)
//! - [`mppt`] — perturb-and-observe tracker
//! - [`dmfc`] — DMFC Nernst/Faraday limits and equivalent-circuit voltage
//! - [`droop`] — power-transfer equations and the voltage/frequency droop law
//! - [`network`] — scenario builder, phasor bus solve, and the time stepper
//! - [`config`] — scenario file schema and `key=value` overrides
//!
//! All model types are immutable values and all operations are pure
//! functions; independent runs may execute concurrently.

pub mod config;
pub mod dmfc;
pub mod droop;
pub mod error;
pub mod mppt;
pub mod network;
pub mod pv;

pub use error::{Result, SimError};
