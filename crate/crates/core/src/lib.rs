//! Acceptance-sampling toolkit.
//!
//! * [`plans`]: fixed-sample-size plans from the normal/Poisson
//!   approximations, tolerance sweeps and the embedded AQL plan tables.
//! * [`sprt`]: a truncated sequential probability ratio test with a
//!   sample-size ceiling, plus an exact dynamic-programming performance
//!   calculator.
//! * [`sim`]: a seeded, order-independent Monte Carlo engine over finite
//!   (hypergeometric) and infinite (binomial) lots, and Welch's t-test.
//! * [`service`]: an event-sourced HTTP service for live inspection sessions.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod plans;
pub mod service;
pub mod sim;
pub mod sprt;

pub use error::{Error, Result};
