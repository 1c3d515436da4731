//! Drift removal for horizontal EOG recordings.
//!
//! The central pipeline ([`pipeline::fgd_pipeline`]) finds saccades in the
//! derivative, cuts them out, re-levels what is left into a continuous
//! baseline and subtracts that baseline's deep wavelet approximation. Three
//! conventional detrenders live in [`methods`] for comparison, and
//! [`simulate`] and [`eval`] provide a synthetic benchmark with ground truth.

pub mod benchmark;
pub mod blink;
pub mod error;
pub mod eval;
pub mod io;
pub mod methods;
pub mod pipeline;
pub mod reconstruct;
pub mod saccade;
pub mod signal;
pub mod simulate;
pub mod wavelet;

pub use error::{Error, Result};
pub use signal::{differentiate, SampledSignal};
