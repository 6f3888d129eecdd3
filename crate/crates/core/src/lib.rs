//! Reconstruction of dense path-loss and shadow-fading series from sparse,
//! equally spaced channel samples.
//!
//! The crate is organised along the processing chain:
//!
//! - [`pipeline`]: transfer functions to received power, path loss,
//!   40-wavelength smoothing and large-scale fading extraction.
//! - [`ann`]: the single-hidden-layer network shared by the back-propagation,
//!   extreme-learning-machine and radial-basis-function trainers.
//! - [`harness`]: equally spaced train/predict splits, single runs and sweeps.
//! - [`evaluation`]: RMSE, zero-mean Gaussian fits, densities and run comparison.
//! - [`synthetic`]: measurement-like traces and transfer functions.
//! - [`io`] and [`cli`]: file formats and the command-line front end.

pub mod ann;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod io;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
