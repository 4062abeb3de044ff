//! Metrical tools for continued-fraction limsup sets defined by weighted
//! products of consecutive partial quotients.
//!
//! The crate is organised by subsystem:
//!
//! * [`cf`] exact expansions, convergents, cylinders and their measures;
//! * [`growth`] growth functions `Psi(n)`, their exponents and the series test;
//! * [`tails`] weighted tail sums and measures of exceedance events;
//! * [`pressure`] f-functions, pressure engines, root solving and dimensions;
//! * [`mc`] exact digit sampling and Monte Carlo hit scans;
//! * [`cli`] the command-line front end.

pub mod cf;
pub mod cli;
pub mod error;
pub mod growth;
pub mod mc;
pub mod pressure;
pub mod tails;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{Exponent, Weights};
