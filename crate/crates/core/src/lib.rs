//! Train constant-attention transformers on modular addition, read off the
//! amplitude-phase structure of their MLP neurons, and certify in linear time
//! that the MLP evaluates a trigonometric integral by a rectangle rule.

pub mod error;
pub mod fourier;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod validation;

pub use error::{Error, Result};
