//! Gaussian quantum channels from reflection off an accelerating mirror.
//!
//! A massless scalar field reflecting off a moving mirror in 1+1 dimensions
//! picks up a Bogoliubov mixing of positive and negative frequencies. Tracing
//! out all field modes except one turns the reflection into a single-mode
//! Gaussian channel `V ↦ T V Tᵀ + N` on covariance matrices. This crate
//! computes that channel for plane-wave and wave-packet mode decompositions,
//! reduces it to its canonical parameters (transmissivity/gain τ and added
//! thermal photon number n̄), and classifies the result as an amplifier,
//! classical-additive, attenuator, or erasure channel.
//!
//! Everything works in natural units (ħ = c = 1); all inputs and outputs are
//! plain dimensionless numbers.
//!
//! Module map:
//! - [`specfun`]: Lambert W and the Gamma function on the imaginary axis.
//! - [`trajectory`]: mirror worldlines and the ray-tracing maps p(u), f(v).
//! - [`bogoliubov`]: plane-wave Bogoliubov coefficients (closed form for the
//!   Carlitz–Willey worldline, damped scalar-product integrals otherwise).
//! - [`wavepacket`]: wave-packet coefficients over frequency bins j and time
//!   bins n.
//! - [`channel`]: assembly of (T, N), canonical parameters, classification.

// `!(x > 0.0)`-style guards double as NaN rejection throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bogoliubov;
pub mod channel;
pub mod error;
pub mod quad;
pub mod specfun;
pub mod trajectory;
pub mod wavepacket;

pub use error::Error;

/// Complex scalar used throughout for mode amplitudes and coefficients.
pub type Complex = num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
