//! Signal-level simulator for CSI-based micro-Doppler sensing over OFDM WiFi
//! and two transmitter-side defenses against it: FM smearing and per-subcarrier
//! path-length spoofing.
//!
//! The pipeline is: [`scenario`] → [`waveform`] → [`obfuscator`] →
//! [`channel`] → [`receiver`] → [`spectral`], orchestrated by [`simulation`]
//! and exposed on the command line through [`report`], [`cli`] and the
//! `doppler-cloak` binary.

pub mod artifacts;
pub mod channel;
pub mod cli;
pub mod error;
pub mod obfuscator;
pub mod receiver;
pub mod report;
pub mod scenario;
pub mod simulation;
pub mod spectral;
pub mod waveform;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use num_complex::Complex64;
