//! Link-level building blocks for a code-division OFDM (CD-OFDM) joint
//! communication and sensing transceiver.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a
//! pure function of its inputs plus an explicit random number generator, so
//! trials can be run in parallel and replayed bit-exactly.
//!
//! Signal flow of one block, as simulated by [`link`]:
//!
//! 1. bits are Gray-mapped onto a unit-power QAM alphabet ([`constellation`]),
//! 2. spread onto the subcarriers with Walsh-Hadamard codes ([`spreading`]),
//! 3. passed through the unified communication/radar channel ([`channel`]),
//! 4. the peer's communication signal is decoded and cancelled ([`sic`]),
//! 5. the residual echo is turned into a range/Doppler estimate ([`radar`]).
//!
//! [`analysis`] holds the closed-form error-propagation expressions.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod channel;
pub mod constellation;
mod error;
pub mod fft;
pub mod link;
pub mod math;
pub mod ofdm;
pub mod radar;
pub mod sic;
pub mod spreading;

pub use error::{Error, Result};
pub use math::C64;
