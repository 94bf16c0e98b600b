//! Sample-accurate simulation core for Zigbee (IEEE 802.15.4) backscatter.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure signal
//! processing: the O-QPSK/DSSS physical layer, the backscatter tag's
//! square-wave banks and switching schedules (instantaneous-phase shift,
//! frequency-phase shift and codeword translation), the channel, a commodity
//! receiver model and Welch/occupied-bandwidth spectrum metrics.
//!
//! File formats, the command line and everything else touching `std::io`
//! live in the companion `fpscatter` crate.
//!
//! All frequencies are offsets from the carrier channel center; signals are
//! complex baseband sampled at [`DEFAULT_SAMPLE_RATE`] unless configured
//! otherwise.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod fft;
pub mod link;
pub mod phy;
pub mod receiver;
pub mod signal;
pub mod spectrum;
pub mod tag;

pub use error::{Error, Result};
pub use signal::{ComplexBaseband, CHIP_DURATION, CHIP_RATE, DEFAULT_SAMPLE_RATE};
