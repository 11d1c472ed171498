//! Software 802.11a non-HT OFDM link for studying near-field transmission
//! inside a reverberant metal enclosure.
//!
//! The transmit path turns a file into MSDU fragments, MPDUs and non-HT
//! PPDUs ([`framing`], [`phy_tx`]). [`channel`] draws a tapped-delay-line
//! model of the enclosure for a given absorber loading and applies it with
//! noise, frequency offset and delay. [`phy_rx`] detects and decodes the
//! packets, and [`metrics`] turns the receiver output into EVM, BER, CFO
//! and CSI reports. [`scenario`] ties it together and handles I/Q capture
//! files.

pub mod bits;
pub mod channel;
mod error;
pub mod framing;
pub mod imaging;
pub mod metrics;
pub mod ofdm;
pub mod phy_rx;
pub mod phy_tx;
pub mod scenario;

pub use error::{Error, Result};
pub use ofdm::{IqWaveform, Mcs, Modulation};
