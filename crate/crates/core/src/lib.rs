//! Secrecy outage bounds for a two-hop full-duplex relay network using
//! scaled compute-and-forward, with an eavesdropper observing every link
//! through Rayleigh fading.

pub mod cli;
pub mod closedform;
pub mod error;
pub mod events;
pub mod optimize;
pub mod oracles;
pub mod rates;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
