//! Instantly decodable network coding (IDNC) for broadcast erasure channels.
//!
//! A sender broadcasts a block of `N` packets to `M` receivers over lossy
//! links and then recovers the erased packets by broadcasting XOR
//! combinations that every targeted receiver can decode the moment the
//! combination arrives.  This crate provides the pieces of that recovery
//! phase:
//!
//! * [`feedback`] — the state feedback matrix (who still wants what) and the
//!   per-slot decoding bookkeeping: completion times and decoding delays.
//! * [`graph`] — the IDNC graph whose cliques are exactly the packet
//!   combinations that are instantly decodable for every targeted receiver.
//! * [`weights`] — vertex weighting schemes trading off completion time
//!   against decoding delay.
//! * [`select`] — greedy maximum-weight clique selection, with an optional
//!   two-layer variant that prioritises receivers whose channels are
//!   currently in a good state.
//! * [`channel`] — memoryless and Gilbert-Elliott erasure channel models.
//! * [`ssp`] — an exact stochastic shortest path oracle for small instances,
//!   used to benchmark the heuristics.
//! * [`sim`] — block-level Monte-Carlo simulation and aggregation, plus a
//!   random linear network coding baseline.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature and enable `libm` instead.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("idnc-core requires either the `std` or the `libm` feature");

extern crate alloc;

mod bits;

pub mod channel;
pub mod feedback;
pub mod graph;
pub mod select;
pub mod sim;
pub mod ssp;
pub mod weights;

use alloc::string::String;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A parameter was outside its documented domain.
    InvalidParameter(String),
    /// A clique referenced a vertex whose feedback entry is no longer set,
    /// i.e. the action was computed from a stale state.
    StaleClique { receiver: usize, packet: usize },
    /// Completion statistics were requested before every receiver finished.
    IncompleteBlock { still_wanting: usize },
    /// A recovery phase exceeded the configured slot cap.
    SlotCapExceeded { cap: usize, still_wanting: usize },
    /// An instance was too large for exhaustive oracle enumeration.
    InstanceTooLarge { cells: usize, cap: usize },
    /// Value iteration failed to converge within the iteration cap.
    NoConvergence { iterations: usize, residual_bits: u64 },
    /// A selection was requested on a graph with no vertices.
    EmptyGraph,
    /// A failure inside one block of a multi-block experiment.
    InBlock { block: u64, cause: alloc::boxed::Box<Error> },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::StaleClique { receiver, packet } => write!(
                f,
                "stale clique: receiver {receiver} no longer wants packet {packet}"
            ),
            Error::IncompleteBlock { still_wanting } => write!(
                f,
                "block incomplete: {still_wanting} receiver(s) still wanting"
            ),
            Error::SlotCapExceeded { cap, still_wanting } => write!(
                f,
                "slot cap {cap} exceeded with {still_wanting} receiver(s) still wanting"
            ),
            Error::InstanceTooLarge { cells, cap } => write!(
                f,
                "instance has {cells} feedback cells, oracle cap is {cap}"
            ),
            Error::NoConvergence { iterations, residual_bits } => write!(
                f,
                "value iteration did not converge after {iterations} sweeps (residual {})",
                f64::from_bits(*residual_bits)
            ),
            Error::EmptyGraph => write!(f, "selection requested on an empty graph"),
            Error::InBlock { block, cause } => write!(f, "block {block}: {cause}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

/// `sqrt` that works both with and without the standard library.
#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.sqrt()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::sqrt(x)
    }
}
