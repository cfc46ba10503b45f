//! Broadcast erasure channel models.
//!
//! Every receiver listens to the sender over its own independent channel.
//! Two stochastic models are provided: a memoryless channel with a fixed
//! per-receiver erasure probability, and a two-state Gilbert-Elliott channel
//! whose `Good` state delivers every packet and whose `Bad` state erases
//! every packet.  A trace-driven channel replays a fixed outcome sequence
//! for deterministic tests and golden replays.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::{Error, Result};

/// Largest admissible erasure probability; keeps expected completion times
/// finite and all reception probabilities strictly positive.
pub const MAX_ERASURE_PROB: f64 = 0.999;

/// Floor applied to reception probabilities wherever they appear in a
/// denominator.
pub const MIN_RECEPTION_PROB: f64 = 0.001;

/// Clamps an erasure probability into `[0, 0.999]`.
pub fn clamp_erasure_prob(p: f64) -> f64 {
    p.clamp(0.0, MAX_ERASURE_PROB)
}

/// State of a Gilbert-Elliott channel: `Good` delivers, `Bad` erases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    Good,
    Bad,
}

/// Gilbert-Elliott transition parameters.
///
/// `b` is the probability of leaving `Good` for `Bad`, `g` the probability
/// of leaving `Bad` for `Good`.  The channel memory is `1 - b - g`: the
/// correlation carried from one slot to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GecParams {
    b: f64,
    g: f64,
}

impl GecParams {
    /// General two-parameter channel. Requires `0 < b`, `0 < g`, `b + g <= 1`.
    pub fn new(b: f64, g: f64) -> Result<Self> {
        if !(b > 0.0 && g > 0.0 && b + g <= 1.0) {
            return Err(Error::InvalidParameter(
                "Gilbert-Elliott requires 0 < b, 0 < g and b + g <= 1".to_string(),
            ));
        }
        Ok(GecParams { b, g })
    }

    /// Symmetric channel (`b = g`), the variant used throughout the
    /// experiments: both states are equally sticky and the stationary
    /// distribution is uniform.
    pub fn symmetric(b: f64) -> Result<Self> {
        Self::new(b, b)
    }

    /// Symmetric channel with the given memory `mu = 1 - 2b`, `mu` in `[0, 1)`.
    pub fn from_memory(mu: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidParameter("channel memory must lie in [0, 1)".to_string()));
        }
        Self::symmetric((1.0 - mu) / 2.0)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn is_symmetric(&self) -> bool {
        self.b == self.g
    }

    /// Channel memory `1 - b - g`; `0` is memoryless, values near `1` are
    /// strongly persistent.
    pub fn memory(&self) -> f64 {
        1.0 - self.b - self.g
    }

    /// Stationary probability of the `Good` state, `g / (b + g)`.
    pub fn steady_good(&self) -> f64 {
        self.g / (self.b + self.g)
    }

    /// Probability that the next state is `Good` given the current one.
    pub fn next_good_prob(&self, current: ChannelState) -> f64 {
        match current {
            ChannelState::Good => 1.0 - self.b,
            ChannelState::Bad => self.g,
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Memoryless { erasure: Vec<f64>, last_received: Vec<bool> },
    GilbertElliott { params: GecParams, states: Vec<ChannelState> },
    /// Replays fixed per-receiver outcome sequences (`true` = received).
    /// Steps past the end of a sequence are received.
    Trace { received: Vec<Vec<bool>>, cursor: Vec<usize>, last_received: Vec<bool> },
}

/// Per-receiver channel bank for one broadcast session.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    kind: Kind,
}

impl ChannelModel {
    /// Memoryless channels with one erasure probability per receiver.
    /// Probabilities are clamped into `[0, 0.999]`; NaN is rejected.
    pub fn memoryless(erasure: Vec<f64>) -> Result<Self> {
        if erasure.iter().any(|p| p.is_nan()) {
            return Err(Error::InvalidParameter("erasure probability is NaN".to_string()));
        }
        let erasure = erasure.into_iter().map(clamp_erasure_prob).collect::<Vec<_>>();
        let last_received = vec![true; erasure.len()];
        Ok(ChannelModel { kind: Kind::Memoryless { erasure, last_received } })
    }

    /// Gilbert-Elliott channels for `m` receivers with initial states drawn
    /// from the stationary distribution.
    pub fn gilbert_elliott(params: GecParams, m: usize, rng: &mut impl Rng) -> Self {
        let p_good = params.steady_good();
        let states = (0..m)
            .map(|_| if rng.random::<f64>() < p_good { ChannelState::Good } else { ChannelState::Bad })
            .collect();
        ChannelModel { kind: Kind::GilbertElliott { params, states } }
    }

    /// Gilbert-Elliott channels with explicitly chosen initial states.
    pub fn gilbert_elliott_with_states(params: GecParams, states: Vec<ChannelState>) -> Self {
        ChannelModel { kind: Kind::GilbertElliott { params, states } }
    }

    /// Trace-driven channels replaying the given outcome sequences.
    pub fn trace(received: Vec<Vec<bool>>) -> Self {
        let m = received.len();
        ChannelModel { kind: Kind::Trace { received, cursor: vec![0; m], last_received: vec![true; m] } }
    }

    /// Number of receivers served by this bank.
    pub fn receivers(&self) -> usize {
        match &self.kind {
            Kind::Memoryless { erasure, .. } => erasure.len(),
            Kind::GilbertElliott { states, .. } => states.len(),
            Kind::Trace { received, .. } => received.len(),
        }
    }

    /// Whether outcomes are correlated across slots.
    pub fn has_memory(&self) -> bool {
        matches!(&self.kind, Kind::GilbertElliott { .. })
    }

    /// Advances receiver `i`'s channel one slot and reports whether the
    /// transmission was received.
    ///
    /// The Gilbert-Elliott channel transitions first and then emits, so
    /// [`reception_prob`](Self::reception_prob) is exactly the probability
    /// that the next `step` succeeds.
    pub fn step(&mut self, i: usize, rng: &mut impl Rng) -> bool {
        match &mut self.kind {
            Kind::Memoryless { erasure, last_received } => {
                let received = rng.random::<f64>() >= erasure[i];
                last_received[i] = received;
                received
            }
            Kind::GilbertElliott { params, states } => {
                let to_good = params.next_good_prob(states[i]);
                states[i] =
                    if rng.random::<f64>() < to_good { ChannelState::Good } else { ChannelState::Bad };
                states[i] == ChannelState::Good
            }
            Kind::Trace { received, cursor, last_received } => {
                let got = received[i].get(cursor[i]).copied().unwrap_or(true);
                cursor[i] += 1;
                last_received[i] = got;
                got
            }
        }
    }

    /// Probability that receiver `i`'s next step succeeds, conditioned on
    /// everything the sender has observed so far.
    pub fn reception_prob(&self, i: usize) -> f64 {
        match &self.kind {
            Kind::Memoryless { erasure, .. } => 1.0 - erasure[i],
            Kind::GilbertElliott { params, states } => params.next_good_prob(states[i]),
            Kind::Trace { .. } => 1.0,
        }
    }

    /// The channel state the sender infers for receiver `i` from the latest
    /// acknowledgement: the actual state for Gilbert-Elliott channels, and
    /// `Good` exactly when the last transmission was received otherwise.
    pub fn observed_state(&self, i: usize) -> ChannelState {
        match &self.kind {
            Kind::Memoryless { last_received, .. } | Kind::Trace { last_received, .. } => {
                if last_received[i] {
                    ChannelState::Good
                } else {
                    ChannelState::Bad
                }
            }
            Kind::GilbertElliott { states, .. } => states[i],
        }
    }

    /// Gilbert-Elliott parameters, if this is a Gilbert-Elliott bank.
    pub fn gec_params(&self) -> Option<GecParams> {
        match &self.kind {
            Kind::GilbertElliott { params, .. } => Some(*params),
            _ => None,
        }
    }
}
