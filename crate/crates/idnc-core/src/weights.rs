//! Vertex weighting policies for clique selection.
//!
//! Every policy here scores a vertex `v_ij` as
//! `factor(i) * sum of factor(k) over adjacent vertices v_kl`, differing
//! only in the per-receiver factor:
//!
//! * Min-OCT: `tau_i = W_i / q_i`, the expected number of slots receiver `i`
//!   still needs — prefers cliques of receivers lagging on completion.
//! * Min-DD: `q_i`, the reception probability — prefers cliques likely to be
//!   received, minimizing per-slot decoding delay.
//! * MWVS: the squared channel-weighted wants value
//!   `(2(lambda*W_i/q_i + (1-lambda)*D_i))^2` — balances completion against
//!   accumulated delay, squaring to prioritize stragglers hard.
//!
//! `q_i` is the reception probability; policies that are aware of channel
//! memory condition it on the last observed channel state, the others use
//! the stationary value.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::channel::{ChannelModel, MIN_RECEPTION_PROB};
use crate::feedback::ReceiverState;
use crate::graph::IdncGraph;
use crate::{Error, Result};

/// Which weighting formula drives clique selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Completion-time weights `tau_i * Delta_ij`.
    MinOct,
    /// Decoding-delay weights `(1-p_i) * Delta_ij`.
    MinDd,
    /// Squared state-value weights with the stationary reception probability.
    Mwvs { lambda: f64 },
    /// Squared state-value weights conditioned on the last observed channel
    /// state; identical to `Mwvs` on memoryless channels.
    MwvsMemoryAware { lambda: f64 },
}

impl PolicyKind {
    /// Validates the policy parameters (`lambda` must lie in `[0, 1]`).
    pub fn validate(&self) -> Result<()> {
        match self {
            PolicyKind::Mwvs { lambda } | PolicyKind::MwvsMemoryAware { lambda } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::InvalidParameter(
                        "lambda must lie in [0, 1]".to_string(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[inline]
pub(crate) fn floored(q: f64) -> f64 {
    q.max(MIN_RECEPTION_PROB)
}

/// Expected individual completion time `tau_i = W_i / (1 - p_i)` under the
/// receiver's stationary erasure probability.
pub fn expected_ict(receiver: &ReceiverState) -> f64 {
    if receiver.wants_size == 0 {
        return 0.0;
    }
    receiver.wants_size as f64 / floored(receiver.reception_prob())
}

/// Raw state value `lambda*W_i + (1-lambda)*D_i`.
pub fn state_value_raw(wants: usize, delay: usize, lambda: f64) -> f64 {
    lambda * wants as f64 + (1.0 - lambda) * delay as f64
}

/// Engine-scaled state value `2*(lambda*W_i + (1-lambda)*D_i)`.
///
/// The doubling makes the default `lambda = 0.5` come out as `W_i + D_i`
/// with unit coefficients; it is a positive scaling and never changes which
/// vertex maximizes a weight.
pub fn state_value(receiver: &ReceiverState, lambda: f64) -> f64 {
    2.0 * state_value_raw(receiver.wants_size, receiver.accum_delay, lambda)
}

/// Channel-weighted state value: `W_i` is stretched to `W_i / q_i`, the
/// expected slots to drain it, before entering the `lambda` combination.
///
/// With `memory_aware` set, `q_i` is the probability of moving to the good
/// state given the last observed channel state; otherwise it is the
/// stationary reception probability `1 - p_i`.
pub fn channel_weighted_value(
    receiver: &ReceiverState,
    lambda: f64,
    memory_aware: bool,
    channel: &ChannelModel,
) -> f64 {
    let q = if memory_aware {
        channel.reception_prob(receiver.index)
    } else {
        receiver.reception_prob()
    };
    let stretched = receiver.wants_size as f64 / floored(q);
    2.0 * (lambda * stretched + (1.0 - lambda) * receiver.accum_delay as f64)
}

/// The per-receiver factor whose products form vertex weights under `policy`.
pub fn receiver_factor(
    policy: PolicyKind,
    receiver: &ReceiverState,
    channel: &ChannelModel,
) -> f64 {
    // Completion- and delay-oriented weights always condition on the channel
    // state when the channel has one; on memoryless channels the conditioned
    // and stationary probabilities coincide.
    let conditioned = floored(channel.reception_prob(receiver.index));
    match policy {
        PolicyKind::MinOct => receiver.wants_size as f64 / conditioned,
        PolicyKind::MinDd => conditioned,
        PolicyKind::Mwvs { lambda } => {
            let u = channel_weighted_value(receiver, lambda, false, channel);
            u * u
        }
        PolicyKind::MwvsMemoryAware { lambda } => {
            let u = channel_weighted_value(receiver, lambda, true, channel);
            u * u
        }
    }
}

/// Factors for all receivers, indexed by receiver.
pub fn receiver_factors(
    policy: PolicyKind,
    receivers: &[ReceiverState],
    channel: &ChannelModel,
) -> Vec<f64> {
    receivers.iter().map(|r| receiver_factor(policy, r, channel)).collect()
}

/// Weight of vertex `v` restricted to the `active` vertex set: its
/// receiver's factor times the factor sum over active adjacent vertices.
pub(crate) fn bilinear_weight(
    graph: &IdncGraph,
    v: usize,
    factors: &[f64],
    active: &BitSet,
) -> f64 {
    let mut neighborhood = active.clone();
    neighborhood.intersect_words(graph.adjacency_row(v));
    let delta: f64 = neighborhood.iter().map(|u| factors[graph.vertex(u).receiver]).sum();
    factors[graph.vertex(v).receiver] * delta
}

/// Full-graph weights for every vertex plus the per-receiver factors they
/// were built from.
#[derive(Debug, Clone)]
pub struct VertexWeightTable {
    /// Per-receiver factor (tau, reception probability, or squared value).
    pub factors: Vec<f64>,
    /// Adjacent-factor sum per vertex.
    pub deltas: Vec<f64>,
    /// Weight per vertex, `factors[receiver] * deltas[vertex]`.
    pub weights: Vec<f64>,
}

impl VertexWeightTable {
    pub fn compute(graph: &IdncGraph, factors: Vec<f64>) -> Self {
        let all = BitSet::full(graph.vertex_count());
        let deltas: Vec<f64> = (0..graph.vertex_count())
            .map(|v| {
                let mut nbrs = all.clone();
                nbrs.intersect_words(graph.adjacency_row(v));
                nbrs.iter().map(|u| factors[graph.vertex(u).receiver]).sum()
            })
            .collect();
        let weights = (0..graph.vertex_count())
            .map(|v| factors[graph.vertex(v).receiver] * deltas[v])
            .collect();
        VertexWeightTable { factors, deltas, weights }
    }
}

/// Min-OCT weight of one vertex over the whole graph.
pub fn weight_min_oct(graph: &IdncGraph, vertex: usize, receivers: &[ReceiverState]) -> f64 {
    let factors: Vec<f64> = receivers.iter().map(expected_ict).collect();
    bilinear_weight(graph, vertex, &factors, &BitSet::full(graph.vertex_count()))
}

/// Min-DD weight of one vertex over the whole graph.
pub fn weight_min_dd(graph: &IdncGraph, vertex: usize, receivers: &[ReceiverState]) -> f64 {
    let factors: Vec<f64> = receivers.iter().map(|r| r.reception_prob()).collect();
    bilinear_weight(graph, vertex, &factors, &BitSet::full(graph.vertex_count()))
}

/// MWVS weight of one vertex over the whole graph.
pub fn weight_mwvs(
    graph: &IdncGraph,
    vertex: usize,
    receivers: &[ReceiverState],
    lambda: f64,
    memory_aware: bool,
    channel: &ChannelModel,
) -> f64 {
    let factors: Vec<f64> = receivers
        .iter()
        .map(|r| {
            let u = channel_weighted_value(r, lambda, memory_aware, channel);
            u * u
        })
        .collect();
    bilinear_weight(graph, vertex, &factors, &BitSet::full(graph.vertex_count()))
}
