//! Greedy clique selection.
//!
//! One transmission = one clique of the IDNC graph.  The selection loop
//! grows a clique by repeatedly taking the maximum-weight vertex among those
//! adjacent to everything chosen so far, recomputing weights inside that
//! shrinking candidate subgraph (plus the chosen vertices themselves, which
//! every candidate is adjacent to) on every iteration.  The loop ends when
//! no candidate remains, so the result is always a maximal clique.
//!
//! The layered variant runs the same loop twice: first over vertices of
//! receivers whose channel was last seen in the good state, then over
//! bad-state vertices compatible with the entire good-layer clique.  Under
//! persistent channel memory this avoids spending transmissions on receivers
//! that are unlikely to hear them.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::channel::{ChannelModel, ChannelState};
use crate::feedback::ReceiverState;
use crate::graph::{Clique, IdncGraph};
use crate::weights::{receiver_factors, PolicyKind};
use crate::{Error, Result};

/// Deterministic rule applied when several vertices share the maximum
/// weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest receiver index, then lowest packet index.
    #[default]
    LowestReceiverThenPacket,
}

/// Full description of a selection scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub policy: PolicyKind,
    /// Two-layer selection keyed on the last observed channel states.
    pub layered: bool,
    pub tie_break: TieBreak,
}

impl SelectionConfig {
    pub fn new(policy: PolicyKind, layered: bool) -> Result<Self> {
        policy.validate()?;
        Ok(SelectionConfig { policy, layered, tie_break: TieBreak::default() })
    }
}

/// Extends `chosen` greedily until `candidates` is exhausted.
///
/// Invariant: every candidate is adjacent to every chosen vertex, so the
/// subgraph a candidate is scored on — everything still connected to the
/// whole current clique — is the chosen vertices plus the surviving
/// candidates adjacent to it.  Each iteration re-evaluates every candidate's
/// weight on that shrinking subgraph: its factor times the factor sum of its
/// neighbors within it.  Counting the chosen side keeps the selection pulled
/// toward what is already locked in, which is what lets a lone high-factor
/// receiver stay targeted slot after slot.  Since vertex indices are
/// lexicographic by (receiver, packet), scanning candidates in ascending
/// order with a strict comparison implements the tie-break rule.
fn greedy_extend(
    graph: &IdncGraph,
    factors: &[f64],
    chosen: &mut Vec<usize>,
    mut candidates: BitSet,
) {
    let mut chosen_factor_sum: f64 =
        chosen.iter().map(|&u| factors[graph.vertex(u).receiver]).sum();
    while !candidates.is_empty() {
        let mut best = usize::MAX;
        let mut best_weight = f64::NEG_INFINITY;
        for v in candidates.iter() {
            let mut nbrs = candidates.clone();
            nbrs.intersect_words(graph.adjacency_row(v));
            let degree: f64 = chosen_factor_sum
                + nbrs.iter().map(|u| factors[graph.vertex(u).receiver]).sum::<f64>();
            let weight = factors[graph.vertex(v).receiver] * degree;
            if weight > best_weight {
                best = v;
                best_weight = weight;
            }
        }
        chosen.push(best);
        chosen_factor_sum += factors[graph.vertex(best).receiver];
        candidates.intersect_words(graph.adjacency_row(best));
    }
}

/// Greedy maximum-weight vertex search over the whole graph.
///
/// `factors` holds one per-receiver weight factor (see [`crate::weights`]).
/// The returned clique is maximal.  Fails on an empty graph: the caller is
/// expected to notice completion before asking for a transmission.
pub fn mwvs_select(graph: &IdncGraph, factors: &[f64]) -> Result<Clique> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut chosen = Vec::new();
    greedy_extend(graph, factors, &mut chosen, BitSet::full(graph.vertex_count()));
    chosen.sort_unstable();
    debug_assert!(graph.is_maximal(&chosen));
    Clique::from_indices(graph, &chosen)
}

/// Two-layer greedy selection.
///
/// `good[i]` marks receivers whose channel was last observed in the good
/// state.  The good layer is selected first; the bad layer may only extend
/// it.  If no receiver is in the good state the whole selection falls
/// through to the bad layer rather than idle the slot.  The result is still
/// a maximal clique of the full graph: any vertex compatible with the final
/// clique would have survived its own layer's candidate filter.
pub fn layered_select(graph: &IdncGraph, factors: &[f64], good: &[bool]) -> Result<Clique> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut good_vertices = BitSet::empty(graph.vertex_count());
    let mut bad_vertices = BitSet::empty(graph.vertex_count());
    for (idx, v) in graph.vertices().iter().enumerate() {
        if good[v.receiver] {
            good_vertices.insert(idx);
        } else {
            bad_vertices.insert(idx);
        }
    }
    let mut chosen = Vec::new();
    greedy_extend(graph, factors, &mut chosen, good_vertices);
    let mut second_layer = bad_vertices;
    second_layer.intersect_words(graph.common_neighbors(&chosen).words());
    greedy_extend(graph, factors, &mut chosen, second_layer);
    chosen.sort_unstable();
    debug_assert!(graph.is_maximal(&chosen));
    Clique::from_indices(graph, &chosen)
}

/// Computes the policy's per-receiver factors and dispatches to the plain
/// or layered selection loop.
pub fn select_for_policy(
    graph: &IdncGraph,
    receivers: &[ReceiverState],
    cfg: &SelectionConfig,
    channel: &ChannelModel,
) -> Result<Clique> {
    cfg.policy.validate()?;
    let factors = receiver_factors(cfg.policy, receivers, channel);
    if cfg.layered {
        let good: Vec<bool> = (0..receivers.len())
            .map(|i| channel.observed_state(i) == ChannelState::Good)
            .collect();
        layered_select(graph, &factors, &good)
    } else {
        mwvs_select(graph, &factors)
    }
}
