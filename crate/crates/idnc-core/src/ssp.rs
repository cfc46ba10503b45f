//! Exact planning oracle for tiny instances.
//!
//! The recovery phase is a stochastic shortest path problem: states carry
//! the feedback matrix and the accumulated delays, actions are coded
//! transmissions, the absorbing state is the empty matrix, and the
//! per-receiver slot cost is `1 + (U_i(next) - U_i(current))` with
//! `U_i = W_i + D_i` — 0 for a decode, 1 for an erasure, 2 for a received
//! but useless packet.  On instances small enough to enumerate (the cell
//! count `M * N` is capped), value iteration solves the problem exactly and
//! the resulting policy is a ground truth the greedy heuristics can be
//! measured against.
//!
//! Two states with the same feedback matrix differ only by a cost already
//! paid: every remaining-cost quantity depends on wants sets and delay
//! *increments* alone.  The value function and optimal policy are therefore
//! keyed by the feedback matrix, which keeps the enumerated space finite;
//! `SspState` still carries the delay vector so transitions, realized costs
//! and the per-slot movement check can be exercised on full states.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use rand::Rng;

use crate::channel::{clamp_erasure_prob, ChannelModel};
use crate::feedback::{classify, PacketClass, ReceiverState, StateFeedbackMatrix};
use crate::graph::{Clique, IdncGraph};
use crate::select::{select_for_policy, SelectionConfig};
use crate::weights::{floored, PolicyKind};
use crate::{Error, Result};

/// One planning state: the feedback matrix plus per-receiver accumulated
/// delays.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SspState {
    pub sfm: StateFeedbackMatrix,
    pub delays: Vec<usize>,
}

impl SspState {
    /// The starting state: the given matrix with zero accumulated delay.
    pub fn start(sfm: StateFeedbackMatrix) -> Self {
        let delays = vec![0; sfm.receivers()];
        SspState { sfm, delays }
    }

    /// Absorbing: every wants set is empty.
    pub fn is_absorbing(&self) -> bool {
        self.sfm.is_complete()
    }

    /// Receivers with a non-empty wants set.
    pub fn wanting(&self) -> Vec<usize> {
        self.sfm.wanting_receivers()
    }

    /// Per-receiver state vector `U_i = W_i + D_i`.
    pub fn state_vector(&self) -> Vec<f64> {
        (0..self.sfm.receivers())
            .map(|i| (self.sfm.wants_count(i) + self.delays[i]) as f64)
            .collect()
    }
}

/// Exact value function and greedy-optimal policy over the reachable
/// feedback matrices.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    values: BTreeMap<StateFeedbackMatrix, f64>,
    policy: BTreeMap<StateFeedbackMatrix, Clique>,
    sweeps: usize,
}

impl ValueFunction {
    /// Expected remaining cost from the state, if it was enumerated.
    pub fn value(&self, state: &SspState) -> Option<f64> {
        self.values.get(&state.sfm).copied()
    }

    /// Optimal action at the state; `None` for absorbing or unknown states.
    pub fn action(&self, state: &SspState) -> Option<&Clique> {
        self.policy.get(&state.sfm)
    }

    pub fn state_count(&self) -> usize {
        self.values.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Text table of the solution: one `wants | value | action` row per
    /// enumerated feedback matrix, deterministically ordered.
    pub fn table_text(&self) -> String {
        let mut out = String::new();
        for (sfm, v) in &self.values {
            let rows: Vec<String> = (0..sfm.receivers())
                .map(|i| {
                    (0..sfm.packets())
                        .map(|j| if sfm.wanted(i, j) { '1' } else { '0' })
                        .collect()
                })
                .collect();
            let action = match self.policy.get(sfm) {
                Some(clique) => {
                    let packets: Vec<String> =
                        clique.packets().iter().map(|p| p.to_string()).collect();
                    packets.join("+")
                }
                None => "-".to_string(),
            };
            let _ = writeln!(out, "{} V={:.6} action={}", rows.join("|"), v, action);
        }
        out
    }
}

/// Default cap on `M * N` for exhaustive enumeration.
pub const DEFAULT_SIZE_CAP: usize = 12;

/// Iteration cap for value iteration sweeps.
const MAX_SWEEPS: usize = 10_000;

/// Planning oracle for a fixed set of per-receiver erasure probabilities.
#[derive(Debug, Clone)]
pub struct SspOracle {
    erasure: Vec<f64>,
    size_cap: usize,
}

impl SspOracle {
    /// Oracle with the default instance-size cap.
    pub fn new(erasure: Vec<f64>) -> Result<Self> {
        Self::with_size_cap(erasure, DEFAULT_SIZE_CAP)
    }

    /// Oracle with an explicit instance-size cap (cells of the feedback
    /// matrix).  Enumeration is exponential in the instance size; raising
    /// the cap is on the caller.
    pub fn with_size_cap(erasure: Vec<f64>, size_cap: usize) -> Result<Self> {
        if erasure.iter().any(|p| p.is_nan()) {
            return Err(Error::InvalidParameter("erasure probability is NaN".to_string()));
        }
        let erasure = erasure.into_iter().map(clamp_erasure_prob).collect();
        Ok(SspOracle { erasure, size_cap })
    }

    pub fn erasure_probs(&self) -> &[f64] {
        &self.erasure
    }

    fn guard(&self, sfm: &StateFeedbackMatrix) -> Result<()> {
        let cells = sfm.receivers() * sfm.packets();
        if cells > self.size_cap {
            return Err(Error::InstanceTooLarge { cells, cap: self.size_cap });
        }
        if sfm.receivers() != self.erasure.len() {
            return Err(Error::InvalidParameter(
                "one erasure probability per receiver required".to_string(),
            ));
        }
        Ok(())
    }

    /// All distinct transmissions available in the state: every clique of
    /// the feedback graph, deduplicated by packet set and canonicalized so
    /// the members are exactly the targeted receivers.  Maximal cliques are
    /// always included; their sub-cliques add the narrower transmissions
    /// that differ in packet content.  Deterministically ordered by packet
    /// set.
    pub fn enumerate_actions(&self, state: &SspState) -> Result<Vec<Clique>> {
        self.guard(&state.sfm)?;
        let graph = IdncGraph::build(&state.sfm);
        let mut packet_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        for clique in graph.maximal_cliques() {
            let k = clique.len();
            for mask in 1u32..(1 << k) {
                let mut packets: BTreeSet<usize> = BTreeSet::new();
                for (pos, &v) in clique.iter().enumerate() {
                    if mask >> pos & 1 == 1 {
                        packets.insert(graph.vertex(v).packet);
                    }
                }
                packet_sets.insert(packets.into_iter().collect());
            }
        }
        Ok(packet_sets
            .into_iter()
            .map(|packets| Clique::from_packets(&state.sfm, &packets))
            .collect())
    }

    /// All reception patterns over the wanting receivers, as full-length
    /// flag vectors (entries of already-complete receivers are fixed true
    /// and carry no probability).
    pub fn outcomes(&self, state: &SspState) -> Vec<Vec<bool>> {
        let wanting = state.wanting();
        let m = state.sfm.receivers();
        (0..(1u32 << wanting.len()))
            .map(|mask| {
                let mut flags = vec![true; m];
                for (pos, &i) in wanting.iter().enumerate() {
                    flags[i] = mask >> pos & 1 == 1;
                }
                flags
            })
            .collect()
    }

    /// Applies one transmission under a fixed reception pattern.  Returns
    /// the successor state and the pattern's probability: the product over
    /// wanting receivers of their reception or erasure probability.
    pub fn transition(&self, state: &SspState, action: &Clique, outcome: &[bool]) -> (SspState, f64) {
        let mut next = state.clone();
        let mut prob = 1.0;
        for &i in &state.wanting() {
            if outcome[i] {
                prob *= 1.0 - self.erasure[i];
                match classify(&state.sfm, i, action.packets()) {
                    PacketClass::InstantlyDecodable { packet } => {
                        next.sfm.set_wanted(i, packet, false);
                    }
                    PacketClass::NonInnovative | PacketClass::NonInstantlyDecodable => {
                        next.delays[i] += 1;
                    }
                }
            } else {
                prob *= self.erasure[i];
            }
        }
        (next, prob)
    }

    /// Realized cost of a one-slot move: `sum over wanting receivers of
    /// 1 + (U_i(next) - U_i(current))`, which is 0 per decode, 1 per
    /// erasure, 2 per received useless packet.
    pub fn slot_cost(&self, state: &SspState, next: &SspState) -> f64 {
        let mut cost = 0.0;
        for &i in &state.wanting() {
            let du = (next.sfm.wants_count(i) + next.delays[i]) as f64
                - (state.sfm.wants_count(i) + state.delays[i]) as f64;
            cost += 1.0 + du;
        }
        cost
    }

    /// Expected one-slot cost of an action: `sum over targeted receivers of
    /// p_i`, plus `sum over wanting untargeted receivers of (2 - p_i)`.
    /// Equals the probability-weighted average of [`slot_cost`](Self::slot_cost)
    /// over all reception patterns.
    pub fn expected_cost(&self, state: &SspState, action: &Clique) -> f64 {
        let mut cost = 0.0;
        for &i in &state.wanting() {
            let targeted = matches!(
                classify(&state.sfm, i, action.packets()),
                PacketClass::InstantlyDecodable { .. }
            );
            cost += if targeted { self.erasure[i] } else { 2.0 - self.erasure[i] };
        }
        cost
    }

    /// Per-receiver movement `(W_i/q_i + D_i)` between two states one slot
    /// apart.  Every component must land in `{-1/q_i, 0, +1}`; anything else
    /// signals a state-update bug and is returned as an error.
    pub fn hyperrect_delta(&self, state: &SspState, next: &SspState) -> Result<Vec<f64>> {
        let mut deltas = Vec::with_capacity(self.erasure.len());
        for i in 0..self.erasure.len() {
            let q = floored(1.0 - self.erasure[i]);
            let value = |s: &SspState| s.sfm.wants_count(i) as f64 / q + s.delays[i] as f64;
            let delta = value(next) - value(state);
            let ok = delta.abs() < 1e-9
                || (delta - 1.0).abs() < 1e-9
                || (delta + 1.0 / q).abs() < 1e-9;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "receiver {i} moved {delta} in one slot; allowed {{ -{}, 0, 1 }}",
                    1.0 / q
                )));
            }
            deltas.push(delta);
        }
        Ok(deltas)
    }

    /// Exact value iteration over every feedback matrix reachable from the
    /// start state.
    ///
    /// Successor matrices always have strictly fewer set entries except for
    /// the self-loop where every targeted receiver is erased, so sweeping
    /// states in ascending set-entry order with the self-loop folded into a
    /// closed form reaches the fixed point immediately; the sweep loop still
    /// verifies sup-norm convergence against `tol` and errors out at the
    /// iteration cap.  Ties between actions break toward the first in
    /// enumeration order.
    pub fn value_iteration(&self, start: &SspState, tol: f64) -> Result<ValueFunction> {
        self.guard(&start.sfm)?;
        // Forward enumeration of reachable matrices.
        let mut reachable: BTreeSet<StateFeedbackMatrix> = BTreeSet::new();
        let mut queue = vec![start.sfm.clone()];
        reachable.insert(start.sfm.clone());
        let mut actions: BTreeMap<StateFeedbackMatrix, Vec<Clique>> = BTreeMap::new();
        while let Some(sfm) = queue.pop() {
            if sfm.is_complete() {
                continue;
            }
            let acts = self.enumerate_actions(&SspState::start(sfm.clone()))?;
            for action in &acts {
                let members = action.members();
                for mask in 1u32..(1 << members.len()) {
                    let mut succ = sfm.clone();
                    for (pos, v) in members.iter().enumerate() {
                        if mask >> pos & 1 == 1 {
                            succ.set_wanted(v.receiver, v.packet, false);
                        }
                    }
                    if reachable.insert(succ.clone()) {
                        queue.push(succ);
                    }
                }
            }
            actions.insert(sfm, acts);
        }
        // Ascending set-entry order; absorbing first.
        let mut order: Vec<StateFeedbackMatrix> = reachable.iter().cloned().collect();
        order.sort_by_key(|sfm| sfm.total_wanted());
        let mut values: BTreeMap<StateFeedbackMatrix, f64> =
            reachable.iter().map(|sfm| (sfm.clone(), 0.0)).collect();
        let mut policy: BTreeMap<StateFeedbackMatrix, Clique> = BTreeMap::new();
        let mut last_residual = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            let mut residual = 0.0f64;
            for sfm in &order {
                if sfm.is_complete() {
                    continue;
                }
                let state = SspState::start(sfm.clone());
                let mut best: Option<(f64, &Clique)> = None;
                for action in &actions[sfm] {
                    let expected = self.expected_cost(&state, action);
                    let members = action.members();
                    let mut self_loop = 1.0;
                    for v in members {
                        self_loop *= self.erasure[v.receiver];
                    }
                    let mut rest = 0.0;
                    for mask in 1u32..(1 << members.len()) {
                        let mut succ = sfm.clone();
                        let mut prob = 1.0;
                        for (pos, v) in members.iter().enumerate() {
                            if mask >> pos & 1 == 1 {
                                succ.set_wanted(v.receiver, v.packet, false);
                                prob *= 1.0 - self.erasure[v.receiver];
                            } else {
                                prob *= self.erasure[v.receiver];
                            }
                        }
                        rest += prob * values[&succ];
                    }
                    let q = (expected + rest) / (1.0 - self_loop);
                    if best.map_or(true, |(b, _)| q < b) {
                        best = Some((q, action));
                    }
                }
                let (new_value, best_action) = best.expect("non-absorbing state has actions");
                let old = values.insert(sfm.clone(), new_value).unwrap();
                policy.insert(sfm.clone(), best_action.clone());
                residual = residual.max((new_value - old).abs());
            }
            if residual <= tol {
                return Ok(ValueFunction { values, policy, sweeps: sweep });
            }
            last_residual = residual;
        }
        Err(Error::NoConvergence { iterations: MAX_SWEEPS, residual_bits: last_residual.to_bits() })
    }

    /// The greedy heuristic's action in a planning state, for rollouts.
    pub fn heuristic_action(&self, state: &SspState, policy: PolicyKind) -> Result<Clique> {
        let graph = IdncGraph::build(&state.sfm);
        let receivers: Vec<ReceiverState> = (0..state.sfm.receivers())
            .map(|i| {
                let mut r = ReceiverState::new(i, self.erasure[i]);
                r.wants_size = state.sfm.wants_count(i);
                r.initial_wants_size = r.wants_size;
                r.accum_delay = state.delays[i];
                r
            })
            .collect();
        let channel = ChannelModel::memoryless(self.erasure.clone())?;
        let sel = SelectionConfig::new(policy, false)?;
        select_for_policy(&graph, &receivers, &sel, &channel)
    }

    /// Plays one episode from `start` under `select`, sampling receptions
    /// from `rng`, and returns the realized total cost.  Every one-slot
    /// movement is validated against its hyperrectangle.
    pub fn rollout(
        &self,
        start: &SspState,
        mut select: impl FnMut(&SspState) -> Result<Clique>,
        rng: &mut impl Rng,
        slot_cap: usize,
    ) -> Result<f64> {
        let mut state = start.clone();
        let mut total = 0.0;
        let mut slots = 0usize;
        while !state.is_absorbing() {
            if slots >= slot_cap {
                return Err(Error::SlotCapExceeded {
                    cap: slot_cap,
                    still_wanting: state.wanting().len(),
                });
            }
            slots += 1;
            let action = select(&state)?;
            let mut outcome = vec![true; self.erasure.len()];
            for &i in &state.wanting() {
                outcome[i] = rng.random::<f64>() >= self.erasure[i];
            }
            let (next, _) = self.transition(&state, &action, &outcome);
            self.hyperrect_delta(&state, &next)?;
            total += self.slot_cost(&state, &next);
            state = next;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// The 2x4 planning example: R0 wants {0,2,3}, R1 wants {1,3}.
    fn planning_sfm() -> StateFeedbackMatrix {
        StateFeedbackMatrix::from_rows(&[&[1, 0, 1, 1], &[0, 1, 0, 1]])
    }

    fn packet_sets(actions: &[Clique]) -> Vec<Vec<usize>> {
        actions.iter().map(|a| a.packets().to_vec()).collect()
    }

    #[test]
    fn planning_example_has_six_actions_three_targeting_both() {
        let oracle = SspOracle::new(vec![0.2, 0.2]).unwrap();
        let state = SspState::start(planning_sfm());
        let actions = oracle.enumerate_actions(&state).unwrap();
        assert_eq!(
            packet_sets(&actions),
            vec![vec![0], vec![0, 1], vec![1], vec![1, 2], vec![2], vec![3]]
        );
        let both: Vec<Vec<usize>> = actions
            .iter()
            .filter(|a| a.targeted_receivers() == vec![0, 1])
            .map(|a| a.packets().to_vec())
            .collect();
        assert_eq!(both, vec![vec![0, 1], vec![1, 2], vec![3]]);
    }

    #[test]
    fn single_vertex_yields_one_singleton_action() {
        let oracle = SspOracle::new(vec![0.1]).unwrap();
        let state = SspState::start(StateFeedbackMatrix::from_rows(&[&[0, 1, 0]]));
        let actions = oracle.enumerate_actions(&state).unwrap();
        assert_eq!(packet_sets(&actions), vec![vec![1]]);
    }

    #[test]
    fn size_cap_guards_enumeration_and_can_be_raised() {
        let sfm = StateFeedbackMatrix::from_rows(&[
            &[1, 0, 1, 0, 0, 1],
            &[0, 1, 1, 1, 1, 1],
            &[1, 0, 0, 0, 1, 0],
            &[1, 0, 0, 1, 0, 0],
        ]);
        let state = SspState::start(sfm);
        let capped = SspOracle::new(vec![0.1; 4]).unwrap();
        assert!(matches!(
            capped.enumerate_actions(&state),
            Err(Error::InstanceTooLarge { cells: 24, cap: 12 })
        ));
        let raised = SspOracle::with_size_cap(vec![0.1; 4], 24).unwrap();
        let actions = raised.enumerate_actions(&state).unwrap();
        // The all-targeting combination of packets 0 and 1 must be among the
        // enumerated transmissions.
        let wide = actions
            .iter()
            .find(|a| a.packets() == [0, 1])
            .expect("packets {0,1} enumerated");
        assert_eq!(wide.targeted_receivers(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn transition_probabilities_sum_to_one() {
        for p in [vec![0.2, 0.5], vec![0.0, 0.0], vec![0.9, 0.1]] {
            let oracle = SspOracle::new(p).unwrap();
            let state = SspState::start(planning_sfm());
            for action in oracle.enumerate_actions(&state).unwrap() {
                let total: f64 = oracle
                    .outcomes(&state)
                    .iter()
                    .map(|o| oracle.transition(&state, &action, o).1)
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "sum {total}");
            }
        }
    }

    #[test]
    fn erasure_free_transitions_are_deterministic() {
        let oracle = SspOracle::new(vec![0.0, 0.0]).unwrap();
        let state = SspState::start(planning_sfm());
        let action = &oracle.enumerate_actions(&state).unwrap()[0];
        let live: Vec<f64> = oracle
            .outcomes(&state)
            .iter()
            .map(|o| oracle.transition(&state, action, o).1)
            .filter(|&p| p > 0.0)
            .collect();
        assert_eq!(live, vec![1.0]);
    }

    #[test]
    fn half_probability_outcomes_are_uniform() {
        let oracle = SspOracle::new(vec![0.5, 0.5]).unwrap();
        let state = SspState::start(planning_sfm());
        let action = &oracle.enumerate_actions(&state).unwrap()[0];
        for outcome in oracle.outcomes(&state) {
            assert_eq!(oracle.transition(&state, action, &outcome).1, 0.25);
        }
    }

    #[test]
    fn both_received_branch_probability() {
        let oracle = SspOracle::new(vec![0.2, 0.2]).unwrap();
        let state = SspState::start(planning_sfm());
        let actions = oracle.enumerate_actions(&state).unwrap();
        let single = actions.iter().find(|a| a.packets() == [0]).unwrap();
        let (next, prob) = oracle.transition(&state, single, &[true, true]);
        assert!((prob - 0.64).abs() < 1e-12);
        // Receiver 0 decodes packet 0; receiver 1 held it already, so the
        // reception is non-innovative and costs a delay unit.
        assert!(!next.sfm.wanted(0, 0));
        assert_eq!(next.delays, vec![0, 1]);
    }

    #[test]
    fn expected_cost_examples_and_outcome_average() {
        // Erasure-free, action targeting every wanting receiver: zero cost.
        let free = SspOracle::new(vec![0.0, 0.0]).unwrap();
        let state = SspState::start(planning_sfm());
        let actions = free.enumerate_actions(&state).unwrap();
        let both = actions.iter().find(|a| a.packets() == [0, 1]).unwrap();
        assert_eq!(free.expected_cost(&state, both), 0.0);
        // Erasure-free, one of two wanting receivers targeted: cost 2.
        let single = actions.iter().find(|a| a.packets() == [0]).unwrap();
        assert_eq!(free.expected_cost(&state, single), 2.0);
        // Three wanting receivers, two targeted, p = 0.2 everywhere.
        let oracle = SspOracle::new(vec![0.2; 3]).unwrap();
        let tri = SspState::start(StateFeedbackMatrix::from_rows(&[&[1, 0], &[0, 1], &[1, 1]]));
        let tri_actions = oracle.enumerate_actions(&tri).unwrap();
        let two_of_three = tri_actions.iter().find(|a| a.packets() == [0, 1]).unwrap();
        assert_eq!(two_of_three.targeted_receivers(), vec![0, 1]);
        assert!((oracle.expected_cost(&tri, two_of_three) - 2.2).abs() < 1e-12);
        // Closed form equals the outcome-weighted realized cost.
        for action in &tri_actions {
            let avg: f64 = oracle
                .outcomes(&tri)
                .iter()
                .map(|o| {
                    let (next, prob) = oracle.transition(&tri, action, o);
                    prob * oracle.slot_cost(&tri, &next)
                })
                .sum();
            assert!((avg - oracle.expected_cost(&tri, action)).abs() < 1e-12);
        }
    }

    #[test]
    fn value_iteration_trivial_cases() {
        let oracle = SspOracle::new(vec![0.3]).unwrap();
        let absorbing = SspState::start(StateFeedbackMatrix::new(1, 3));
        let vf = oracle.value_iteration(&absorbing, 1e-9).unwrap();
        assert_eq!(vf.value(&absorbing), Some(0.0));
        assert_eq!(vf.action(&absorbing), None);
        assert_eq!(vf.state_count(), 1);

        // A single receiver is targeted every slot; with no erasures every
        // slot decodes and the total cost is zero.
        let free = SspOracle::new(vec![0.0]).unwrap();
        let start = SspState::start(StateFeedbackMatrix::from_rows(&[&[1, 1]]));
        let vf = free.value_iteration(&start, 1e-9).unwrap();
        assert_eq!(vf.value(&start), Some(0.0));
        assert_eq!(vf.state_count(), 4);
    }

    #[test]
    fn single_receiver_value_matches_erasure_renewal_cost() {
        // One receiver, W wanted packets, erasure p: each slot targets it,
        // costing 1 per erased slot; expected erasures before W successes
        // are W * p / (1 - p).
        let p = 0.3;
        let oracle = SspOracle::new(vec![p]).unwrap();
        let start = SspState::start(StateFeedbackMatrix::from_rows(&[&[1, 1, 1]]));
        let vf = oracle.value_iteration(&start, 1e-12).unwrap();
        let want = 3.0 * p / (1.0 - p);
        assert!((vf.value(&start).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn optimal_first_action_targets_both_receivers_at_low_erasure() {
        let oracle = SspOracle::new(vec![0.1, 0.1]).unwrap();
        let start = SspState::start(planning_sfm());
        let vf = oracle.value_iteration(&start, 1e-12).unwrap();
        let chosen = vf.action(&start).unwrap();
        assert_eq!(chosen.targeted_receivers(), vec![0, 1]);
        assert!(
            [vec![0, 1], vec![1, 2], vec![3]].contains(&chosen.packets().to_vec()),
            "chose {:?}",
            chosen.packets()
        );
        let table = vf.table_text();
        assert!(table.contains("V=0.000000 action=-")); // absorbing row
        assert_eq!(table.lines().count(), vf.state_count());
    }

    #[test]
    fn hyperrect_deltas_take_the_three_allowed_values() {
        let oracle = SspOracle::new(vec![0.5, 0.5]).unwrap();
        let state = SspState::start(planning_sfm());
        let actions = oracle.enumerate_actions(&state).unwrap();
        let single = actions.iter().find(|a| a.packets() == [0]).unwrap();
        // Receiver 0 targeted and received (decode, -1/(1-p) = -2);
        // receiver 1 untargeted and received (delay, +1).
        let (next, _) = oracle.transition(&state, single, &[true, true]);
        assert_eq!(oracle.hyperrect_delta(&state, &next).unwrap(), vec![-2.0, 1.0]);
        // Both erased: no movement.
        let (still, _) = oracle.transition(&state, single, &[false, false]);
        assert_eq!(oracle.hyperrect_delta(&state, &still).unwrap(), vec![0.0, 0.0]);
        // A two-slot jump is rejected.
        let (far, _) = oracle.transition(&next, single, &[false, true]);
        assert!(oracle.hyperrect_delta(&state, &far).is_err());
    }

    #[test]
    fn rollouts_of_the_optimal_policy_estimate_its_value() {
        let oracle = SspOracle::new(vec![0.1, 0.1]).unwrap();
        let start = SspState::start(planning_sfm());
        let vf = oracle.value_iteration(&start, 1e-12).unwrap();
        let v = vf.value(&start).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 4000;
        let mut total = 0.0;
        let mut totsq = 0.0;
        for _ in 0..n {
            let cost = oracle
                .rollout(
                    &start,
                    |s| Ok(vf.action(s).expect("policy covers reachable states").clone()),
                    &mut rng,
                    10_000,
                )
                .unwrap();
            total += cost;
            totsq += cost * cost;
        }
        let mean = total / n as f64;
        let var = (totsq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt().max(1e-12);
        assert!((mean - v).abs() < 4.0 * se, "mean {mean}, value {v}, se {se}");
    }

    #[test]
    fn heuristic_rollouts_never_beat_the_oracle_when_deterministic() {
        // Erasure-free instances: rollouts are deterministic, so the
        // optimal total cost must be <= each heuristic's exactly.
        let oracle = SspOracle::new(vec![0.0, 0.0]).unwrap();
        let start = SspState::start(planning_sfm());
        let vf = oracle.value_iteration(&start, 1e-12).unwrap();
        let v = vf.value(&start).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for policy in [
            PolicyKind::MinOct,
            PolicyKind::MinDd,
            PolicyKind::Mwvs { lambda: 0.5 },
        ] {
            let cost = oracle
                .rollout(&start, |s| oracle.heuristic_action(s, policy), &mut rng, 10_000)
                .unwrap();
            assert!(v <= cost + 1e-12, "policy {policy:?}: optimal {v} vs heuristic {cost}");
        }
    }
}
