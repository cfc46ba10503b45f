//! Block-level Monte-Carlo simulation.
//!
//! One block is a two-phase broadcast: the systematic phase sends every
//! packet once and the erasures populate the feedback matrix; the recovery
//! phase then transmits one selected packet combination per slot until every
//! receiver holds every packet.  This module runs whole blocks under a
//! chosen policy and channel, computes per-block completion and delay
//! metrics, aggregates them across many independently seeded blocks, and
//! provides an idealized random-linear-coding baseline for completion-time
//! comparisons.
//!
//! Every recovery slot re-validates the invariants the scheduler relies on:
//! selected cliques are pairwise adjacent, instantly decodable for every
//! targeted receiver and maximal, and the per-receiver state movement stays
//! inside its one-slot hyperrectangle.  The checks are cheap next to the
//! graph build and stay on in release builds.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::channel::{ChannelModel, GecParams, MAX_ERASURE_PROB};
use crate::feedback::{
    classify, run_initial_phase, BlockState, PacketClass, StateFeedbackMatrix,
};
use crate::graph::{Clique, IdncGraph};
use crate::select::{select_for_policy, SelectionConfig};
use crate::weights::{channel_weighted_value, floored};
use crate::{sqrt, Error, Result};

/// Erasure channel specification for an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    /// Memoryless channels; each block draws every receiver's erasure
    /// probability uniformly from `[p_min, p_max]`.
    Memoryless { p_min: f64, p_max: f64 },
    /// Symmetric Gilbert-Elliott channels with the given memory
    /// `mu = 1 - b - g`; each block draws initial states from the stationary
    /// distribution.
    GilbertElliott { memory: f64 },
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::Memoryless { p_min, p_max } => {
                if !(p_min.is_finite() && p_max.is_finite()) || p_min < 0.0 || p_min > p_max {
                    return Err(Error::InvalidParameter(
                        "memoryless channel requires 0 <= p_min <= p_max".to_string(),
                    ));
                }
                if p_max > MAX_ERASURE_PROB {
                    return Err(Error::InvalidParameter(
                        "p_max exceeds the admissible erasure probability".to_string(),
                    ));
                }
                Ok(())
            }
            ChannelSpec::GilbertElliott { memory } => GecParams::from_memory(memory).map(|_| ()),
        }
    }
}

/// Transmission scheme under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Instantly decodable coding with the given clique selection.
    Idnc(SelectionConfig),
    /// Idealized random linear coding: completion-time baseline only.
    Rlnc,
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_packets: usize,
    pub m_receivers: usize,
    pub channel: ChannelSpec,
    pub scheme: Scheme,
    pub n_blocks: usize,
    pub master_seed: u64,
    /// Recovery-slot cap per block; defaults to `50 * n_packets`.
    pub slot_cap: Option<usize>,
}

impl ExperimentConfig {
    /// Effective recovery-slot cap.
    pub fn slot_cap(&self) -> usize {
        self.slot_cap.unwrap_or(50 * self.n_packets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_packets == 0 || self.m_receivers == 0 {
            return Err(Error::InvalidParameter(
                "n_packets and m_receivers must be positive".to_string(),
            ));
        }
        if self.n_blocks == 0 {
            return Err(Error::InvalidParameter("n_blocks must be positive".to_string()));
        }
        if self.slot_cap() < self.n_packets {
            return Err(Error::InvalidParameter(
                "slot cap must be at least the block size".to_string(),
            ));
        }
        self.channel.validate()?;
        if let Scheme::Idnc(sel) = &self.scheme {
            sel.policy.validate()?;
        }
        Ok(())
    }
}

/// The rng stream for one block: seeded from the master seed and the block
/// index, so blocks are independent and any block can be replayed alone.
pub fn block_rng(master_seed: u64, block_index: u64) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&block_index.to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

/// Completion and delay figures for one finished block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetrics {
    /// Individual completion times, in recovery slots.
    pub ict: Vec<usize>,
    /// Overall completion time `max(ict)`.
    pub oct: usize,
    /// Wants-set sizes at the start of the recovery phase.
    pub initial_wants: Vec<usize>,
    /// Recovery slots erased per receiver while it was still wanting.
    pub erased_slots: Vec<usize>,
    /// Final decoding delays; absent for schemes without a per-packet
    /// decoding notion (RLNC).
    pub final_delays: Option<Vec<usize>>,
    /// Mean of `final_delays` over all receivers.
    pub mean_delay: Option<f64>,
    /// Population variance of `final_delays` across receivers.
    pub delay_variance: Option<f64>,
}

impl BlockMetrics {
    /// Re-derives the summary fields from the per-receiver data and checks
    /// they match the stored values exactly.
    pub fn consistent(&self) -> bool {
        if self.oct != self.ict.iter().copied().max().unwrap_or(0) {
            return false;
        }
        match (&self.final_delays, self.mean_delay, self.delay_variance) {
            (None, None, None) => true,
            (Some(delays), Some(mean), Some(var)) => {
                let (m, v) = mean_and_population_variance(delays);
                m == mean && v == var
            }
            _ => false,
        }
    }
}

fn mean_and_population_variance(delays: &[usize]) -> (f64, f64) {
    let m = delays.len() as f64;
    let mean = delays.iter().sum::<usize>() as f64 / m;
    let var = delays.iter().map(|&d| (d as f64 - mean) * (d as f64 - mean)).sum::<f64>() / m;
    (mean, var)
}

fn idnc_metrics(block: &BlockState) -> Result<BlockMetrics> {
    let (ict, oct) = block.completion_times()?;
    assert!(
        block.completion_identity_holds(),
        "completion time != initial wants + delays + erasures"
    );
    let delays: Vec<usize> = block.receivers().iter().map(|r| r.accum_delay).collect();
    let (mean_delay, delay_variance) = mean_and_population_variance(&delays);
    Ok(BlockMetrics {
        ict,
        oct,
        initial_wants: block.receivers().iter().map(|r| r.initial_wants_size).collect(),
        erased_slots: block.receivers().iter().map(|r| r.erased_slots).collect(),
        final_delays: Some(delays),
        mean_delay: Some(mean_delay),
        delay_variance: Some(delay_variance),
    })
}

/// Per-receiver scheduling value `W_i / q_i + D_i` used by the per-slot
/// movement check.
fn scheduling_values(block: &BlockState, channel: &ChannelModel) -> Vec<f64> {
    block
        .receivers()
        .iter()
        .map(|r| channel_weighted_value(r, 0.5, false, channel))
        .collect()
}

fn assert_clique_sound(graph: &IdncGraph, sfm: &StateFeedbackMatrix, clique: &Clique) {
    let indices: Vec<usize> = clique
        .members()
        .iter()
        .map(|v| graph.vertex_index(v.receiver, v.packet).expect("member is a graph vertex"))
        .collect();
    for (a, &u) in indices.iter().enumerate() {
        for &v in &indices[a + 1..] {
            assert!(graph.adjacent(u, v), "selected clique is not pairwise adjacent");
        }
    }
    for v in clique.members() {
        assert_eq!(
            classify(sfm, v.receiver, clique.packets()),
            PacketClass::InstantlyDecodable { packet: v.packet },
            "selected clique is not instantly decodable for receiver {}",
            v.receiver
        );
    }
    assert!(graph.is_maximal(&indices), "selected clique is not maximal");
}

fn assert_slot_movement(before: &[f64], block: &BlockState, channel: &ChannelModel) {
    let after = scheduling_values(block, channel);
    for (i, r) in block.receivers().iter().enumerate() {
        let delta = after[i] - before[i];
        let decode = -1.0 / floored(r.reception_prob());
        let in_set = delta.abs() < 1e-9
            || (delta - 1.0).abs() < 1e-9
            || (delta - decode).abs() < 1e-9;
        assert!(
            in_set,
            "receiver {i} moved {delta} in one slot; allowed {{ {decode}, 0, 1 }}"
        );
    }
}

/// Runs the recovery phase to completion: build the graph, select a clique,
/// sample every channel, apply the slot — until all wants sets are empty or
/// the slot cap is exceeded.
pub fn run_recovery(
    block: &mut BlockState,
    channel: &mut ChannelModel,
    sel: &SelectionConfig,
    rng: &mut impl Rng,
    slot_cap: usize,
) -> Result<()> {
    let m = channel.receivers();
    while !block.is_complete() {
        if block.slot() >= slot_cap {
            return Err(Error::SlotCapExceeded {
                cap: slot_cap,
                still_wanting: block.wanting_count(),
            });
        }
        let graph = IdncGraph::build(block.sfm());
        let clique = select_for_policy(&graph, block.receivers(), sel, channel)?;
        assert_clique_sound(&graph, block.sfm(), &clique);
        let before = scheduling_values(block, channel);
        let received: Vec<bool> = (0..m).map(|i| channel.step(i, rng)).collect();
        block.apply_slot(&clique, &received)?;
        assert_slot_movement(&before, block, channel);
    }
    Ok(())
}

/// Recovery of one block from a given feedback matrix under IDNC.
pub fn idnc_recovery(
    sfm: StateFeedbackMatrix,
    erasure_probs: &[f64],
    sel: &SelectionConfig,
    channel: &mut ChannelModel,
    rng: &mut impl Rng,
    slot_cap: usize,
) -> Result<BlockMetrics> {
    let mut block = BlockState::new(sfm, erasure_probs)?;
    run_recovery(&mut block, channel, sel, rng, slot_cap)?;
    idnc_metrics(&block)
}

/// Recovery of one block under idealized random linear coding: every
/// transmission is innovative for every receiver still short of packets, so
/// receiver `i` completes at its `W_i`-th successful reception.  Decoding
/// delays are not defined for this scheme.
pub fn rlnc_recovery(
    sfm: &StateFeedbackMatrix,
    channel: &mut ChannelModel,
    rng: &mut impl Rng,
    slot_cap: usize,
) -> Result<BlockMetrics> {
    let m = sfm.receivers();
    let wants: Vec<usize> = (0..m).map(|i| sfm.wants_count(i)).collect();
    let mut successes = vec![0usize; m];
    let mut erased = vec![0usize; m];
    let mut ict: Vec<usize> = wants.iter().map(|_| 0).collect();
    let mut remaining: usize = wants.iter().filter(|&&w| w > 0).count();
    let mut slot = 0usize;
    while remaining > 0 {
        if slot >= slot_cap {
            return Err(Error::SlotCapExceeded { cap: slot_cap, still_wanting: remaining });
        }
        slot += 1;
        for i in 0..m {
            let got = channel.step(i, rng);
            if successes[i] >= wants[i] {
                continue;
            }
            if got {
                successes[i] += 1;
                if successes[i] == wants[i] {
                    ict[i] = slot;
                    remaining -= 1;
                }
            } else {
                erased[i] += 1;
            }
        }
    }
    for i in 0..m {
        debug_assert_eq!(ict[i], wants[i] + erased[i]);
    }
    let oct = ict.iter().copied().max().unwrap_or(0);
    Ok(BlockMetrics {
        ict,
        oct,
        initial_wants: wants,
        erased_slots: erased,
        final_delays: None,
        mean_delay: None,
        delay_variance: None,
    })
}

/// Draws the per-block channel bank and the per-receiver erasure
/// probabilities used by the weighting formulas (the stationary erasure
/// probability for channels with memory).
fn draw_channel(cfg: &ExperimentConfig, rng: &mut impl Rng) -> Result<(ChannelModel, Vec<f64>)> {
    let m = cfg.m_receivers;
    match cfg.channel {
        ChannelSpec::Memoryless { p_min, p_max } => {
            let ps: Vec<f64> =
                (0..m).map(|_| p_min + (p_max - p_min) * rng.random::<f64>()).collect();
            Ok((ChannelModel::memoryless(ps.clone())?, ps))
        }
        ChannelSpec::GilbertElliott { memory } => {
            let params = GecParams::from_memory(memory)?;
            let channel = ChannelModel::gilbert_elliott(params, m, rng);
            Ok((channel, vec![1.0 - params.steady_good(); m]))
        }
    }
}

/// Runs one full block — channel draw, systematic phase, recovery — on the
/// given rng stream.
pub fn run_block(cfg: &ExperimentConfig, rng: &mut impl Rng) -> Result<BlockMetrics> {
    let (mut channel, erasure_probs) = draw_channel(cfg, rng)?;
    let sfm = run_initial_phase(cfg.n_packets, &mut channel, rng);
    let metrics = match &cfg.scheme {
        Scheme::Idnc(sel) => {
            idnc_recovery(sfm, &erasure_probs, sel, &mut channel, rng, cfg.slot_cap())?
        }
        Scheme::Rlnc => rlnc_recovery(&sfm, &mut channel, rng, cfg.slot_cap())?,
    };
    debug_assert!(metrics.consistent());
    Ok(metrics)
}

/// Runs block `block_index` of the experiment on its own derived rng stream.
pub fn run_block_indexed(cfg: &ExperimentConfig, block_index: u64) -> Result<BlockMetrics> {
    run_block(cfg, &mut block_rng(cfg.master_seed, block_index))
}

/// Replays a fixed erasure-free schedule (one packet set per slot) from a
/// feedback matrix and returns the resulting block metrics.
pub fn replay_schedule(sfm: &StateFeedbackMatrix, schedule: &[&[usize]]) -> Result<BlockMetrics> {
    let m = sfm.receivers();
    let mut block = BlockState::new(sfm.clone(), &vec![0.0; m])?;
    let received = vec![true; m];
    for packets in schedule {
        let clique = Clique::from_packets(block.sfm(), packets);
        block.apply_slot(&clique, &received)?;
    }
    idnc_metrics(&block)
}

/// Cross-block aggregates with standard errors of each mean.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMetrics {
    pub n_blocks: usize,
    pub mean_oct: f64,
    pub se_oct: f64,
    /// Mean over blocks of the per-block mean decoding delay.
    pub mean_delay: Option<f64>,
    pub se_delay: Option<f64>,
    /// Mean over blocks of the per-block across-receiver delay variance.
    pub mean_delay_variance: Option<f64>,
    pub se_delay_variance: Option<f64>,
}

/// Mean and standard error of the mean; the standard error of a single
/// observation is 0.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}

/// Aggregates finished blocks, in order.  Delay statistics are reported only
/// when every block carries them.
pub fn aggregate_blocks(blocks: &[BlockMetrics]) -> Result<AggregateMetrics> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("no blocks to aggregate".to_string()));
    }
    let octs: Vec<f64> = blocks.iter().map(|b| b.oct as f64).collect();
    let (mean_oct, se_oct) = mean_and_se(&octs);
    let delays: Option<Vec<f64>> = blocks.iter().map(|b| b.mean_delay).collect();
    let variances: Option<Vec<f64>> = blocks.iter().map(|b| b.delay_variance).collect();
    let (mean_delay, se_delay) = match &delays {
        Some(d) => {
            let (m, s) = mean_and_se(d);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    let (mean_delay_variance, se_delay_variance) = match &variances {
        Some(v) => {
            let (m, s) = mean_and_se(v);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    Ok(AggregateMetrics {
        n_blocks: blocks.len(),
        mean_oct,
        se_oct,
        mean_delay,
        se_delay,
        mean_delay_variance,
        se_delay_variance,
    })
}

/// Runs all blocks of the experiment sequentially and aggregates them.
/// Deterministic in `(cfg, master_seed)`; block `k` always runs on the
/// stream from [`block_rng`], so a parallel driver that collects blocks by
/// index aggregates to bit-identical results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateMetrics> {
    cfg.validate()?;
    let mut blocks = Vec::with_capacity(cfg.n_blocks);
    for k in 0..cfg.n_blocks {
        let metrics = run_block_indexed(cfg, k as u64)
            .map_err(|e| Error::InBlock { block: k as u64, cause: Box::new(e) })?;
        blocks.push(metrics);
    }
    aggregate_blocks(&blocks)
}
