//! Feedback state for one broadcast block.
//!
//! After the systematic transmission of a block of `N` packets the sender
//! knows, from per-packet acknowledgements, which receiver still wants which
//! packet.  That knowledge is the state feedback matrix: entry `(i, j)` is 1
//! while receiver `i` wants packet `j` and 0 once it holds it.  All recovery
//! bookkeeping — decoding, delay charging, completion times — is driven from
//! this matrix.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;

use crate::bits::BitMatrix;
use crate::channel::{clamp_erasure_prob, ChannelModel};
use crate::graph::Clique;
use crate::{Error, Result};

/// Binary `M x N` wants matrix: rows are receivers, columns are packets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateFeedbackMatrix {
    wants: BitMatrix,
}

impl StateFeedbackMatrix {
    /// All-zero matrix: every receiver already holds every packet.
    pub fn new(receivers: usize, packets: usize) -> Self {
        StateFeedbackMatrix { wants: BitMatrix::zeros(receivers, packets) }
    }

    /// Builds a matrix from 0/1 rows.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        let mut sfm = Self::new(m, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                sfm.set_wanted(i, j, e != 0);
            }
        }
        sfm
    }

    pub fn receivers(&self) -> usize {
        self.wants.rows()
    }

    pub fn packets(&self) -> usize {
        self.wants.cols()
    }

    /// Whether receiver `i` still wants packet `j`.
    #[inline]
    pub fn wanted(&self, i: usize, j: usize) -> bool {
        self.wants.get(i, j)
    }

    /// Whether receiver `i` holds packet `j` (the complement of wanting it).
    #[inline]
    pub fn held(&self, i: usize, j: usize) -> bool {
        !self.wants.get(i, j)
    }

    pub fn set_wanted(&mut self, i: usize, j: usize, wanted: bool) {
        self.wants.set(i, j, wanted);
    }

    /// Size of receiver `i`'s wants set.
    pub fn wants_count(&self, i: usize) -> usize {
        self.wants.row_count_ones(i)
    }

    /// Packets receiver `i` still wants, ascending.
    pub fn wants_of(&self, i: usize) -> Vec<usize> {
        self.wants.row_ones(i).collect()
    }

    /// Total number of set entries (the vertex count of the IDNC graph).
    pub fn total_wanted(&self) -> usize {
        self.wants.count_ones()
    }

    /// Receivers with a non-empty wants set, ascending.
    pub fn wanting_receivers(&self) -> Vec<usize> {
        (0..self.receivers()).filter(|&i| self.wants_count(i) > 0).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.wants.count_ones() == 0
    }

    /// Serialises the matrix as comma-separated 0/1 rows, one per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.receivers() {
            let row: Vec<&str> =
                (0..self.packets()).map(|j| if self.wanted(i, j) { "1" } else { "0" }).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for field in line.split(',') {
                match field.trim() {
                    "0" => row.push(0),
                    "1" => row.push(1),
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "feedback matrix line {}: expected 0 or 1, got {:?}",
                            lineno + 1,
                            other
                        )))
                    }
                }
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::InvalidParameter(format!(
                        "feedback matrix line {}: ragged row",
                        lineno + 1
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter("feedback matrix is empty".to_string()));
        }
        let borrowed: Vec<&[u8]> = rows.iter().map(|r| r.as_slice()).collect();
        Ok(Self::from_rows(&borrowed))
    }
}

/// How a received packet combination looks to one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketClass {
    /// Exactly one wanted packet in the combination; the receiver decodes it
    /// on arrival.
    InstantlyDecodable { packet: usize },
    /// No wanted packet in the combination.
    NonInnovative,
    /// Two or more wanted packets; useful some day, but not decodable now.
    NonInstantlyDecodable,
}

/// Classifies the packet set of a transmission for receiver `i`.
pub fn classify(sfm: &StateFeedbackMatrix, i: usize, packets: &[usize]) -> PacketClass {
    let mut wanted = None;
    let mut count = 0usize;
    for &j in packets {
        if sfm.wanted(i, j) {
            count += 1;
            wanted = Some(j);
        }
    }
    match count {
        0 => PacketClass::NonInnovative,
        1 => PacketClass::InstantlyDecodable { packet: wanted.unwrap() },
        _ => PacketClass::NonInstantlyDecodable,
    }
}

/// What one recovery slot did to one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotEntry {
    /// The transmission was erased on this receiver's channel.
    NotReceived,
    /// The transmission arrived and was classified against the wants set.
    Received(PacketClass),
}

/// Per-receiver outcome of one recovery slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotOutcome {
    pub entries: Vec<SlotEntry>,
}

/// Per-receiver bookkeeping across one block.
#[derive(Debug, Clone)]
pub struct ReceiverState {
    pub index: usize,
    /// Memoryless erasure probability; for channels with memory this is the
    /// stationary erasure probability, kept for weighting formulas that
    /// ignore the channel state.
    pub erasure_prob: f64,
    pub wants_size: usize,
    /// Wants-set size at the start of the recovery phase.
    pub initial_wants_size: usize,
    /// Accumulated decoding delay: received recovery transmissions that were
    /// non-innovative or not instantly decodable while still wanting.
    pub accum_delay: usize,
    /// Recovery slots erased while still wanting.
    pub erased_slots: usize,
    /// Recovery slot (1-based) at which the wants set emptied; `Some(0)` if
    /// it was empty from the start.
    pub completed_at: Option<usize>,
}

impl ReceiverState {
    pub fn new(index: usize, erasure_prob: f64) -> Self {
        ReceiverState {
            index,
            erasure_prob: clamp_erasure_prob(erasure_prob),
            wants_size: 0,
            initial_wants_size: 0,
            accum_delay: 0,
            erased_slots: 0,
            completed_at: None,
        }
    }

    /// Stationary probability of receiving a transmission.
    pub fn reception_prob(&self) -> f64 {
        1.0 - self.erasure_prob
    }
}

/// Runs the systematic phase: each of the `n` packets is broadcast once and
/// every erased `(receiver, packet)` pair becomes a set entry of the
/// returned feedback matrix.  Every receiver's channel advances `n` steps.
pub fn run_initial_phase(
    n: usize,
    channel: &mut ChannelModel,
    rng: &mut impl Rng,
) -> StateFeedbackMatrix {
    let m = channel.receivers();
    let mut sfm = StateFeedbackMatrix::new(m, n);
    for j in 0..n {
        for i in 0..m {
            if !channel.step(i, rng) {
                sfm.set_wanted(i, j, true);
            }
        }
    }
    sfm
}

/// Recovery-phase state machine: the feedback matrix plus receiver
/// bookkeeping, advanced one transmission at a time.
#[derive(Debug, Clone)]
pub struct BlockState {
    sfm: StateFeedbackMatrix,
    receivers: Vec<ReceiverState>,
    slot: usize,
}

impl BlockState {
    /// Starts a recovery phase from an initial feedback matrix.
    /// `erasure_probs` must have one entry per receiver.
    pub fn new(sfm: StateFeedbackMatrix, erasure_probs: &[f64]) -> Result<Self> {
        if erasure_probs.len() != sfm.receivers() {
            return Err(Error::InvalidParameter(
                "one erasure probability per receiver required".to_string(),
            ));
        }
        let receivers = erasure_probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut r = ReceiverState::new(i, p);
                r.wants_size = sfm.wants_count(i);
                r.initial_wants_size = r.wants_size;
                if r.wants_size == 0 {
                    r.completed_at = Some(0);
                }
                r
            })
            .collect();
        Ok(BlockState { sfm, receivers, slot: 0 })
    }

    pub fn sfm(&self) -> &StateFeedbackMatrix {
        &self.sfm
    }

    pub fn receivers(&self) -> &[ReceiverState] {
        &self.receivers
    }

    pub fn receivers_mut(&mut self) -> &mut [ReceiverState] {
        &mut self.receivers
    }

    /// Recovery slots applied so far.
    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_complete(&self) -> bool {
        self.sfm.is_complete()
    }

    pub fn wanting_count(&self) -> usize {
        self.receivers.iter().filter(|r| r.wants_size > 0).count()
    }

    /// Applies one recovery transmission.
    ///
    /// `received[i]` says whether receiver `i`'s channel delivered the slot.
    /// Wanting receivers that receive decode (exactly one wanted packet in
    /// the combination) or are charged one unit of decoding delay; wanting
    /// receivers that are erased accrue an erased slot.  Receivers with an
    /// empty wants set are untouched.
    ///
    /// Fails if the clique references an entry that is no longer set — an
    /// action computed from a stale feedback state.
    pub fn apply_slot(&mut self, clique: &Clique, received: &[bool]) -> Result<SlotOutcome> {
        if received.len() != self.receivers.len() {
            return Err(Error::InvalidParameter(
                "one reception flag per receiver required".to_string(),
            ));
        }
        for v in clique.members() {
            if !self.sfm.wanted(v.receiver, v.packet) {
                return Err(Error::StaleClique { receiver: v.receiver, packet: v.packet });
            }
        }
        self.slot += 1;
        let packets = clique.packets();
        let mut entries = Vec::with_capacity(self.receivers.len());
        for i in 0..self.receivers.len() {
            let wanting = self.receivers[i].wants_size > 0;
            if !received[i] {
                if wanting {
                    self.receivers[i].erased_slots += 1;
                }
                entries.push(SlotEntry::NotReceived);
                continue;
            }
            let class = classify(&self.sfm, i, packets);
            if wanting {
                match class {
                    PacketClass::InstantlyDecodable { packet } => {
                        self.sfm.set_wanted(i, packet, false);
                        self.receivers[i].wants_size -= 1;
                        if self.receivers[i].wants_size == 0 {
                            self.receivers[i].completed_at = Some(self.slot);
                        }
                    }
                    PacketClass::NonInnovative | PacketClass::NonInstantlyDecodable => {
                        self.receivers[i].accum_delay += 1;
                    }
                }
            }
            entries.push(SlotEntry::Received(class));
        }
        Ok(SlotOutcome { entries })
    }

    /// Individual completion times `T_i` (1-based recovery slots) and the
    /// overall completion time `max_i T_i`.  Fails while any receiver still
    /// wants packets.
    pub fn completion_times(&self) -> Result<(Vec<usize>, usize)> {
        let still_wanting = self.wanting_count();
        if still_wanting > 0 {
            return Err(Error::IncompleteBlock { still_wanting });
        }
        let ict: Vec<usize> = self.receivers.iter().map(|r| r.completed_at.unwrap()).collect();
        let oct = ict.iter().copied().max().unwrap_or(0);
        Ok((ict, oct))
    }

    /// Checks the slot conservation law for every completed receiver: the
    /// completion time equals initial wants + decoding delay + erased slots,
    /// since every recovery slot up to completion either decoded a packet,
    /// charged a delay unit, or was erased.
    pub fn completion_identity_holds(&self) -> bool {
        self.receivers.iter().all(|r| match r.completed_at {
            Some(t) => t == r.initial_wants_size + r.accum_delay + r.erased_slots,
            None => true,
        })
    }
}
