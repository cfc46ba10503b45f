//! The IDNC graph: the space of feasible coded transmissions.
//!
//! Each unit entry `(i, j)` of the feedback matrix becomes a vertex `v_ij`.
//! Two vertices `v_ij` and `v_kl` are adjacent iff XORing packets `j` and
//! `l` into one transmission keeps it instantly decodable for both
//! receivers, which happens exactly when
//!
//! * C1: `j = l` — both receivers want the same packet, or
//! * C2: `j` is held by receiver `k` and `l` is held by receiver `i`.
//!
//! Cliques of this graph are XOR combinations decodable on arrival by every
//! receiver they target; maximal cliques are the sender's candidate
//! transmissions.  The graph is rebuilt from the feedback matrix every slot:
//! decoding grows Has sets, which can create C2 edges that did not exist
//! before.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::bits::{words_for, BitSet};
use crate::feedback::StateFeedbackMatrix;
use crate::{Error, Result};

/// One unit feedback entry: receiver `receiver` wants packet `packet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub receiver: usize,
    pub packet: usize,
}

/// IDNC graph over the unit entries of a feedback matrix.
///
/// Vertices are ordered lexicographically by (receiver, packet); adjacency
/// is stored as a dense bit matrix over vertex indices.
#[derive(Debug, Clone)]
pub struct IdncGraph {
    vertices: Vec<Vertex>,
    words_per_row: usize,
    adjacency: Vec<u64>,
}

impl IdncGraph {
    /// Builds the graph for the current feedback state.
    pub fn build(sfm: &StateFeedbackMatrix) -> Self {
        let mut vertices = Vec::with_capacity(sfm.total_wanted());
        for i in 0..sfm.receivers() {
            for j in sfm.wants_of(i) {
                vertices.push(Vertex { receiver: i, packet: j });
            }
        }
        let n = vertices.len();
        let words_per_row = words_for(n).max(1);
        let mut adjacency = alloc::vec![0u64; n * words_per_row];
        for u in 0..n {
            for v in u + 1..n {
                let a = vertices[u];
                let b = vertices[v];
                // C1: shared packet (distinct vertices, so distinct receivers).
                // C2: each packet is held by the other vertex's receiver.
                let adjacent = a.packet == b.packet
                    || (sfm.held(b.receiver, a.packet) && sfm.held(a.receiver, b.packet));
                if adjacent {
                    adjacency[u * words_per_row + v / 64] |= 1 << (v % 64);
                    adjacency[v * words_per_row + u / 64] |= 1 << (u % 64);
                }
            }
        }
        IdncGraph { vertices, words_per_row, adjacency }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Vertices in lexicographic (receiver, packet) order; the position in
    /// this slice is the vertex index used by all other queries.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        self.vertices[idx]
    }

    /// Index of the vertex for `(receiver, packet)`, if present.
    pub fn vertex_index(&self, receiver: usize, packet: usize) -> Option<usize> {
        self.vertices.binary_search(&Vertex { receiver, packet }).ok()
    }

    /// Adjacency row of vertex `u` as bit words over vertex indices.
    pub(crate) fn adjacency_row(&self, u: usize) -> &[u64] {
        &self.adjacency[u * self.words_per_row..(u + 1) * self.words_per_row]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency_row(u)[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency_row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.vertex_count()).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    /// Vertices adjacent to every member of `members` (vertex indices).
    /// Members themselves are excluded (adjacency is irreflexive); the empty
    /// set returns all vertices.
    pub(crate) fn common_neighbors(&self, members: &[usize]) -> BitSet {
        let mut set = BitSet::full(self.vertex_count());
        for &u in members {
            set.intersect_words(self.adjacency_row(u));
        }
        set
    }

    /// Whether the clique (as vertex indices) cannot be extended by any
    /// further vertex.
    pub fn is_maximal(&self, members: &[usize]) -> bool {
        if members.is_empty() {
            return self.is_empty();
        }
        self.common_neighbors(members).is_empty()
    }

    /// All maximal cliques, each a sorted list of vertex indices, in
    /// deterministic (lexicographic) order.  Exhaustive Bron-Kerbosch
    /// enumeration with pivoting — intended for small instances and test
    /// oracles, not for the per-slot scheduling path.
    pub fn maximal_cliques(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut current = Vec::new();
        self.bron_kerbosch(&mut current, BitSet::full(n), BitSet::empty(n), &mut out);
        for clique in &mut out {
            clique.sort_unstable();
        }
        out.sort();
        out
    }

    fn bron_kerbosch(
        &self,
        current: &mut Vec<usize>,
        mut candidates: BitSet,
        mut excluded: BitSet,
        out: &mut Vec<Vec<usize>>,
    ) {
        if candidates.is_empty() && excluded.is_empty() {
            out.push(current.clone());
            return;
        }
        // Pivot on the vertex (from candidates or excluded) covering the most
        // candidates; only non-neighbors of the pivot need be branched on.
        let pivot = candidates
            .iter()
            .chain(excluded.iter())
            .max_by_key(|&u| {
                let mut overlap = candidates.clone();
                overlap.intersect_words(self.adjacency_row(u));
                overlap.count()
            })
            .expect("candidates or excluded nonempty");
        let branch: Vec<usize> =
            candidates.iter().filter(|&v| !self.adjacent(pivot, v)).collect();
        for v in branch {
            let mut next_candidates = candidates.clone();
            next_candidates.intersect_words(self.adjacency_row(v));
            let mut next_excluded = excluded.clone();
            next_excluded.intersect_words(self.adjacency_row(v));
            current.push(v);
            self.bron_kerbosch(current, next_candidates, next_excluded, out);
            current.pop();
            candidates.remove(v);
            excluded.insert(v);
        }
    }

    /// Edge list as text, one `v(i,j) -- v(k,l)` line per edge, for
    /// debugging and golden fixtures.
    pub fn edge_list_text(&self) -> String {
        let mut s = String::new();
        for u in 0..self.vertex_count() {
            for v in u + 1..self.vertex_count() {
                if self.adjacent(u, v) {
                    let a = self.vertices[u];
                    let b = self.vertices[v];
                    let _ = writeln!(
                        s,
                        "v({},{}) -- v({},{})",
                        a.receiver, a.packet, b.receiver, b.packet
                    );
                }
            }
        }
        s
    }
}

/// One IDNC transmission: a set of mutually compatible vertices, XORing the
/// distinct packets they reference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Clique {
    members: Vec<Vertex>,
    packets: Vec<usize>,
}

impl Clique {
    /// Builds a clique from vertex indices of `graph`, validating pairwise
    /// adjacency.
    pub fn from_indices(graph: &IdncGraph, indices: &[usize]) -> Result<Self> {
        for (a, &u) in indices.iter().enumerate() {
            for &v in &indices[a + 1..] {
                if !graph.adjacent(u, v) {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "vertices {u} and {v} are not adjacent"
                    )));
                }
            }
        }
        let mut members: Vec<Vertex> = indices.iter().map(|&u| graph.vertex(u)).collect();
        members.sort_unstable();
        members.dedup();
        let mut packets: Vec<usize> = members.iter().map(|v| v.packet).collect();
        packets.sort_unstable();
        packets.dedup();
        Ok(Clique { members, packets })
    }

    /// Builds the canonical clique for a packet combination: every receiver
    /// wanting exactly one of `packets` contributes its vertex.  Used to
    /// replay externally given schedules; the member set may be empty if no
    /// receiver is targeted.
    pub fn from_packets(sfm: &StateFeedbackMatrix, packets: &[usize]) -> Self {
        let mut ps: Vec<usize> = packets.to_vec();
        ps.sort_unstable();
        ps.dedup();
        let mut members = Vec::new();
        for i in 0..sfm.receivers() {
            let wanted: Vec<usize> = ps.iter().copied().filter(|&j| sfm.wanted(i, j)).collect();
            if let [only] = wanted[..] {
                members.push(Vertex { receiver: i, packet: only });
            }
        }
        Clique { members, packets: ps }
    }

    pub fn members(&self) -> &[Vertex] {
        &self.members
    }

    /// Distinct packets XORed into the transmission, ascending.
    pub fn packets(&self) -> &[usize] {
        &self.packets
    }

    /// Receivers targeted by this transmission (one member vertex each).
    pub fn targeted_receivers(&self) -> Vec<usize> {
        let mut rs: Vec<usize> = self.members.iter().map(|v| v.receiver).collect();
        rs.sort_unstable();
        rs.dedup();
        rs
    }
}
