//! Small fixed-width bit matrix used for feedback state and adjacency.

use alloc::vec;
use alloc::vec::Vec;

const WORD_BITS: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Dense `rows x cols` bit matrix, row-major, one or more `u64` words per row.
///
/// Rows compare lexicographically, which gives the matrix a total order
/// usable as a map key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols).max(1);
        BitMatrix { rows, cols, words_per_row, words: vec![0; rows * words_per_row] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let w = self.words[r * self.words_per_row + c / WORD_BITS];
        w >> (c % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.words[r * self.words_per_row + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn row_count_ones(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Column indices of the set bits in row `r`, ascending.
    pub fn row_ones(&self, r: usize) -> OnesIter<'_> {
        OnesIter { words: self.row_words(r), word_idx: 0, current: self.row_words(r)[0], limit: self.cols }
    }
}

/// Iterator over set-bit positions in a word slice.
pub(crate) struct OnesIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    limit: usize,
}

impl Iterator for OnesIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let pos = self.word_idx * WORD_BITS + bit;
                return (pos < self.limit).then_some(pos);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

/// Growable bit set over `0..len`, backed by `u64` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn empty(len: usize) -> Self {
        BitSet { len, words: vec![0; words_for(len).max(1)] }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for (i, w) in s.words.iter_mut().enumerate() {
            *w = !0u64;
            let hi = (i + 1) * WORD_BITS;
            if hi > len {
                let valid = len.saturating_sub(i * WORD_BITS);
                *w = if valid == 0 { 0 } else { !0u64 >> (WORD_BITS - valid) };
            }
        }
        s
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// In-place intersection with `other`'s words.
    pub fn intersect_words(&mut self, other: &[u64]) {
        for (w, o) in self.words.iter_mut().zip(other) {
            *w &= o;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> OnesIter<'_> {
        OnesIter { words: &self.words, word_idx: 0, current: self.words[0], limit: self.len }
    }
}
