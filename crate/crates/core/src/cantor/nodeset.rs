use crate::error::{Error, Result};

use super::MAX_NODE_DEPTH;

/// A set of nodes of one fixed depth, stored as a dense bitset over the
/// `2^depth` binary words of that length (root bit most significant).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    depth: u32,
    bits: Vec<u64>,
}

fn words_for(depth: u32) -> usize {
    ((1usize << depth) + 63) / 64
}

/// Mask of the valid bits in the single word used for depths below 6.
fn low_mask(depth: u32) -> u64 {
    if depth >= 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << depth)) - 1
    }
}

impl NodeSet {
    pub fn empty(depth: u32) -> Self {
        assert!(depth <= MAX_NODE_DEPTH, "node depth {depth} above {MAX_NODE_DEPTH}");
        Self { depth, bits: vec![0; words_for(depth)] }
    }

    pub fn full(depth: u32) -> Self {
        let mut s = Self::empty(depth);
        s.bits.iter_mut().for_each(|w| *w = u64::MAX);
        s.bits[0] &= low_mask(depth);
        s
    }

    pub fn checked_empty(depth: u32) -> Result<Self> {
        if depth > MAX_NODE_DEPTH {
            return Err(Error::DepthExceeded { requested: depth, limit: MAX_NODE_DEPTH });
        }
        Ok(Self::empty(depth))
    }

    pub fn from_codes(depth: u32, codes: impl IntoIterator<Item = u64>) -> Self {
        let mut s = Self::empty(depth);
        for c in codes {
            s.insert(c);
        }
        s
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn capacity(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn contains(&self, code: u64) -> bool {
        code < self.capacity() && self.bits[(code / 64) as usize] >> (code % 64) & 1 == 1
    }

    pub fn insert(&mut self, code: u64) {
        assert!(code < self.capacity(), "node {code} out of range at depth {}", self.depth);
        self.bits[(code / 64) as usize] |= 1 << (code % 64);
    }

    pub fn remove(&mut self, code: u64) {
        if code < self.capacity() {
            self.bits[(code / 64) as usize] &= !(1 << (code % 64));
        }
    }

    /// Inserts every code in `lo..hi`.
    pub fn insert_range(&mut self, lo: u64, hi: u64) {
        let mut c = lo;
        while c < hi {
            if c % 64 == 0 && hi - c >= 64 {
                self.bits[(c / 64) as usize] = u64::MAX;
                c += 64;
            } else {
                self.insert(c);
                c += 1;
            }
        }
    }

    pub fn len(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(i as u64 * 64 + t)
            })
        })
    }

    /// The same set seen at a finer depth: every node becomes its `2^k`
    /// descendants.
    pub fn refine(&self, depth: u32) -> NodeSet {
        assert!(depth >= self.depth);
        if depth == self.depth {
            return self.clone();
        }
        let k = depth - self.depth;
        let mut out = NodeSet::empty(depth);
        for c in self.iter() {
            out.insert_range(c << k, (c + 1) << k);
        }
        out
    }

    /// Ancestors at a coarser depth of the nodes in the set.
    pub fn project(&self, depth: u32) -> NodeSet {
        assert!(depth <= self.depth);
        let k = self.depth - depth;
        let mut out = NodeSet::empty(depth);
        for c in self.iter() {
            out.insert(c >> k);
        }
        out
    }

    /// Whether the set is a union of sibling pairs, i.e. representable one
    /// level up.
    pub(crate) fn is_coarsenable(&self) -> bool {
        self.depth > 0 && self.bits.iter().all(|&w| (w ^ (w >> 1)) & 0x5555_5555_5555_5555 == 0)
    }

    fn zip(&self, other: &NodeSet, f: impl Fn(u64, u64) -> u64) -> NodeSet {
        assert_eq!(self.depth, other.depth, "node sets of different depths");
        let mut out = NodeSet {
            depth: self.depth,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        };
        out.bits[0] &= low_mask(self.depth);
        out
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        self.zip(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> NodeSet {
        let mut out = NodeSet {
            depth: self.depth,
            bits: self.bits.iter().map(|&w| !w).collect(),
        };
        out.bits[0] &= low_mask(self.depth);
        out
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.difference(other).is_empty()
    }
}

impl std::fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let words: Vec<String> = self.iter().map(|c| super::format_word(c, self.depth)).collect();
        write!(f, "NodeSet(d={}, {{{}}})", self.depth, words.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_and_project() {
        let s = NodeSet::from_codes(1, [0]);
        let r = s.refine(3);
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(r.project(1), s);
        let big = NodeSet::from_codes(4, [3]).refine(10);
        assert_eq!(big.len(), 64);
        assert_eq!(big.iter().next(), Some(3 << 6));
    }

    #[test]
    fn complement_masks_unused_bits() {
        let s = NodeSet::empty(2).complement();
        assert_eq!(s.len(), 4);
        assert!(NodeSet::full(0).is_full());
        assert_eq!(NodeSet::full(7).complement().len(), 0);
    }

    #[test]
    fn coarsenable_detects_sibling_pairs() {
        assert!(NodeSet::from_codes(2, [2, 3]).is_coarsenable());
        assert!(!NodeSet::from_codes(2, [1, 2]).is_coarsenable());
        assert!(!NodeSet::full(0).is_coarsenable());
    }
}
