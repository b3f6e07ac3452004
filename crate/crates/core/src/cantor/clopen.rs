use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

use super::{format_word, parse_word, NodeSet, Point};

/// A clopen subset of `2^ω`, stored as a node set at its minimal depth.
///
/// Depth 0 is used only by the empty set and the whole space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Clopen {
    nodes: NodeSet,
}

impl Clopen {
    pub fn empty() -> Self {
        Self { nodes: NodeSet::empty(0) }
    }

    pub fn full() -> Self {
        Self { nodes: NodeSet::full(0) }
    }

    pub fn from_nodes(nodes: NodeSet) -> Self {
        let mut nodes = nodes;
        while nodes.is_coarsenable() {
            let d = nodes.depth() - 1;
            nodes = NodeSet::from_codes(d, nodes.iter().filter(|c| c % 2 == 0).map(|c| c >> 1));
        }
        Self { nodes }
    }

    /// The cylinder `[s]` of a bit word.
    pub fn cylinder(word: &str) -> Result<Self> {
        let (depth, code) = parse_word(word)?;
        Ok(Self::cylinder_code(code, depth))
    }

    pub fn cylinder_code(code: u64, depth: u32) -> Self {
        Self::from_nodes(NodeSet::from_codes(depth, [code]))
    }

    pub fn from_words<'a>(depth: u32, words: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut nodes = NodeSet::checked_empty(depth)?;
        for w in words {
            let (d, c) = parse_word(w)?;
            if d != depth {
                return Err(Error::Parse(format!("word {w:?} does not have depth {depth}")));
            }
            nodes.insert(c);
        }
        Ok(Self::from_nodes(nodes))
    }

    pub fn depth(&self) -> u32 {
        self.nodes.depth()
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    /// Node set of the same set at `depth >= self.depth()`.
    pub fn refined(&self, depth: u32) -> NodeSet {
        self.nodes.refine(depth.max(self.depth()))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.nodes.contains(p.node(self.depth()))
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.nodes.is_full()
    }

    fn binary(&self, other: &Clopen, f: impl Fn(&NodeSet, &NodeSet) -> NodeSet) -> Clopen {
        let d = self.depth().max(other.depth());
        Clopen::from_nodes(f(&self.refined(d), &other.refined(d)))
    }

    pub fn meet(&self, other: &Clopen) -> Clopen {
        self.binary(other, NodeSet::intersection)
    }

    pub fn join(&self, other: &Clopen) -> Clopen {
        self.binary(other, NodeSet::union)
    }

    pub fn difference(&self, other: &Clopen) -> Clopen {
        self.binary(other, NodeSet::difference)
    }

    pub fn complement(&self) -> Clopen {
        Clopen { nodes: self.nodes.complement() }
    }

    pub fn is_subset(&self, other: &Clopen) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &Clopen) -> bool {
        self.meet(other).is_empty()
    }

    /// Product (Lebesgue) measure `λ` of the set.
    pub fn lambda(&self) -> Rational {
        Rational::new(BigInt::from(self.nodes.len()), BigInt::from(1u8) << self.depth() as usize)
    }

    pub fn words(&self) -> Vec<String> {
        self.nodes.iter().map(|c| format_word(c, self.depth())).collect()
    }

    /// Compact one-line form such as `2:01+10`; `0:*` is the whole space and
    /// `0:` the empty set.
    pub fn to_compact(&self) -> String {
        if self.is_full() && self.depth() == 0 {
            return "0:*".into();
        }
        format!("{}:{}", self.depth(), self.words().join("+"))
    }

    pub fn from_compact(s: &str) -> Result<Self> {
        let (d, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad clopen {s:?}")))?;
        let depth: u32 = d.parse().map_err(|_| Error::Parse(format!("bad clopen depth in {s:?}")))?;
        match rest {
            "*" if depth == 0 => Ok(Clopen::full()),
            "" => Ok(Clopen::empty()),
            _ => Clopen::from_words(depth, rest.split('+')),
        }
    }
}

impl fmt::Debug for Clopen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Clopen({})", self.to_compact())
    }
}

#[derive(Serialize, Deserialize)]
struct ClopenRepr {
    depth: u32,
    nodes: Vec<String>,
}

impl Serialize for Clopen {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClopenRepr { depth: self.depth(), nodes: self.words() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Clopen {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ClopenRepr::deserialize(d)?;
        Clopen::from_words(r.depth, r.nodes.iter().map(String::as_str)).map_err(serde::de::Error::custom)
    }
}

/// Every clopen set of depth at most `depth` (as node subsets at that depth).
/// There are `2^(2^depth)` of them, so keep `depth <= 4` here.
pub fn all_clopens(depth: u32) -> impl Iterator<Item = Clopen> {
    assert!(depth <= 4, "exhaustive clopen enumeration capped at depth 4");
    let n = 1u64 << depth;
    (0..1u64 << n).map(move |mask| Clopen::from_nodes(NodeSet::from_codes(depth, (0..n).filter(|i| mask >> i & 1 == 1))))
}

/// All cylinders `[s]` with `|s| <= depth`, by depth then lexicographically.
pub fn all_cylinders(depth: u32) -> impl Iterator<Item = Clopen> {
    (0..=depth).flat_map(|d| (0..1u64 << d).map(move |c| Clopen::cylinder_code(c, d)))
}
