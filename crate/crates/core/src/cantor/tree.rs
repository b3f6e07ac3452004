use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

use super::{format_word, parse_word, Clopen, NodeSet, Point};

/// A closed subspace of `2^ω` presented by its levels up to a working depth.
///
/// Level `d` holds the depth-`d` nodes that meet the subspace. Levels are
/// downward closed and every node above the last level has a child.
#[derive(Clone, PartialEq, Eq)]
pub struct PrunedTree {
    levels: Vec<NodeSet>,
}

impl PrunedTree {
    pub fn full(depth: u32) -> Self {
        Self { levels: (0..=depth).map(NodeSet::full).collect() }
    }

    /// The tree generated by a set of leaves at the working depth.
    pub fn from_leaves(leaves: NodeSet) -> Result<Self> {
        if leaves.is_empty() {
            return Err(Error::InvalidTree("a pruned tree needs at least one leaf".into()));
        }
        let depth = leaves.depth();
        let mut levels = vec![leaves];
        for d in (0..depth).rev() {
            let up = levels.last().unwrap().project(d);
            levels.push(up);
        }
        levels.reverse();
        Ok(Self { levels })
    }

    /// Validates explicitly given levels.
    pub fn from_levels(levels: Vec<NodeSet>) -> Result<Self> {
        if levels.is_empty() || !levels[0].contains(0) {
            return Err(Error::InvalidTree("missing root".into()));
        }
        for (d, level) in levels.iter().enumerate() {
            if level.depth() != d as u32 {
                return Err(Error::InvalidTree(format!("level {d} has depth {}", level.depth())));
            }
            if d > 0 && !level.project(d as u32 - 1).is_subset(&levels[d - 1]) {
                return Err(Error::InvalidTree(format!("level {d} is not downward closed")));
            }
            if d + 1 < levels.len() && level != &levels[d + 1].project(d as u32) {
                return Err(Error::InvalidTree(format!("a node at depth {d} has no child")));
            }
        }
        Ok(Self { levels })
    }

    /// The subtree of nodes comparable with `prefix`, as a tree of the same
    /// working depth.
    pub fn restricted_to(&self, prefix_code: u64, prefix_len: u32) -> Result<Self> {
        let depth = self.depth();
        if prefix_len > depth {
            return Err(Error::DepthExceeded { requested: prefix_len, limit: depth });
        }
        let k = depth - prefix_len;
        let leaves = NodeSet::from_codes(depth, self.level(depth).iter().filter(|c| c >> k == prefix_code));
        Self::from_leaves(leaves)
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level(&self, d: u32) -> &NodeSet {
        &self.levels[d as usize]
    }

    pub fn leaves(&self) -> &NodeSet {
        self.levels.last().unwrap()
    }

    pub fn contains(&self, code: u64, depth: u32) -> bool {
        depth <= self.depth() && self.level(depth).contains(code)
    }

    /// Whether the first `D` bits of `p` form a node of the tree.
    pub fn contains_point(&self, p: &Point) -> bool {
        self.leaves().contains(p.node(self.depth()))
    }

    pub fn is_full(&self) -> bool {
        self.leaves().is_full()
    }

    /// The clopen set of `2^ω` spanned by the leaves.
    pub fn as_clopen(&self) -> Clopen {
        Clopen::from_nodes(self.leaves().clone())
    }

    pub fn check_depth(&self, d: u32) -> Result<()> {
        if d > self.depth() {
            return Err(Error::DepthExceeded { requested: d, limit: self.depth() });
        }
        Ok(())
    }
}

impl std::fmt::Debug for PrunedTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PrunedTree(D={}, {} leaves)", self.depth(), self.leaves().len())
    }
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    depth: u32,
    leaves: Vec<String>,
}

impl Serialize for PrunedTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.depth();
        TreeRepr { depth: d, leaves: self.leaves().iter().map(|c| format_word(c, d)).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrunedTree {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = TreeRepr::deserialize(de)?;
        let mut leaves = NodeSet::checked_empty(r.depth).map_err(D::Error::custom)?;
        for w in &r.leaves {
            let (d, c) = parse_word(w).map_err(D::Error::custom)?;
            if d != r.depth {
                return Err(D::Error::custom(format!("leaf {w:?} is not at depth {}", r.depth)));
            }
            leaves.insert(c);
        }
        PrunedTree::from_leaves(leaves).map_err(D::Error::custom)
    }
}
