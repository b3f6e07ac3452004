use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

use super::{format_word, parse_word, Clopen, NodeSet, Point, PrunedTree};

const ABSENT: u64 = u64::MAX;

/// Deepest working depth for which tree maps are tabulated.
pub const MAX_MAP_DEPTH: u32 = 20;

/// A continuous surjection `f: Y → Z` between closed subspaces of `2^ω`,
/// given node by node: every domain node of depth `d ≤ D` is sent to a
/// codomain node of the same depth, and the image of a child extends the
/// image of its parent.
///
/// Only level-preserving maps are represented. A level-preserving surjection
/// onto the whole of `2^ω` is necessarily a tree automorphism, so maps that
/// merge branches have a proper closed subspace as codomain.
#[derive(Clone, PartialEq, Eq)]
pub struct TreeMap {
    domain: PrunedTree,
    codomain: PrunedTree,
    images: Vec<Vec<u64>>,
}

/// Outcome of checking `f[U] ∩ f[Y∖U] = ∂f[U] ∪ ∂f[Y∖U]` on nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStatus {
    Holds,
    Fails,
    HypothesisNotSatisfied,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub depth: u32,
    pub map_depth: u32,
    pub status: BoundaryStatus,
    /// Nodes of `f[U] ∩ f[Y∖U]` at `depth`.
    pub overlap: Vec<String>,
    pub boundary_of_image: Vec<String>,
    pub boundary_of_complement_image: Vec<String>,
}

impl BoundaryReport {
    pub fn holds(&self) -> bool {
        self.status == BoundaryStatus::Holds
    }
}

impl TreeMap {
    /// Builds a map from a child rule: the image of `t⌢b` is the image of `t`
    /// followed by `rule(|t|, t, b)`. The codomain is the image tree.
    pub fn from_bit_rule(domain: PrunedTree, rule: impl Fn(u32, u64, bool) -> bool) -> Result<Self> {
        let depth = domain.depth();
        if depth > MAX_MAP_DEPTH {
            return Err(Error::DepthExceeded { requested: depth, limit: MAX_MAP_DEPTH });
        }
        let mut images = vec![vec![0u64]];
        for d in 1..=depth {
            let prev = &images[d as usize - 1];
            let mut level = vec![ABSENT; 1usize << d];
            for t in domain.level(d).iter() {
                let parent = t >> 1;
                let bit = rule(d - 1, parent, t & 1 == 1);
                level[t as usize] = (prev[parent as usize] << 1) | bit as u64;
            }
            images.push(level);
        }
        let leaves = NodeSet::from_codes(depth, domain.leaves().iter().map(|t| images[depth as usize][t as usize]));
        let codomain = PrunedTree::from_leaves(leaves)?;
        Ok(Self { domain, codomain, images })
    }

    /// Builds a map from explicit per-depth node pairs and validates it.
    pub fn from_pairs(domain: PrunedTree, codomain: PrunedTree, pairs: &[Vec<(u64, u64)>]) -> Result<Self> {
        let depth = domain.depth();
        if codomain.depth() != depth || pairs.len() != depth as usize + 1 {
            return Err(Error::InvalidMap("domain, codomain and pairs disagree on the working depth".into()));
        }
        if depth > MAX_MAP_DEPTH {
            return Err(Error::DepthExceeded { requested: depth, limit: MAX_MAP_DEPTH });
        }
        let mut images = Vec::with_capacity(pairs.len());
        for (d, level_pairs) in pairs.iter().enumerate() {
            let mut level = vec![ABSENT; 1usize << d];
            for &(t, v) in level_pairs {
                if t >> d != 0 || v >> d != 0 {
                    return Err(Error::InvalidMap(format!("node out of range at depth {d}")));
                }
                level[t as usize] = v;
            }
            images.push(level);
        }
        let map = Self { domain, codomain, images };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        for d in 0..=self.depth() {
            let mut covered = NodeSet::empty(d);
            for (t, &v) in self.images[d as usize].iter().enumerate() {
                let t = t as u64;
                let in_domain = self.domain.contains(t, d);
                if in_domain != (v != ABSENT) {
                    return Err(Error::InvalidMap(format!(
                        "node {} at depth {d} is {}",
                        format_word(t, d),
                        if in_domain { "unmapped" } else { "outside the domain" }
                    )));
                }
                if !in_domain {
                    continue;
                }
                if !self.codomain.contains(v, d) {
                    return Err(Error::InvalidMap(format!("image {} is outside the codomain", format_word(v, d))));
                }
                if d > 0 && v >> 1 != self.images[d as usize - 1][(t >> 1) as usize] {
                    return Err(Error::InvalidMap(format!("image of {} does not extend its parent's", format_word(t, d))));
                }
                covered.insert(v);
            }
            if &covered != self.codomain.level(d) {
                return Err(Error::InvalidMap(format!("not surjective at depth {d}")));
            }
        }
        Ok(())
    }

    pub fn identity(depth: u32) -> Result<Self> {
        Self::from_bit_rule(PrunedTree::full(depth), |_, _, b| b)
    }

    /// `image(t)` is the bitwise complement of `t`.
    pub fn bit_flip(depth: u32) -> Result<Self> {
        Self::from_bit_rule(PrunedTree::full(depth), |_, _, b| !b)
    }

    /// `f(b⌢y) = 0⌢y`: both halves land on `[0]`.
    pub fn merge_halves(depth: u32) -> Result<Self> {
        Self::from_bit_rule(PrunedTree::full(depth), |d, _, b| d > 0 && b)
    }

    /// `f(0⌢y) = 0⌢y` and `f(1⌢y) = 0^ω`: the right half collapses onto a
    /// single branch of the left half.
    pub fn collapse_right(depth: u32) -> Result<Self> {
        Self::from_bit_rule(PrunedTree::full(depth), |d, t, b| d > 0 && t >> (d - 1) == 0 && b)
    }

    /// `f(0b⌢y) = 00⌢y` and `f(1⌢y) = 1⌢y`: the cylinders `[00]` and `[01]`
    /// are merged onto `[00]`.
    pub fn merge_quarters(depth: u32) -> Result<Self> {
        Self::from_bit_rule(PrunedTree::full(depth), |d, t, b| !(d == 1 && t == 0) && b)
    }

    /// A random map on the full tree: at each node the two children are
    /// either kept apart (possibly swapped) or, with probability
    /// `merge_prob`, sent to the same child. Nodes above `min_merge_depth`
    /// never merge, so the codomain is full down to that depth.
    pub fn random<R: Rng>(depth: u32, min_merge_depth: u32, merge_prob: f64, rng: &mut R) -> Result<Self> {
        let mut table: Vec<Vec<[bool; 2]>> = Vec::with_capacity(depth as usize);
        for d in 0..depth {
            let level = (0..1u64 << d)
                .map(|_| {
                    if d >= min_merge_depth && rng.gen_bool(merge_prob) {
                        let b = rng.gen_bool(0.5);
                        [b, b]
                    } else if rng.gen_bool(0.5) {
                        [true, false]
                    } else {
                        [false, true]
                    }
                })
                .collect();
            table.push(level);
        }
        Self::from_bit_rule(PrunedTree::full(depth), |d, t, b| table[d as usize][t as usize][b as usize])
    }

    pub fn depth(&self) -> u32 {
        self.domain.depth()
    }

    pub fn domain(&self) -> &PrunedTree {
        &self.domain
    }

    pub fn codomain(&self) -> &PrunedTree {
        &self.codomain
    }

    pub fn image(&self, code: u64, depth: u32) -> Option<u64> {
        if depth > self.depth() {
            return None;
        }
        match self.images[depth as usize].get(code as usize) {
            Some(&v) if v != ABSENT => Some(v),
            _ => None,
        }
    }

    fn image_set(&self, domain_nodes: &NodeSet) -> NodeSet {
        let d = domain_nodes.depth();
        NodeSet::from_codes(d, domain_nodes.iter().map(|t| self.images[d as usize][t as usize]))
    }

    /// Domain nodes at depth `d` lying inside `u`.
    fn nodes_in(&self, u: &Clopen, d: u32) -> Result<NodeSet> {
        self.domain.check_depth(d)?;
        if u.depth() > d {
            return Err(Error::InvalidArgument(format!("clopen of depth {} evaluated at depth {d}", u.depth())));
        }
        Ok(u.refined(d).intersection(self.domain.level(d)))
    }

    fn complement_nodes_in(&self, u: &Clopen, d: u32) -> Result<NodeSet> {
        Ok(self.domain.level(d).difference(&self.nodes_in(u, d)?))
    }

    /// Nodes `{ image(t) : t ∈ Y_d, [t] ⊆ U }` as a clopen subset of `2^ω`.
    pub fn image_of_clopen(&self, u: &Clopen, d: u32) -> Result<Clopen> {
        Ok(Clopen::from_nodes(self.image_set(&self.nodes_in(u, d)?)))
    }

    /// Nodes at depth `d` in the image of both `U` and `Y ∖ U`.
    pub fn overlap_nodes(&self, u: &Clopen, d: u32) -> Result<NodeSet> {
        let a = self.image_set(&self.nodes_in(u, d)?);
        let b = self.image_set(&self.complement_nodes_in(u, d)?);
        Ok(a.intersection(&b))
    }

    /// `λ` of the depth-`d` node approximation of `f[U] ∩ f[Y∖U]`.
    pub fn overlap_measure(&self, u: &Clopen, d: u32) -> Result<Rational> {
        Ok(Clopen::from_nodes(self.overlap_nodes(u, d)?).lambda())
    }

    /// Lexicographically least point of `Y` whose depth-`depth` node maps to
    /// the depth-`depth` node of `target`. Below `depth` the descent keeps
    /// following `target` where the domain allows it; past the working depth
    /// the last bit is repeated.
    pub fn select_preimage(&self, target: &Point, depth: u32) -> Result<Point> {
        self.domain.check_depth(depth)?;
        let want = target.node(depth);
        let no_preimage = || Error::NoPreimage { target: format_word(want, depth), depth };
        let mut node = self
            .domain
            .level(depth)
            .iter()
            .find(|&t| self.images[depth as usize][t as usize] == want)
            .ok_or_else(no_preimage)?;
        for d in depth..self.depth() {
            let children = [node << 1, (node << 1) | 1];
            let present: Vec<u64> = children.into_iter().filter(|&c| self.domain.contains(c, d + 1)).collect();
            let next_target = target.node(d + 1);
            node = present
                .iter()
                .copied()
                .find(|&c| self.images[d as usize + 1][c as usize] == next_target)
                .unwrap_or(present[0]);
        }
        let top = self.depth();
        let tail = top > 0 && node & 1 == 1;
        let p = Point::from_node(node, top, tail);
        if self.image(p.node(depth), depth) != Some(want) {
            return Err(no_preimage());
        }
        Ok(p)
    }

    /// Checks `f[U] ∩ f[Y∖U] = ∂f[U] ∪ ∂f[Y∖U]` on depth-`d` nodes, with
    /// boundaries detected at the working depth `D`: a node of an image lies
    /// on its boundary when one of its depth-`D` descendants in the codomain
    /// is missed by that image. The identity is only asserted when the
    /// overlap has empty interior, i.e. every depth-`d` codomain node has a
    /// depth-`D` descendant outside the overlap.
    pub fn image_boundary_check(&self, u: &Clopen, d: u32) -> Result<BoundaryReport> {
        let top = self.depth();
        if d > top {
            return Err(Error::DepthExceeded { requested: d, limit: top });
        }
        self.nodes_in(u, d)?;
        let img_u = self.image_set(&self.nodes_in(u, top)?);
        let img_c = self.image_set(&self.complement_nodes_in(u, top)?);
        let cod = self.codomain.leaves();
        let overlap_top = img_u.intersection(&img_c);
        let overlap = img_u.project(d).intersection(&img_c.project(d));

        let hypothesis = cod.difference(&overlap_top).project(d) == *self.codomain.level(d);
        let bd_u = cod.difference(&img_u).project(d).intersection(&img_u.project(d));
        let bd_c = cod.difference(&img_c).project(d).intersection(&img_c.project(d));

        let status = if !hypothesis {
            BoundaryStatus::HypothesisNotSatisfied
        } else if bd_u.union(&bd_c) == overlap {
            BoundaryStatus::Holds
        } else {
            BoundaryStatus::Fails
        };
        let words = |s: &NodeSet| s.iter().map(|c| format_word(c, d)).collect();
        Ok(BoundaryReport {
            depth: d,
            map_depth: top,
            status,
            overlap: words(&overlap),
            boundary_of_image: words(&bd_u),
            boundary_of_complement_image: words(&bd_c),
        })
    }

    /// Finite irreducibility: every domain node of depth at most `d` contains
    /// the whole preimage of some depth-`D` codomain node, so no proper
    /// closed subset visible at depth `d` maps onto the codomain.
    pub fn is_irreducible_to(&self, d: u32) -> bool {
        let top = self.depth();
        let d = d.min(top);
        let mut lo = vec![u64::MAX; 1usize << top];
        let mut hi = vec![0u64; 1usize << top];
        for t in self.domain.leaves().iter() {
            let v = self.images[top as usize][t as usize] as usize;
            lo[v] = lo[v].min(t);
            hi[v] = hi[v].max(t);
        }
        let mut marked: Vec<NodeSet> = (0..=top).map(NodeSet::empty).collect();
        for v in self.codomain.leaves().iter() {
            let (a, b) = (lo[v as usize], hi[v as usize]);
            let common = if top == 0 { 0 } else { (a ^ b).leading_zeros().saturating_sub(64 - top) };
            marked[common as usize].insert(a >> (top - common));
        }
        for k in (0..top).rev() {
            let up = marked[k as usize + 1].project(k);
            marked[k as usize] = marked[k as usize].union(&up);
        }
        (0..=d).all(|k| self.domain.level(k).is_subset(&marked[k as usize]))
    }

    fn pairs(&self) -> Vec<Vec<(u64, u64)>> {
        (0..=self.depth())
            .map(|d| self.domain.level(d).iter().map(|t| (t, self.images[d as usize][t as usize])).collect())
            .collect()
    }
}

impl std::fmt::Debug for TreeMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TreeMap(D={}, domain={:?}, codomain={:?})", self.depth(), self.domain, self.codomain)
    }
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    domain: PrunedTree,
    codomain: PrunedTree,
    levels: Vec<Vec<(String, String)>>,
}

impl Serialize for TreeMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let levels = self
            .pairs()
            .into_iter()
            .enumerate()
            .map(|(d, ps)| ps.into_iter().map(|(t, v)| (format_word(t, d as u32), format_word(v, d as u32))).collect())
            .collect();
        MapRepr { domain: self.domain.clone(), codomain: self.codomain.clone(), levels }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TreeMap {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MapRepr::deserialize(de)?;
        let mut pairs = Vec::with_capacity(r.levels.len());
        for (d, level) in r.levels.iter().enumerate() {
            let mut ps = Vec::with_capacity(level.len());
            for (a, b) in level {
                let (da, ta) = parse_word(a).map_err(D::Error::custom)?;
                let (db, tb) = parse_word(b).map_err(D::Error::custom)?;
                if da as usize != d || db as usize != d {
                    return Err(D::Error::custom(format!("pair ({a:?}, {b:?}) is not at depth {d}")));
                }
                ps.push((ta, tb));
            }
            pairs.push(ps);
        }
        TreeMap::from_pairs(r.domain, r.codomain, &pairs).map_err(D::Error::custom)
    }
}
