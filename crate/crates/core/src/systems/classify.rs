use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::cantor::{parse_word, NodeSet, Point, PrunedTree};
use crate::error::{Error, Result};

use super::{word_string, SimpleSystem};

/// Least height of a full binary subtree accepted as evidence of a perfect
/// kernel.
pub const PERFECT_MIN_HEIGHT: u32 = 3;

/// Least number of one-sided splits in a row accepted as evidence of a
/// convergent sequence.
pub const SCATTERED_MIN_CHAIN: usize = 3;

/// A node of the split tree below which every node splits on both sides
/// for `height` levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerfectWitness {
    pub root: String,
    pub height: u32,
}

impl PerfectWitness {
    /// The full subtree below the root, as a pruned tree of depth
    /// `|root| + height`.
    pub fn tree(&self) -> Result<PrunedTree> {
        let (len, code) = parse_word(&self.root)?;
        let depth = len + self.height;
        let mut leaves = NodeSet::checked_empty(depth)?;
        leaves.insert_range(code << self.height, (code + 1) << self.height);
        PrunedTree::from_leaves(leaves)
    }
}

/// A run of one-sided splits: the side points `x_n` split off one after the
/// other and the thread `x` they accumulate at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScatteredWitness {
    pub root: String,
    pub points: Vec<Point>,
    pub limit: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Perfect(PerfectWitness),
    Scattered(ScatteredWitness),
}

fn child(v: &[bool], bit: bool) -> Vec<bool> {
    let mut c = v.to_vec();
    c.push(bit);
    c
}

fn word_order(a: &[bool], b: &[bool]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Looks for a perfect or a scattered witness in the split tree of
/// `K_budget`.
///
/// The perfect height of a node is 0 for a leaf and `1 + min` of its
/// children's heights otherwise. The chain length of a node that has a leaf
/// child is one more than that of its other child (the `0` child when both
/// are leaves); it is 0 for leaves and for nodes with two internal children.
/// A node of perfect height at least [`PERFECT_MIN_HEIGHT`] wins; otherwise a
/// chain of length at least [`SCATTERED_MIN_CHAIN`]. Ties go to the shortest,
/// then lexicographically least node.
pub fn classify(sys: &SimpleSystem, budget: usize) -> Result<Witness> {
    let stage = sys.stage(budget)?;
    let mut internal: HashSet<Vec<bool>> = HashSet::new();
    for w in &stage.words {
        for l in 0..w.len() {
            internal.insert(w[..l].to_vec());
        }
    }
    let mut nodes: Vec<&Vec<bool>> = internal.iter().collect();
    nodes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let mut height: HashMap<&[bool], u32> = HashMap::new();
    let mut chain: HashMap<&[bool], usize> = HashMap::new();
    let h_of = |m: &HashMap<&[bool], u32>, v: &[bool]| m.get(v).copied().unwrap_or(0);
    let c_of = |m: &HashMap<&[bool], usize>, v: &[bool]| m.get(v).copied().unwrap_or(0);
    for v in &nodes {
        let (c0, c1) = (child(v, false), child(v, true));
        height.insert(v.as_slice(), 1 + h_of(&height, &c0).min(h_of(&height, &c1)));
        let (i0, i1) = (internal.contains(&c0), internal.contains(&c1));
        let len = match (i0, i1) {
            (true, true) => 0,
            (true, false) => 1 + c_of(&chain, &c0),
            (false, true) => 1 + c_of(&chain, &c1),
            (false, false) => 1,
        };
        chain.insert(v.as_slice(), len);
    }

    let best_h = nodes
        .iter()
        .map(|v| (height[v.as_slice()], *v))
        .max_by(|(ha, a), (hb, b)| ha.cmp(hb).then_with(|| word_order(b, a)));
    if let Some((h, v)) = best_h {
        if h >= PERFECT_MIN_HEIGHT {
            return Ok(Witness::Perfect(PerfectWitness { root: word_string(v), height: h }));
        }
    }

    let best_c = nodes
        .iter()
        .map(|v| (chain[v.as_slice()], *v))
        .max_by(|(ca, a), (cb, b)| ca.cmp(cb).then_with(|| word_order(b, a)));
    if let Some((len, root)) = best_c {
        if len >= SCATTERED_MIN_CHAIN {
            let mut points = Vec::with_capacity(len);
            let mut v = root.clone();
            for _ in 0..len {
                let (c0, c1) = (child(&v, false), child(&v, true));
                let (side, next) = if internal.contains(&c1) && !internal.contains(&c0) { (c0, c1) } else { (c1, c0) };
                points.push(Point::new(side, false));
                v = next;
            }
            return Ok(Witness::Scattered(ScatteredWitness {
                root: word_string(root),
                points,
                limit: Point::new(v, false),
            }));
        }
    }
    Err(Error::Inconclusive { budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jn::comb_point;
    use crate::systems::{build_system, Policy};

    #[test]
    fn fixed_point_gives_a_convergent_sequence() {
        let sys = build_system(&Policy::FixedPoint, 12).unwrap();
        let Witness::Scattered(w) = classify(&sys, 12).unwrap() else { panic!("expected scattered") };
        assert_eq!(w.root, "");
        assert_eq!(w.points.len(), 12);
        for (n, p) in w.points.iter().enumerate() {
            assert_eq!(p, &Point::new((0..=n).map(|i| i == n), false));
            assert_eq!(p.node(n as u32 + 1), comb_point(n).node(n as u32 + 1));
        }
        assert_eq!(w.limit, Point::constant(false));
    }

    #[test]
    fn round_robin_gives_the_full_tree() {
        let sys = build_system(&Policy::RoundRobin, 32).unwrap();
        let Witness::Perfect(w) = classify(&sys, 32).unwrap() else { panic!("expected perfect") };
        assert_eq!(w, PerfectWitness { root: String::new(), height: 5 });
        assert!(w.tree().unwrap().is_full());
    }

    #[test]
    fn subtree_policy_finds_the_perfect_part() {
        let sys = build_system(&"subtree:0".parse().unwrap(), 40).unwrap();
        let Witness::Perfect(w) = classify(&sys, 40).unwrap() else { panic!("expected perfect") };
        assert_eq!(w.root, "0");
        assert_eq!(w.height, 5);
        let tree = w.tree().unwrap();
        assert_eq!(tree.level(1).iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(tree.leaves().len(), 32);
    }

    #[test]
    fn small_budgets_are_inconclusive() {
        let sys = build_system(&Policy::RoundRobin, 32).unwrap();
        assert!(matches!(classify(&sys, 2), Err(Error::Inconclusive { budget: 2 })));
        assert!(classify(&sys, 33).is_err());
    }
}
