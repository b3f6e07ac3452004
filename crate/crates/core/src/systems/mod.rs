//! Inverse systems of simple extensions over ω steps: finite stages, the
//! coded limit tree, node measures, and the pipeline producing a
//! finitely supported JN-sequence on the limit.

mod classify;
mod measure;
mod pipeline;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cantor::{NodeSet, Point, PrunedTree, MAX_NODE_DEPTH};
use crate::error::{Error, Result};

pub use classify::{classify, PerfectWitness, ScatteredWitness, Witness, PERFECT_MIN_HEIGHT, SCATTERED_MIN_CHAIN};
pub use measure::{ud_points, ud_sequence, uniformly_regular_measure, MassRule, NodeMeasure, UdGenerator};
pub use pipeline::{fsjnp_pipeline, PipelineConfig, PipelineOutput};

/// Continuation rule choosing the point split at each step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    /// Split the point with the shortest code, lowest index first.
    RoundRobin,
    /// Always split point 0.
    FixedPoint,
    /// Round-robin among the points whose code is comparable with `prefix`.
    Subtree { prefix: String },
    /// An explicit list of split indices.
    Custom { splits: Vec<usize> },
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("round-robin", None) => Ok(Policy::RoundRobin),
            ("fixed-point", None) => Ok(Policy::FixedPoint),
            ("subtree", Some(prefix)) => {
                crate::cantor::parse_word(prefix)?;
                Ok(Policy::Subtree { prefix: prefix.to_string() })
            }
            ("custom", Some(list)) => {
                let splits = list
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad split index {t:?}"))))
                    .collect::<Result<_>>()?;
                Ok(Policy::Custom { splits })
            }
            _ => Err(Error::Parse(format!(
                "unknown policy {s:?} (expected round-robin, fixed-point, subtree:WORD or custom:I,J,...)"
            ))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::RoundRobin => write!(f, "round-robin"),
            Policy::FixedPoint => write!(f, "fixed-point"),
            Policy::Subtree { prefix } => write!(f, "subtree:{prefix}"),
            Policy::Custom { splits } => {
                let list: Vec<String> = splits.iter().map(|s| s.to_string()).collect();
                write!(f, "custom:{}", list.join(","))
            }
        }
    }
}

pub(crate) fn word_string(w: &[bool]) -> String {
    w.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub(crate) fn word_code(w: &[bool], depth: usize) -> u64 {
    (0..depth).fold(0u64, |acc, i| (acc << 1) | w.get(i).copied().unwrap_or(false) as u64)
}

fn is_comparable(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y)
}

/// The stage `K_t`: point `i` carries the code word of its node in the split
/// tree. Splitting point `c` appends `0` to its word and creates point `t+1`
/// with the same word followed by `1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub t: usize,
    pub words: Vec<Vec<bool>>,
}

impl Stage {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The thread through point `i` that is never split again: its word
    /// followed by `0^ω`.
    pub fn point(&self, i: usize) -> Point {
        Point::new(self.words[i].iter().copied(), false)
    }

    pub fn max_word_len(&self) -> usize {
        self.words.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn split(&mut self, c: usize) {
        let mut child = self.words[c].clone();
        self.words[c].push(false);
        child.push(true);
        self.words.push(child);
        self.t += 1;
    }
}

/// A system of simple extensions `K_0 ← K_1 ← … ← K_T` with `|K_t| = t+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimpleSystem {
    policy: Policy,
    splits: Vec<usize>,
}

#[derive(Deserialize)]
struct RawSystem {
    policy: Policy,
    splits: Vec<usize>,
}

impl<'de> Deserialize<'de> for SimpleSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSystem::deserialize(d)?;
        SimpleSystem::from_splits(raw.policy, raw.splits).map_err(serde::de::Error::custom)
    }
}

/// Runs `policy` for `steps` splits.
pub fn build_system(policy: &Policy, steps: usize) -> Result<SimpleSystem> {
    if steps == 0 {
        return Err(Error::InvalidArgument("a system needs at least one step".into()));
    }
    let mut stage = Stage { t: 0, words: vec![Vec::new()] };
    let mut splits = Vec::with_capacity(steps);
    let prefix: Option<Vec<bool>> = match policy {
        Policy::Subtree { prefix } => Some(prefix.chars().map(|c| c == '1').collect()),
        _ => None,
    };
    let eligible = |w: &[bool]| prefix.as_ref().map_or(true, |p| is_comparable(w, p));
    // candidates for the shortest-word rule, keyed by (word length, index)
    let mut queue: BTreeSet<(usize, usize)> = BTreeSet::from([(0, 0)]);
    for t in 0..steps {
        let c = match policy {
            Policy::RoundRobin | Policy::Subtree { .. } => queue.pop_first().map(|(_, i)| i).unwrap_or(0),
            Policy::FixedPoint => 0,
            Policy::Custom { splits } => *splits.get(t).ok_or_else(|| {
                Error::InvalidArgument(format!("custom policy lists {} splits, {steps} requested", splits.len()))
            })?,
        };
        if c > t {
            return Err(Error::InvalidSplit { step: t, index: c, size: t + 1 });
        }
        stage.split(c);
        for i in [c, t + 1] {
            if eligible(&stage.words[i]) {
                queue.insert((stage.words[i].len(), i));
            }
        }
        splits.push(c);
    }
    Ok(SimpleSystem { policy: policy.clone(), splits })
}

impl SimpleSystem {
    /// Validates an explicit split list.
    pub fn from_splits(policy: Policy, splits: Vec<usize>) -> Result<Self> {
        for (t, &c) in splits.iter().enumerate() {
            if c > t {
                return Err(Error::InvalidSplit { step: t, index: c, size: t + 1 });
            }
        }
        Ok(Self { policy, splits })
    }

    /// The one-point system `K_0`.
    pub fn singleton() -> Self {
        Self { policy: Policy::Custom { splits: Vec::new() }, splits: Vec::new() }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn splits(&self) -> &[usize] {
        &self.splits
    }

    pub fn steps(&self) -> usize {
        self.splits.len()
    }

    /// The first `t` steps.
    pub fn truncated(&self, t: usize) -> Result<Self> {
        self.check_stage(t)?;
        Ok(Self { policy: self.policy.clone(), splits: self.splits[..t].to_vec() })
    }

    fn check_stage(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            return Err(Error::InvalidArgument(format!("stage {t} beyond the {} built steps", self.steps())));
        }
        Ok(())
    }

    pub fn stage(&self, t: usize) -> Result<Stage> {
        self.check_stage(t)?;
        let mut stage = Stage { t: 0, words: vec![Vec::new()] };
        for &c in &self.splits[..t] {
            stage.split(c);
        }
        Ok(stage)
    }

    pub fn last_stage(&self) -> Stage {
        self.stage(self.steps()).expect("the last stage exists")
    }

    /// `π_t^{t+1}`: identity on `K_t`, the new point goes to the split point.
    pub fn bond_step(&self, t: usize, i: usize) -> usize {
        if i == t + 1 {
            self.splits[t]
        } else {
            i
        }
    }

    /// `π_t^u = π_t^{t+1} ∘ … ∘ π_{u−1}^u`.
    pub fn bond(&self, t: usize, u: usize, i: usize) -> Result<usize> {
        if t > u {
            return Err(Error::InvalidArgument(format!("bonding map needs t ≤ u, got {t} > {u}")));
        }
        self.check_stage(u)?;
        if i > u {
            return Err(Error::InvalidArgument(format!("stage {u} has no point {i}")));
        }
        Ok((t..u).rev().fold(i, |j, s| self.bond_step(s, j)))
    }

    /// Checks `π_t^u` against the split-tree coding for all `t < u ≤ upto`:
    /// the image of a point is the point of `K_t` whose word is a prefix of
    /// its own. Returns the violations as `(t, u, i)`.
    pub fn check_bonding_law(&self, upto: usize) -> Result<Vec<(usize, usize, usize)>> {
        self.check_stage(upto)?;
        let mut stages = Vec::with_capacity(upto + 1);
        let mut stage = Stage { t: 0, words: vec![Vec::new()] };
        stages.push(stage.clone());
        for &c in &self.splits[..upto] {
            stage.split(c);
            stages.push(stage.clone());
        }
        let mut bad = Vec::new();
        for t in 0..upto {
            let index: HashMap<&[bool], usize> =
                stages[t].words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
            for u in t + 1..=upto {
                for (i, w) in stages[u].words.iter().enumerate() {
                    let by_word = (0..=w.len()).find_map(|l| index.get(&w[..l]).copied());
                    if by_word != Some(self.bond(t, u, i)?) {
                        bad.push((t, u, i));
                    }
                }
            }
        }
        Ok(bad)
    }

    /// The coded limit tree at `depth`, read off the last stage: every point
    /// contributes the branch of its word followed by zeros.
    pub fn limit_tree(&self, depth: u32) -> Result<PrunedTree> {
        let stage = self.last_stage();
        let limit = (stage.max_word_len() as u32).min(MAX_NODE_DEPTH);
        if depth > limit {
            return Err(Error::DepthExceeded { requested: depth, limit });
        }
        let leaves = NodeSet::from_codes(depth, stage.words.iter().map(|w| word_code(w, depth as usize)));
        PrunedTree::from_leaves(leaves)
    }

    /// Nodes of the coded limit tree at `depth` met by the threads through
    /// the points of `set` in `K_t`.
    fn coded_nodes(&self, stage: &Stage, tree: &PrunedTree, set: impl Iterator<Item = usize>) -> NodeSet {
        let depth = tree.depth();
        let mut out = NodeSet::empty(depth);
        for i in set {
            let w = &stage.words[i];
            if w.len() >= depth as usize {
                out.insert(word_code(w, depth as usize));
            } else {
                let k = depth - w.len() as u32;
                let base = word_code(w, w.len()) << k;
                for c in tree.leaves().iter().filter(|c| c >> k == base >> k) {
                    out.insert(c);
                }
            }
        }
        out
    }

    /// For a set `X ⊆ K_{t+1}`, the points of `K_t` whose threads in the
    /// coded limit tree at `depth` meet both the threads through `X` and
    /// those through its complement. This is `π[X] ∩ π[K_{t+1} ∖ X]`, the
    /// finite form of `∂π[X] ∖ π[∂X]`, and lies inside `{x_t}`.
    pub fn boundary_defect(&self, t: usize, set: &BTreeSet<usize>, depth: u32) -> Result<BTreeSet<usize>> {
        self.check_stage(t + 1)?;
        if let Some(&i) = set.iter().find(|&&i| i > t + 1) {
            return Err(Error::InvalidArgument(format!("stage {} has no point {i}", t + 1)));
        }
        let tree = self.limit_tree(depth)?;
        let upper = self.stage(t + 1)?;
        let lower = self.stage(t)?;
        let inside = self.coded_nodes(&upper, &tree, set.iter().copied());
        let outside = self.coded_nodes(&upper, &tree, (0..=t + 1).filter(|i| !set.contains(i)));
        let mut defect = BTreeSet::new();
        for y in 0..=t {
            let cell = self.coded_nodes(&lower, &tree, std::iter::once(y));
            if !cell.intersection(&inside).is_empty() && !cell.intersection(&outside).is_empty() {
                defect.insert(y);
            }
        }
        Ok(defect)
    }

    /// Irreducibility witness for a node set `U` of the coded limit tree at
    /// `depth`: the earliest stage `t` and a point of `K_t` all of whose
    /// threads lie in `U`. `None` when `U` misses the limit or no stage up
    /// to the last has such a point.
    pub fn irreducibility_witness(&self, u: &NodeSet, depth: u32) -> Result<Option<(usize, usize)>> {
        let tree = self.limit_tree(depth)?;
        if u.depth() != depth {
            return Err(Error::InvalidArgument(format!("node set of depth {} at tree depth {depth}", u.depth())));
        }
        if u.intersection(tree.leaves()).is_empty() {
            return Ok(None);
        }
        let mut stage = Stage { t: 0, words: vec![Vec::new()] };
        for t in 0..=self.steps() {
            for i in 0..stage.len() {
                if self.coded_nodes(&stage, &tree, std::iter::once(i)).is_subset(u) {
                    return Ok(Some((t, i)));
                }
            }
            if t < self.steps() {
                stage.split(self.splits[t]);
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::all_clopens;

    #[test]
    fn round_robin_three_steps() {
        let sys = build_system(&Policy::RoundRobin, 3).unwrap();
        assert_eq!(sys.splits(), &[0, 0, 1]);
        let k3 = sys.last_stage();
        assert_eq!(k3.len(), 4);
        let words: BTreeSet<String> = k3.words.iter().map(|w| word_string(w)).collect();
        assert_eq!(words, BTreeSet::from(["00", "01", "10", "11"].map(String::from)));
        assert!(sys.limit_tree(2).unwrap().is_full());
        assert!(sys.limit_tree(3).is_err());
    }

    #[test]
    fn round_robin_is_breadth_first() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        for (t, &c) in sys.splits().iter().enumerate() {
            let level = (t + 1).ilog2();
            assert_eq!(c, t + 1 - (1 << level));
        }
        for d in 0..=6 {
            assert!(sys.limit_tree(d).unwrap().is_full());
        }
    }

    #[test]
    fn fixed_point_is_a_comb() {
        let sys = build_system(&Policy::FixedPoint, 10).unwrap();
        let k = sys.last_stage();
        assert_eq!(k.len(), 11);
        assert_eq!(k.words[0], vec![false; 10]);
        for n in 1..=10 {
            let mut w = vec![false; n - 1];
            w.push(true);
            assert_eq!(k.words[n], w);
        }
        let tree = sys.limit_tree(6).unwrap();
        for d in 0..=6u32 {
            let expected: Vec<u64> = if d == 0 { vec![0] } else { (0..d).map(|j| 1u64 << j).chain([0]).collect() };
            let mut got: Vec<u64> = tree.level(d).iter().collect();
            let mut want = expected;
            got.sort();
            want.sort();
            want.dedup();
            assert_eq!(got, want, "level {d}");
        }
    }

    #[test]
    fn zero_steps_and_bad_splits_are_rejected() {
        assert!(build_system(&Policy::RoundRobin, 0).is_err());
        let err = build_system(&Policy::Custom { splits: vec![0, 2] }, 2).unwrap_err();
        assert!(matches!(err, Error::InvalidSplit { step: 1, index: 2, size: 2 }));
        assert!(SimpleSystem::from_splits(Policy::FixedPoint, vec![1]).is_err());
        let root = SimpleSystem::singleton().limit_tree(0).unwrap();
        assert_eq!(root.depth(), 0);
        assert_eq!(root.leaves().len(), 1);
    }

    #[test]
    fn policies_parse_and_print() {
        for s in ["round-robin", "fixed-point", "subtree:01", "custom:0,1,1"] {
            assert_eq!(s.parse::<Policy>().unwrap().to_string(), s);
        }
        assert!("spiral".parse::<Policy>().is_err());
        assert!("subtree:0a".parse::<Policy>().is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let sys = build_system(&"subtree:0".parse().unwrap(), 9).unwrap();
        let json = serde_json::to_string(&sys).unwrap();
        let back: SimpleSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);
        let bad = r#"{"policy":{"kind":"fixed-point"},"splits":[0,5]}"#;
        assert!(serde_json::from_str::<SimpleSystem>(bad).is_err());
    }

    #[test]
    fn bonding_law_holds() {
        for policy in [Policy::RoundRobin, Policy::FixedPoint, "subtree:10".parse().unwrap()] {
            let sys = build_system(&policy, 24).unwrap();
            assert!(sys.check_bonding_law(24).unwrap().is_empty());
        }
    }

    #[test]
    fn boundary_defect_is_at_most_the_split_point() {
        let sys = build_system(&Policy::RoundRobin, 15).unwrap();
        for t in 0..15 {
            let split = sys.splits()[t];
            for mask in 0u32..1 << (t + 2).min(10) {
                let set: BTreeSet<usize> = (0..t + 2).filter(|&i| i < 32 && mask >> i & 1 == 1).collect();
                let defect = sys.boundary_defect(t, &set, 4).unwrap();
                let separates = set.contains(&split) != set.contains(&(t + 1));
                let expected = if separates { BTreeSet::from([split]) } else { BTreeSet::new() };
                assert_eq!(defect, expected, "t={t} set={set:?}");
            }
        }
    }

    #[test]
    fn round_robin_limit_maps_are_irreducible() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        for u in all_clopens(4) {
            if u.is_empty() {
                continue;
            }
            let nodes = u.refined(6);
            let (t, i) = sys.irreducibility_witness(&nodes, 6).unwrap().expect("witness");
            let stage = sys.stage(t).unwrap();
            assert!(nodes.contains(word_code(&stage.words[i], 6)) || stage.words[i].len() < 6);
        }
        for d in 0..=6 {
            for c in 0..1u64 << d {
                let nodes = NodeSet::from_codes(d, [c]).refine(6);
                assert!(sys.irreducibility_witness(&nodes, 6).unwrap().is_some());
            }
        }
    }
}
