use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cantor::{parse_word, Point, MAX_NODE_DEPTH};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

use super::{word_code, SimpleSystem};

/// How a split point's mass is shared between its two successors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MassRule {
    HalfHalf,
    /// The new point receives `share` of the mass, the survivor the rest.
    Proportional {
        #[serde(with = "rational::serde_str")]
        share: Rational,
    },
}

impl MassRule {
    pub fn share(&self) -> Rational {
        match self {
            MassRule::HalfHalf => rational::frac(1, 2),
            MassRule::Proportional { share } => share.clone(),
        }
    }
}

impl FromStr for MassRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "half-half" => Ok(MassRule::HalfHalf),
            Some(("proportional", r)) => Ok(MassRule::Proportional { share: rational::parse(r)? }),
            _ => Err(Error::Parse(format!("unknown mass rule {s:?} (expected half-half or proportional:P/Q)"))),
        }
    }
}

impl fmt::Display for MassRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassRule::HalfHalf => write!(f, "half-half"),
            MassRule::Proportional { share } => write!(f, "proportional:{}", rational::format(share)),
        }
    }
}

/// A probability measure on the limit given by compatible point masses
/// `m_t: K_t → [0, 1]`.
#[derive(Clone, Debug, Serialize)]
pub struct NodeMeasure {
    rule: MassRule,
    #[serde(skip)]
    splits: Vec<usize>,
    #[serde(skip)]
    words: Vec<Vec<bool>>,
    #[serde(with = "masses_str")]
    masses: Vec<Rational>,
}

mod masses_str {
    use super::Rational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(m: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(crate::rational::format))
    }
}

/// Splits mass along the system with a stage-local rule, so compatibility
/// holds exactly at every stage.
pub fn uniformly_regular_measure(sys: &SimpleSystem, rule: &MassRule) -> Result<NodeMeasure> {
    let share = rule.share();
    if share.is_negative() || share > Rational::one() {
        return Err(Error::InvalidArgument(format!("mass share {} outside [0, 1]", rational::format(&share))));
    }
    let stage = sys.last_stage();
    let masses = stage_masses(sys.splits(), &share, sys.steps());
    Ok(NodeMeasure { rule: rule.clone(), splits: sys.splits().to_vec(), words: stage.words, masses })
}

fn stage_masses(splits: &[usize], share: &Rational, t: usize) -> Vec<Rational> {
    let keep = Rational::one() - share;
    let mut m = vec![Rational::one()];
    for &c in &splits[..t] {
        let total = m[c].clone();
        m[c] = &total * &keep;
        m.push(&total * share);
    }
    m
}

impl NodeMeasure {
    pub fn rule(&self) -> &MassRule {
        &self.rule
    }

    /// `m_t` on `K_t`.
    pub fn stage(&self, t: usize) -> Result<Vec<Rational>> {
        if t > self.splits.len() {
            return Err(Error::InvalidArgument(format!("stage {t} beyond the {} built steps", self.splits.len())));
        }
        Ok(stage_masses(&self.splits, &self.rule.share(), t))
    }

    /// Masses on the last stage.
    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    /// Checks `m_t(x) = Σ m_{t+1}(π^{-1}(x))` and `Σ m_t = 1` for all
    /// `t ≤ upto`. Returns the first failing stage.
    pub fn check_compatibility(&self, upto: usize) -> Result<Option<usize>> {
        let upto = upto.min(self.splits.len());
        let mut prev = self.stage(0)?;
        for t in 0..=upto {
            let cur = self.stage(t)?;
            if rational::sum(&cur) != Rational::one() {
                return Ok(Some(t));
            }
            if t > 0 {
                let c = self.splits[t - 1];
                let ok = (0..t).all(|x| {
                    let pulled = if x == c { &cur[x] + &cur[t] } else { cur[x].clone() };
                    pulled == prev[x]
                });
                if !ok {
                    return Ok(Some(t));
                }
            }
            prev = cur;
        }
        Ok(None)
    }

    /// `max_x m_t(x)` for `t = 0, …, upto`.
    pub fn max_mass_profile(&self, upto: usize) -> Result<Vec<Rational>> {
        (0..=upto.min(self.splits.len()))
            .map(|t| Ok(self.stage(t)?.into_iter().max().unwrap_or_else(Rational::zero)))
            .collect()
    }

    /// Masses of the depth-`d` nodes of the coded limit tree, each point of
    /// the last stage charging the node its word (followed by zeros) passes
    /// through.
    pub fn node_masses(&self, d: u32) -> Result<BTreeMap<u64, Rational>> {
        if d > MAX_NODE_DEPTH {
            return Err(Error::DepthExceeded { requested: d, limit: MAX_NODE_DEPTH });
        }
        let mut out: BTreeMap<u64, Rational> = BTreeMap::new();
        for (w, m) in self.words.iter().zip(&self.masses) {
            *out.entry(word_code(w, d as usize)).or_insert_with(Rational::zero) += m;
        }
        Ok(out)
    }
}

/// Greedy low-discrepancy enumeration of the coded limit tree below a root,
/// at a working depth.
///
/// Each point descends from the root choosing the child `c` of the current
/// node `v` that maximizes `(n_v + 1)·m(c)/m(v) − n_c`, where `n` counts the
/// points emitted so far through a node; ties go to bit 0. Children whose
/// leaves are all used are skipped, which keeps the sequence injective. The
/// point emitted is the leaf reached followed by `0^ω`.
#[derive(Clone, Debug)]
pub struct UdGenerator {
    root_len: u32,
    root_code: u64,
    depth: u32,
    /// Node masses per level, indexed by level below the root.
    mass: Vec<HashMap<u64, Rational>>,
    count: Vec<HashMap<u64, u64>>,
    free: Vec<HashMap<u64, u64>>,
    emitted: usize,
}

impl UdGenerator {
    pub fn new(m: &NodeMeasure, root: &str, depth: u32) -> Result<Self> {
        let (root_len, root_code) = parse_word(root)?;
        if depth < root_len {
            return Err(Error::InvalidArgument(format!("working depth {depth} above the root {root:?}")));
        }
        let leaves = m.node_masses(depth)?;
        let k = depth - root_len;
        let mut mass: Vec<HashMap<u64, Rational>> = vec![HashMap::new(); k as usize + 1];
        let mut free: Vec<HashMap<u64, u64>> = vec![HashMap::new(); k as usize + 1];
        for (&c, w) in leaves.iter().filter(|(c, _)| *c >> k == root_code) {
            for up in 0..=k {
                let level = (k - up) as usize;
                *mass[level].entry(c >> up).or_insert_with(Rational::zero) += w;
                *free[level].entry(c >> up).or_default() += 1;
            }
        }
        let total = mass[0].get(&root_code).cloned().unwrap_or_else(Rational::zero);
        if total.is_zero() {
            return Err(Error::AtomicMeasure(format!("the subtree below {root:?} carries no mass")));
        }
        // the largest leaf must be lighter than 1/(k+1) of the subtree
        let threshold = &total / Rational::from_integer(BigInt::from(k + 1));
        if let Some((c, w)) = mass[k as usize].iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
            if *w >= threshold {
                return Err(Error::AtomicMeasure(format!(
                    "node {} holds {} of the subtree mass {} at depth {depth}",
                    crate::cantor::format_word(*c, depth),
                    rational::format(w),
                    rational::format(&total)
                )));
            }
        }
        let count = vec![HashMap::new(); k as usize + 1];
        Ok(Self { root_len, root_code, depth, mass, count, free, emitted: 0 })
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Number of points the generator can emit in total.
    pub fn capacity(&self) -> u64 {
        self.free[0].get(&self.root_code).copied().unwrap_or(0) + self.emitted as u64
    }

    pub fn next_point(&mut self) -> Result<Point> {
        let k = (self.depth - self.root_len) as usize;
        if self.free[0].get(&self.root_code).copied().unwrap_or(0) == 0 {
            return Err(Error::Exhausted { emitted: self.emitted, depth: self.depth });
        }
        let zero = Rational::zero();
        let mut v = self.root_code;
        let mut path = vec![v];
        for level in 0..k {
            let n_v = self.count[level].get(&v).copied().unwrap_or(0);
            let m_v = self.mass[level].get(&v).unwrap_or(&zero);
            let mut best: Option<(Rational, u64)> = None;
            for c in [v << 1, v << 1 | 1] {
                if self.free[level + 1].get(&c).copied().unwrap_or(0) == 0 {
                    continue;
                }
                let n_c = Rational::from_integer(BigInt::from(self.count[level + 1].get(&c).copied().unwrap_or(0)));
                let m_c = self.mass[level + 1].get(&c).unwrap_or(&zero);
                let score = if m_v.is_zero() {
                    -n_c
                } else {
                    Rational::from_integer(BigInt::from(n_v + 1)) * m_c / m_v - n_c
                };
                if best.as_ref().map_or(true, |(s, _)| score > *s) {
                    best = Some((score, c));
                }
            }
            v = best.expect("a node with free leaves has a child with free leaves").1;
            path.push(v);
        }
        for (level, c) in path.iter().enumerate() {
            *self.count[level].entry(*c).or_default() += 1;
            *self.free[level].get_mut(c).expect("node on the path") -= 1;
        }
        self.emitted += 1;
        Ok(Point::from_node(v, self.depth, false))
    }
}

/// The first `count` points of the greedy sequence.
pub fn ud_points(m: &NodeMeasure, root: &str, depth: u32, count: usize) -> Result<Vec<Point>> {
    let mut g = UdGenerator::new(m, root, depth)?;
    (0..count).map(|_| g.next_point()).collect()
}

/// The `n`-th point of the greedy sequence.
pub fn ud_sequence(m: &NodeMeasure, root: &str, depth: u32, n: usize) -> Result<Point> {
    Ok(ud_points(m, root, depth, n + 1)?.pop().expect("n + 1 points"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jn::van_der_corput;
    use crate::rational::{frac, pow2_inv};
    use crate::systems::{build_system, Policy};

    #[test]
    fn round_robin_half_half_is_lambda() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        let m = uniformly_regular_measure(&sys, &MassRule::HalfHalf).unwrap();
        for d in 0..=6 {
            let masses = m.node_masses(d).unwrap();
            assert_eq!(masses.len(), 1 << d);
            assert!(masses.values().all(|w| *w == pow2_inv(d)));
        }
        assert_eq!(m.check_compatibility(63).unwrap(), None);
    }

    #[test]
    fn fixed_point_half_half_masses() {
        let sys = build_system(&Policy::FixedPoint, 10).unwrap();
        let m = uniformly_regular_measure(&sys, &MassRule::HalfHalf).unwrap();
        let last = m.masses();
        for n in 1..=10 {
            assert_eq!(last[n], pow2_inv(n as u32));
        }
        assert_eq!(last[0], pow2_inv(10));
        let profile = m.max_mass_profile(10).unwrap();
        for (t, w) in profile.iter().enumerate() {
            assert_eq!(*w, pow2_inv(t.min(1) as u32));
        }
        assert_eq!(m.check_compatibility(10).unwrap(), None);
    }

    #[test]
    fn perfect_core_loses_its_atoms() {
        let sys = build_system(&"subtree:1".parse().unwrap(), 40).unwrap();
        let m = uniformly_regular_measure(&sys, &MassRule::HalfHalf).unwrap();
        let profile = m.max_mass_profile(40).unwrap();
        assert!(profile.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(profile[40], frac(1, 2));
        // the part below 1 alone is what has to become non-atomic
        let below: Rational = m.node_masses(6).unwrap().iter().filter(|(c, _)| *c >> 5 == 1).map(|(_, w)| w.clone()).max().unwrap();
        assert_eq!(below, pow2_inv(6));
    }

    #[test]
    fn greedy_points_on_lambda_are_van_der_corput() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        let m = uniformly_regular_measure(&sys, &MassRule::HalfHalf).unwrap();
        let pts = ud_points(&m, "", 6, 64).unwrap();
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(p, &van_der_corput(k as u64));
        }
        let cells: Vec<u64> = pts[..4].iter().map(|p| p.node(2)).collect();
        assert_eq!(cells, vec![0b00, 0b10, 0b01, 0b11]);
        assert_eq!(ud_sequence(&m, "", 6, 0).unwrap(), Point::constant(false));
        assert!(matches!(ud_points(&m, "", 6, 65), Err(Error::Exhausted { emitted: 64, depth: 6 })));
    }

    #[test]
    fn skewed_measures_stay_injective() {
        let sys = build_system(&Policy::RoundRobin, 255).unwrap();
        let rule = MassRule::Proportional { share: frac(1, 3) };
        let m = uniformly_regular_measure(&sys, &rule).unwrap();
        let pts = ud_points(&m, "", 8, 256).unwrap();
        let distinct: std::collections::HashSet<&Point> = pts.iter().collect();
        assert_eq!(distinct.len(), 256);
    }

    #[test]
    fn atoms_are_rejected() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        let rule = MassRule::Proportional { share: frac(1, 1) };
        let m = uniformly_regular_measure(&sys, &rule).unwrap();
        assert!(matches!(UdGenerator::new(&m, "", 6), Err(Error::AtomicMeasure(_))));
        assert!(uniformly_regular_measure(&sys, &MassRule::Proportional { share: frac(3, 2) }).is_err());
    }

    #[test]
    fn rules_parse() {
        assert_eq!("half-half".parse::<MassRule>().unwrap(), MassRule::HalfHalf);
        let r: MassRule = "proportional:1/3".parse().unwrap();
        assert_eq!(r.to_string(), "proportional:1/3");
        assert!("thirds".parse::<MassRule>().is_err());
    }
}
