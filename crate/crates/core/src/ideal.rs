//! The density-ideal pseudo-union on ω.
//!
//! A weighted partition gives finite disjoint cells `A_n` and positive
//! weights; a set `C` is small when `μ(A_n ∩ C)/μ(A_n) → 0`, witnessed by a
//! nonincreasing certificate `ε(n)` bounding the ratio. Elements outside every
//! cell never enter a ratio, so membership is only consulted inside cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Cells used to spot-check input certificates.
pub const CERTIFICATE_SPOT_CHECK: usize = 64;

/// Most cells searched for one schedule entry when a certificate never
/// drops low enough.
pub const SCHEDULE_SEARCH_CAP: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Cells {
    /// `A_n = {n·m, …, n·m + m − 1}`.
    Blocks { m: u64 },
    /// Finitely many explicit cells; later cells are empty and ignored.
    Explicit { cells: Vec<Vec<u64>> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedPartition {
    pub cells: Cells,
    /// Weights differing from 1.
    #[serde(default, with = "weights_str")]
    pub weights: BTreeMap<u64, Rational>,
}

mod weights_str {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{self, Rational};

    pub fn serialize<S: Serializer>(w: &BTreeMap<u64, Rational>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(w.iter().map(|(k, v)| (k.to_string(), rational::format(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, Rational>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let k = k.parse::<u64>().map_err(serde::de::Error::custom)?;
                Ok((k, rational::parse(&v).map_err(serde::de::Error::custom)?))
            })
            .collect()
    }
}

impl FromStr for WeightedPartition {
    type Err = Error;

    /// `blocks:m=M` or `pairs`, with unit weights.
    fn from_str(s: &str) -> Result<Self> {
        let cells = match s.trim() {
            "pairs" => Cells::Blocks { m: 2 },
            t => match t.strip_prefix("blocks:m=").map(str::parse::<u64>) {
                Some(Ok(m)) if m > 0 => Cells::Blocks { m },
                _ => return Err(Error::Parse(format!("unknown partition {s:?} (expected blocks:m=M or pairs)"))),
            },
        };
        Ok(WeightedPartition { cells, weights: BTreeMap::new() })
    }
}

impl fmt::Display for WeightedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cells {
            Cells::Blocks { m } => write!(f, "blocks:m={m}"),
            Cells::Explicit { cells } => write!(f, "explicit:{}", cells.len()),
        }
    }
}

impl WeightedPartition {
    pub fn blocks(m: u64) -> Self {
        WeightedPartition { cells: Cells::Blocks { m }, weights: BTreeMap::new() }
    }

    /// Checks disjointness and positivity of weights and cell masses.
    pub fn validate(&self) -> Result<()> {
        if let Some((k, w)) = self.weights.iter().find(|(_, w)| **w <= Rational::zero()) {
            return Err(Error::InvalidArgument(format!("weight of {k} is {}, not positive", rational::format(w))));
        }
        match &self.cells {
            Cells::Blocks { m } if *m == 0 => Err(Error::InvalidArgument("blocks need m ≥ 1".into())),
            Cells::Blocks { .. } => Ok(()),
            Cells::Explicit { cells } => {
                let mut seen = BTreeSet::new();
                for (n, c) in cells.iter().enumerate() {
                    if c.is_empty() {
                        return Err(Error::InvalidArgument(format!("cell {n} is empty")));
                    }
                    if let Some(k) = c.iter().find(|k| !seen.insert(**k)) {
                        return Err(Error::InvalidArgument(format!("element {k} lies in two cells")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of cells, `None` for infinitely many.
    pub fn len(&self) -> Option<usize> {
        match &self.cells {
            Cells::Blocks { .. } => None,
            Cells::Explicit { cells } => Some(cells.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn cell(&self, n: usize) -> Vec<u64> {
        match &self.cells {
            Cells::Blocks { m } => (n as u64 * m..(n as u64 + 1) * m).collect(),
            Cells::Explicit { cells } => cells.get(n).cloned().unwrap_or_default(),
        }
    }

    /// The index of the cell containing `k`.
    pub fn cell_of(&self, k: u64) -> Option<usize> {
        match &self.cells {
            Cells::Blocks { m } => Some((k / m) as usize),
            Cells::Explicit { cells } => cells.iter().position(|c| c.contains(&k)),
        }
    }

    pub fn weight(&self, k: u64) -> Rational {
        self.weights.get(&k).cloned().unwrap_or_else(Rational::one)
    }

    /// `μ(A_n)`.
    pub fn mass(&self, n: usize) -> Rational {
        rational::sum(&self.cell(n).into_iter().map(|k| self.weight(k)).collect::<Vec<_>>())
    }

    /// Cells all of whose elements lie below `horizon`.
    pub fn cells_below(&self, horizon: u64) -> usize {
        match &self.cells {
            Cells::Blocks { m } => (horizon / m) as usize,
            Cells::Explicit { cells } => cells.iter().take_while(|c| c.iter().all(|&k| k < horizon)).count(),
        }
    }
}

/// Membership rule of a set `C ⊆ ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Members {
    Empty,
    All,
    /// `k ≡ residue (mod modulus)`, in cells below `below_cell` if given.
    Residue { modulus: u64, residue: u64, below_cell: Option<usize> },
    Finite { elements: BTreeSet<u64> },
    /// `⋃ (C_i ∖ ⋃_{j ≤ above_cell} A_j)`.
    Union { parts: Vec<UnionPart> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionPart {
    pub members: Members,
    pub above_cell: usize,
}

impl Members {
    pub fn contains(&self, p: &WeightedPartition, k: u64) -> bool {
        match self {
            Members::Empty => false,
            Members::All => true,
            Members::Residue { modulus, residue, below_cell } => {
                *modulus > 0
                    && k % modulus == residue % modulus
                    && below_cell.map_or(true, |b| p.cell_of(k).is_some_and(|n| n < b))
            }
            Members::Finite { elements } => elements.contains(&k),
            Members::Union { parts } => parts
                .iter()
                .any(|part| p.cell_of(k).is_some_and(|n| n > part.above_cell) && part.members.contains(p, k)),
        }
    }
}

/// A nonincreasing bound `ε(n) ≥ μ(A_n ∩ C)/μ(A_n)` with limit 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Zero,
    /// `value` below cell `until`, 0 from there on.
    Step {
        #[serde(with = "rational::serde_str")]
        value: Rational,
        until: usize,
    },
    /// `min(1, scale/(n+1))`.
    Harmonic {
        #[serde(with = "rational::serde_str")]
        scale: Rational,
    },
    /// `1` up to `n_0`, `1/(k+1)` on `(n_k, n_{k+1}]`, `1/K` past `n_{K−1}`.
    Schedule { schedule: Vec<usize> },
}

impl Certificate {
    pub fn eval(&self, n: usize) -> Rational {
        match self {
            Certificate::Zero => Rational::zero(),
            Certificate::Step { value, until } => {
                if n < *until {
                    value.clone()
                } else {
                    Rational::zero()
                }
            }
            Certificate::Harmonic { scale } => {
                let v = scale / Rational::from_integer(BigInt::from(n + 1));
                v.min(Rational::one())
            }
            Certificate::Schedule { schedule } => {
                let k = schedule.iter().take_while(|&&s| s < n).count();
                if k == 0 {
                    Rational::one()
                } else {
                    rational::frac(1, k as i64)
                }
            }
        }
    }

    /// The least `n` with `ε(m) < target` for all `m ≥ n`.
    pub fn inverse(&self, target: &Rational) -> usize {
        match self {
            Certificate::Zero => 0,
            Certificate::Step { value, until } => {
                if value < target {
                    0
                } else {
                    *until
                }
            }
            Certificate::Harmonic { scale } => {
                // scale/(n+1) < target ⇔ n + 1 > scale/target
                let q = (scale / target).floor().to_integer();
                usize::try_from(q).unwrap_or(usize::MAX)
            }
            Certificate::Schedule { schedule } => {
                let k = (Rational::one() / target).ceil().to_integer();
                let k = usize::try_from(k).unwrap_or(usize::MAX);
                // 1/j < target ⇔ j > 1/target
                let j = if Rational::from_integer(BigInt::from(k)) * target > Rational::one() { k } else { k + 1 };
                schedule.get(j.saturating_sub(1)).map_or(usize::MAX, |&s| s + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealSet {
    pub members: Members,
    pub certificate: Certificate,
}

impl IdealSet {
    pub fn empty() -> Self {
        IdealSet { members: Members::Empty, certificate: Certificate::Zero }
    }

    pub fn contains(&self, p: &WeightedPartition, k: u64) -> bool {
        self.members.contains(p, k)
    }
}

/// `μ(A_n ∩ C)/μ(A_n)`, exactly.
pub fn ratio(p: &WeightedPartition, c: &Members, n: usize) -> Rational {
    let cell = p.cell(n);
    if cell.is_empty() {
        return Rational::zero();
    }
    let inside: Vec<Rational> = cell.iter().filter(|&&k| c.contains(p, k)).map(|&k| p.weight(k)).collect();
    rational::sum(&inside) / p.mass(n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoUnion {
    pub set: IdealSet,
    pub schedule: Vec<usize>,
}

/// Builds `C = ⋃_{k<K} (C_k ∖ ⋃_{j≤n_k} A_j)`.
///
/// `n_k` is the least `n > n_{k−1}` with `Σ_{i≤k} ε_i(n) < 1/(k+1)`. Once
/// every `ε_i` is below `1/(k+1)²` the sum is below `1/(k+1)`, so the search
/// stops at `max_{i≤k} inv_i(1/(k+1)²)` (capped at [`SCHEDULE_SEARCH_CAP`]
/// cells past `n_{k−1}`). Certificates are monotone, so the inequality then
/// holds for every `n > n_k` and the certificate of `C` is `1/(k+1)` on
/// `(n_k, n_{k+1}]`. Input certificates are spot-checked
/// against exact ratios on the first [`CERTIFICATE_SPOT_CHECK`] cells.
pub fn pseudo_union(p: &WeightedPartition, sets: &[IdealSet], k_max: usize) -> Result<PseudoUnion> {
    p.validate()?;
    if k_max > sets.len() {
        return Err(Error::InvalidArgument(format!("K = {k_max} exceeds the {} given sets", sets.len())));
    }
    let spot = p.len().map_or(CERTIFICATE_SPOT_CHECK, |l| l.min(CERTIFICATE_SPOT_CHECK));
    for (i, c) in sets[..k_max].iter().enumerate() {
        for n in 0..spot {
            let r = ratio(p, &c.members, n);
            if r > c.certificate.eval(n) {
                return Err(Error::Certificate(format!(
                    "set {i}: ratio {} at cell {n} exceeds the certificate {}",
                    rational::format(&r),
                    rational::format(&c.certificate.eval(n))
                )));
            }
        }
    }

    let mut schedule: Vec<usize> = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let target = rational::frac(1, k as i64 + 1);
        let share = rational::frac(1, (k as i64 + 1) * (k as i64 + 1));
        let enough = sets[..=k].iter().map(|c| c.certificate.inverse(&share)).max().unwrap_or(0);
        let start = schedule.last().map_or(0, |&s| s + 1);
        let bound = enough.max(start).min(start.saturating_add(SCHEDULE_SEARCH_CAP));
        let found = (start..=bound).find(|&n| {
            let total: Vec<Rational> = sets[..=k].iter().map(|c| c.certificate.eval(n)).collect();
            rational::sum(&total) < target
        });
        match found {
            Some(n) => schedule.push(n),
            None => return Err(Error::ScheduleSearch { k, bound }),
        }
    }

    let parts = sets[..k_max]
        .iter()
        .zip(&schedule)
        .map(|(c, &n)| UnionPart { members: c.members.clone(), above_cell: n })
        .collect();
    let set = IdealSet { members: Members::Union { parts }, certificate: Certificate::Schedule { schedule: schedule.clone() } };
    Ok(PseudoUnion { set, schedule })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Containment,
    Certificate,
    Schedule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub k: usize,
    pub cell: Option<usize>,
    pub element: Option<u64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoUnionReport {
    pub k: usize,
    pub horizon: u64,
    pub schedule: Vec<usize>,
    pub containment_checks: usize,
    pub certificate_checks: usize,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

/// Checks, for every `k` below the schedule length and every element and
/// cell below `horizon`: `C_k ∖ C ⊆ ⋃_{j≤n_k} A_j`, `ratio(C, n) < 1/(k+1)`
/// for `n ∈ (n_k, n_{k+1}]` (and `< 1/K` past the last entry), and strict
/// growth of the schedule.
pub fn verify_pseudo_union(
    p: &WeightedPartition,
    sets: &[IdealSet],
    c: &Members,
    schedule: &[usize],
    horizon: u64,
) -> Result<PseudoUnionReport> {
    p.validate()?;
    let k_max = schedule.len().min(sets.len());
    let mut violations = Vec::new();
    for (k, w) in schedule.windows(2).enumerate() {
        if w[1] <= w[0] {
            violations.push(Violation {
                kind: ViolationKind::Schedule,
                k: k + 1,
                cell: Some(w[1]),
                element: None,
                detail: format!("n_{} = {} does not exceed n_{k} = {}", k + 1, w[1], w[0]),
            });
        }
    }

    let cells = p.cells_below(horizon);
    let mut containment_checks = 0;
    for (k, set) in sets[..k_max].iter().enumerate() {
        for n in 0..cells {
            for x in p.cell(n) {
                if !set.contains(p, x) {
                    continue;
                }
                containment_checks += 1;
                if !c.contains(p, x) && n > schedule[k] {
                    violations.push(Violation {
                        kind: ViolationKind::Containment,
                        k,
                        cell: Some(n),
                        element: Some(x),
                        detail: format!("{x} ∈ C_{k} ∖ C lies in cell {n} > n_{k} = {}", schedule[k]),
                    });
                }
            }
        }
    }

    let mut certificate_checks = 0;
    for n in 0..cells {
        let k = schedule.iter().take_while(|&&s| s < n).count();
        if k == 0 {
            continue;
        }
        certificate_checks += 1;
        let bound = rational::frac(1, k as i64);
        let r = ratio(p, c, n);
        if r >= bound {
            violations.push(Violation {
                kind: ViolationKind::Certificate,
                k: k - 1,
                cell: Some(n),
                element: None,
                detail: format!("ratio {} at cell {n} is not below 1/{k}", rational::format(&r)),
            });
        }
    }

    Ok(PseudoUnionReport {
        k: k_max,
        horizon,
        schedule: schedule.to_vec(),
        containment_checks,
        certificate_checks,
        passed: violations.is_empty(),
        violations,
    })
}

/// Input file for the ideal commands: `{"sets": [IdealSet, …]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetsFile {
    pub sets: Vec<IdealSet>,
}

/// `C_i = {m·n + (i mod m) : n < 16(i+1)}` with `ε_i = 1/m` below cell
/// `16(i+1)` and 0 after, on blocks of size `m`.
pub fn block_family(m: u64, count: usize) -> Vec<IdealSet> {
    (0..count)
        .map(|i| {
            let until = 16 * (i + 1);
            IdealSet {
                members: Members::Residue { modulus: m, residue: i as u64 % m, below_cell: Some(until) },
                certificate: Certificate::Step { value: rational::frac(1, m as i64), until },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn evens() -> Members {
        Members::Residue { modulus: 2, residue: 0, below_cell: None }
    }

    #[test]
    fn ratios() {
        let pairs: WeightedPartition = "pairs".parse().unwrap();
        for n in 0..10 {
            assert_eq!(ratio(&pairs, &Members::Empty, n), frac(0, 1));
            assert_eq!(ratio(&pairs, &Members::All, n), frac(1, 1));
            assert_eq!(ratio(&pairs, &evens(), n), frac(1, 2));
        }
        let mut weighted = pairs.clone();
        weighted.weights.insert(0, frac(3, 1));
        assert_eq!(ratio(&weighted, &evens(), 0), frac(3, 4));
    }

    #[test]
    fn single_harmonic_set() {
        let p = WeightedPartition::blocks(8);
        let c0 = IdealSet {
            members: Members::Finite { elements: BTreeSet::from([0, 8, 40]) },
            certificate: Certificate::Harmonic { scale: frac(1, 1) },
        };
        let out = pseudo_union(&p, &[c0], 1).unwrap();
        assert_eq!(out.schedule, vec![1]);
        // C_0 ∖ C ⊆ A_0 ∪ A_1
        assert!(!out.set.contains(&p, 0));
        assert!(!out.set.contains(&p, 8));
        assert!(out.set.contains(&p, 40));
    }

    #[test]
    fn empty_sets_schedule_is_the_identity() {
        let p = WeightedPartition::blocks(3);
        let sets = vec![IdealSet::empty(); 6];
        let out = pseudo_union(&p, &sets, 6).unwrap();
        assert_eq!(out.schedule, (0..6).collect::<Vec<_>>());
        assert!((0..100).all(|k| !out.set.contains(&p, k)));
        let report = verify_pseudo_union(&p, &sets, &out.set.members, &out.schedule, 300).unwrap();
        assert!(report.passed);
        let none = verify_pseudo_union(&p, &[], &Members::Empty, &[], 300).unwrap();
        assert!(none.passed);
    }

    #[test]
    fn block_family_schedule() {
        let p: WeightedPartition = "blocks:m=8".parse().unwrap();
        let sets = block_family(8, 20);
        let out = pseudo_union(&p, &sets, 20).unwrap();
        let mut expected = vec![0, 1, 16, 48, 64, 80, 96];
        expected.extend((7..20).map(|k| 16 * (k + 1)));
        assert_eq!(out.schedule, expected);
        let report = verify_pseudo_union(&p, &sets, &out.set.members, &out.schedule, 4096).unwrap();
        assert!(report.passed, "{:?}", report.violations);
    }

    #[test]
    fn unions_of_blocks_follow_the_closed_form() {
        // C_i = i-th element of every block: ratio 1/m each, the union of
        // k+1 of them (k+1)/m, so n_k exists only while (k+1)/m < 1/(k+1)
        let m = 16;
        let p = WeightedPartition::blocks(m);
        let sets: Vec<IdealSet> = (0..3)
            .map(|i| IdealSet {
                members: Members::Residue { modulus: m, residue: i, below_cell: None },
                certificate: Certificate::Step { value: frac(1, m as i64), until: usize::MAX },
            })
            .collect();
        for k in 0..3u64 {
            let r = ratio(&p, &Members::Union { parts: (0..=k).map(|i| UnionPart { members: sets[i as usize].members.clone(), above_cell: 0 }).collect() }, 5);
            assert_eq!(r, frac(k as i64 + 1, m as i64));
        }
        assert_eq!(pseudo_union(&p, &sets, 3).unwrap().schedule, vec![0, 1, 2]);
        let four: Vec<IdealSet> = (0..4).map(|i| IdealSet { members: Members::Residue { modulus: m, residue: i, below_cell: None }, ..sets[0].clone() }).collect();
        assert!(matches!(pseudo_union(&p, &four, 4), Err(Error::ScheduleSearch { k: 3, .. })));
    }

    #[test]
    fn corrupted_schedule_is_caught() {
        let p = WeightedPartition::blocks(8);
        let sets = block_family(8, 20);
        let out = pseudo_union(&p, &sets, 20).unwrap();
        let mut bad = out.schedule.clone();
        bad[3] -= 1;
        let report = verify_pseudo_union(&p, &sets, &out.set.members, &bad, 4096).unwrap();
        assert!(!report.passed);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Containment);
        assert_eq!((v.k, v.cell, v.element), (3, Some(48), Some(387)));
    }

    #[test]
    fn unsound_certificates_are_rejected() {
        let p = WeightedPartition::blocks(4);
        let liar = IdealSet { members: Members::All, certificate: Certificate::Harmonic { scale: frac(1, 1) } };
        assert!(matches!(pseudo_union(&p, &[liar], 1), Err(Error::Certificate(_))));
    }

    #[test]
    fn schedule_certificate_values() {
        let c = Certificate::Schedule { schedule: vec![0, 1, 16] };
        assert_eq!(c.eval(0), frac(1, 1));
        assert_eq!(c.eval(1), frac(1, 1));
        assert_eq!(c.eval(2), frac(1, 2));
        assert_eq!(c.eval(16), frac(1, 2));
        assert_eq!(c.eval(17), frac(1, 3));
        assert_eq!(c.inverse(&frac(1, 2)), 17);
        assert_eq!(Certificate::Harmonic { scale: frac(1, 1) }.inverse(&frac(1, 4)), 4);
    }

    #[test]
    fn partitions_parse() {
        assert_eq!("blocks:m=8".parse::<WeightedPartition>().unwrap(), WeightedPartition::blocks(8));
        assert!("blocks:m=0".parse::<WeightedPartition>().is_err());
        assert!("triples".parse::<WeightedPartition>().is_err());
        let bad = WeightedPartition { cells: Cells::Explicit { cells: vec![vec![1, 2], vec![2]] }, weights: BTreeMap::new() };
        assert!(bad.validate().is_err());
    }
}
