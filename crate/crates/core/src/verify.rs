//! Finite-depth checks of weak*-nullity and of the fsJN conditions, with CSV
//! and JSON reports.
//!
//! A sequence passes when its terms have norm exactly one and, from the
//! middle of the tested range on, every test set of bounded depth has small
//! measure. This is evidence at the tested depth and length, not a proof of
//! convergence.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cantor::{Clopen, NodeSet, Point};
use crate::error::{Error, Result};
use crate::jn::{MeasureSequence, Term};
use crate::rational::{self, Accumulator, Rational};

/// Deepest level for the exhaustive clopen family.
pub const ALL_CLOPEN_MAX_DEPTH: u32 = 5;
/// Deepest level for cylinder and random families.
pub const MAX_TEST_DEPTH: u32 = 20;

/// Test sets against which each term is evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// All cylinders `[s]` with `|s| ≤ D`.
    Cylinders,
    /// All clopen sets of depth `≤ D`, for `D ≤ 5`.
    AllClopen,
    /// `count` random unions of depth-`D` cylinders drawn from `seed`.
    Random { count: usize, seed: u64 },
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts `cylinders`, `all-clopen`, `random:K` and `random:K:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown test family {s:?}"));
        match s {
            "cylinders" => Ok(Family::Cylinders),
            "all-clopen" => Ok(Family::AllClopen),
            _ => {
                let rest = s.strip_prefix("random:").ok_or_else(bad)?;
                let mut parts = rest.split(':');
                let count = parts.next().and_then(|c| c.parse().ok()).ok_or_else(bad)?;
                let seed = match parts.next() {
                    Some(x) => x.parse().map_err(|_| bad())?,
                    None => crate::DEFAULT_SEED,
                };
                Ok(Family::Random { count, seed })
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Cylinders => f.write_str("cylinders"),
            Family::AllClopen => f.write_str("all-clopen"),
            Family::Random { count, seed } => write!(f, "random:{count}:{seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    #[serde(with = "rational::serde_str")]
    pub norm: Rational,
    #[serde(with = "rational::serde_str")]
    pub max_abs: Rational,
    /// A test set on which `|μ_n|` attains `max_abs`.
    pub witness: Clopen,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub norms_exact_one: bool,
    /// Whether every row from the middle of the range on is below the
    /// tolerance; absent when no tolerance was given.
    pub decay_below_tolerance: Option<bool>,
    /// Absent when some term is not finitely supported.
    pub disjoint_supports: Option<bool>,
    /// No terms were examined.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub construction: String,
    pub depth: u32,
    pub terms: usize,
    pub family: Family,
    #[serde(with = "rational::serde_opt_str")]
    pub tolerance: Option<Rational>,
    pub rows: Vec<Row>,
    pub flags: Flags,
    /// Outcome of the fsJN check; absent for plain reports.
    pub passed: Option<bool>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.passed == Some(true)
    }
}

enum Tests {
    Cylinders,
    AllClopen,
    Sets(Vec<NodeSet>),
}

fn max_over_cylinders(cells: &BTreeMap<u64, Rational>, depth: u32) -> (Rational, Clopen) {
    let mut levels: Vec<BTreeMap<u64, Rational>> = vec![cells.clone()];
    for _ in 0..depth {
        let mut acc: BTreeMap<u64, Accumulator> = BTreeMap::new();
        for (c, w) in levels.last().unwrap() {
            acc.entry(c >> 1).or_default().add(w);
        }
        levels.push(acc.into_iter().map(|(c, a)| (c, a.finish())).collect());
    }
    levels.reverse();
    let mut best = (Rational::zero(), Clopen::full());
    for (d, level) in levels.iter().enumerate() {
        for (&c, w) in level {
            if w.abs() > best.0 {
                best = (w.abs(), Clopen::cylinder_code(c, d as u32));
            }
        }
    }
    best
}

fn max_over_all_clopens(cells: &BTreeMap<u64, Rational>, depth: u32) -> (Rational, Clopen) {
    let mut pos = Accumulator::new();
    let mut neg = Accumulator::new();
    let mut pos_nodes = NodeSet::empty(depth);
    let mut neg_nodes = NodeSet::empty(depth);
    for (&c, w) in cells {
        if w.is_positive() {
            pos.add(w);
            pos_nodes.insert(c);
        } else {
            neg.add(w);
            neg_nodes.insert(c);
        }
    }
    let (p, n) = (pos.finish(), -neg.finish());
    if p >= n {
        (p, Clopen::from_nodes(pos_nodes))
    } else {
        (n, Clopen::from_nodes(neg_nodes))
    }
}

fn max_over_sets(cells: &BTreeMap<u64, Rational>, sets: &[NodeSet]) -> (Rational, Clopen) {
    let mut best: Option<(Rational, usize)> = None;
    for (i, s) in sets.iter().enumerate() {
        let v = rational::sum(cells.iter().filter(|(c, _)| s.contains(**c)).map(|(_, w)| w)).abs();
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, i));
        }
    }
    match best {
        Some((v, i)) => (v, Clopen::from_nodes(sets[i].clone())),
        None => (Rational::zero(), Clopen::empty()),
    }
}

fn random_sets(depth: u32, count: usize, seed: u64) -> Vec<NodeSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut s = NodeSet::empty(depth);
            for c in 0..1u64 << depth {
                if rng.gen_bool(0.5) {
                    s.insert(c);
                }
            }
            s
        })
        .collect()
}

/// Evaluates the first `n_terms` terms against the test family at depth `depth`.
///
/// The maxima are exact. For the exhaustive clopen family the maximum of
/// `|μ(U)|` over all unions of depth-`D` cells is the larger of the total
/// positive and total negative cell mass, attained by the positive (or
/// negative) cells.
pub fn weakstar_report(
    seq: &MeasureSequence,
    depth: u32,
    n_terms: usize,
    family: &Family,
    tol: Option<&Rational>,
) -> Result<Verdict> {
    if let Some(limit) = seq.meta().depth {
        if depth > limit {
            return Err(Error::DepthExceeded { requested: depth, limit });
        }
    }
    let tests = match family {
        Family::Cylinders => Tests::Cylinders,
        Family::AllClopen => Tests::AllClopen,
        Family::Random { count, seed } => Tests::Sets(random_sets(depth.min(MAX_TEST_DEPTH), *count, *seed)),
    };
    let cap = if matches!(family, Family::AllClopen) { ALL_CLOPEN_MAX_DEPTH } else { MAX_TEST_DEPTH };
    if depth > cap {
        return Err(Error::DepthExceeded { requested: depth, limit: cap });
    }
    if seq.available(n_terms) < n_terms {
        return Err(Error::InvalidArgument(format!(
            "{} has fewer than {n_terms} terms",
            seq.meta().name
        )));
    }

    let one = Rational::one();
    let mut rows = Vec::with_capacity(n_terms);
    let mut seen: HashSet<Point> = HashSet::new();
    let mut disjoint = Some(true);
    for i in 0..n_terms {
        let term = seq.term(i)?;
        match &term {
            Term::Atomic(m) => {
                for p in m.support() {
                    if !seen.insert(p.clone()) {
                        disjoint = disjoint.map(|_| false);
                    }
                }
            }
            Term::Density(_) => disjoint = None,
        }
        let cells = term.cell_values(depth);
        let (max_abs, witness) = match &tests {
            Tests::Cylinders => max_over_cylinders(&cells, depth),
            Tests::AllClopen => max_over_all_clopens(&cells, depth),
            Tests::Sets(sets) => max_over_sets(&cells, sets),
        };
        rows.push(Row { n: seq.label(i), norm: term.norm(), max_abs, witness });
    }
    let norms_exact_one = rows.iter().all(|r| r.norm == one);
    let decay = tol.map(|t| rows[n_terms / 2..].iter().all(|r| &r.max_abs < t));
    Ok(Verdict {
        construction: seq.meta().name.clone(),
        depth,
        terms: n_terms,
        family: family.clone(),
        tolerance: tol.cloned(),
        rows,
        flags: Flags { norms_exact_one, decay_below_tolerance: decay, disjoint_supports: disjoint, degenerate: n_terms == 0 },
        passed: None,
    })
}

/// fsJN check: every term `n < N` has norm exactly 1 and, for `n ≥ N/2`,
/// every cylinder of depth `≤ D` has measure of absolute value below `tol`.
/// An empty range passes vacuously and is flagged degenerate.
pub fn check_fsjn(seq: &MeasureSequence, depth: u32, n_terms: usize, tol: &Rational) -> Result<Verdict> {
    check_against(seq, depth, n_terms, &Family::Cylinders, tol)
}

/// The fsJN check with another test family in place of the cylinders.
pub fn check_against(seq: &MeasureSequence, depth: u32, n_terms: usize, family: &Family, tol: &Rational) -> Result<Verdict> {
    let mut v = weakstar_report(seq, depth, n_terms, family, Some(tol))?;
    v.passed = Some(v.flags.norms_exact_one && v.flags.decay_below_tolerance == Some(true));
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown report format {s:?}"))),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

pub fn to_csv(verdict: &Verdict) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "norm", "max_abs", "witness", "max_abs_decimal"])?;
    for r in &verdict.rows {
        w.write_record([
            r.n.to_string(),
            rational::format(&r.norm),
            rational::format(&r.max_abs),
            r.witness.to_compact(),
            rational::to_decimal(&r.max_abs),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(verdict: &Verdict) -> Result<String> {
    Ok(serde_json::to_string_pretty(verdict)? + "\n")
}

pub fn emit(verdict: &Verdict, format: Format, path: &Path) -> Result<()> {
    let body = match format {
        Format::Csv => to_csv(verdict)?,
        Format::Json => to_json(verdict)?,
    };
    std::fs::write(path, body)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Verdict> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jn::{comb_point, scattered_jn, standard_sequence};
    use crate::measures::FsMeasure;
    use crate::rational::frac;
    use serde_json::json;
    use std::sync::Arc;

    fn constant_dirac(n: usize) -> MeasureSequence {
        MeasureSequence::from_terms("constant", json!({}), vec![FsMeasure::dirac(Point::constant(false)); n])
    }

    #[test]
    fn standard_sequence_is_exactly_null_on_shallow_clopens() {
        let v = weakstar_report(&standard_sequence(), 5, 12, &Family::AllClopen, None).unwrap();
        for r in &v.rows[5..] {
            assert!(r.max_abs.is_zero());
        }
        assert!(v.rows[0].max_abs > Rational::zero());
        let c = check_fsjn(&standard_sequence(), 6, 12, &frac(1, 100)).unwrap();
        assert!(c.passed());
    }

    #[test]
    fn scattered_cylinder_one_only_at_start() {
        let seq = scattered_jn(Arc::new(comb_point), Point::constant(false), 4, 16).unwrap();
        let one = Clopen::cylinder("1").unwrap();
        for n in 0..6 {
            let v = seq.term(n).unwrap().eval(&one);
            assert_eq!(v.is_zero(), n > 0);
        }
    }

    #[test]
    fn negative_controls_fail() {
        let v = weakstar_report(&constant_dirac(8), 4, 8, &Family::Cylinders, Some(&frac(1, 2))).unwrap();
        assert!(v.rows.iter().all(|r| r.max_abs == frac(1, 1)));
        assert_eq!(v.flags.decay_below_tolerance, Some(false));
        assert!(!check_fsjn(&constant_dirac(12), 6, 12, &frac(1, 10)).unwrap().passed());
        let diracs: Vec<FsMeasure> = (0..12).map(|n| FsMeasure::dirac(comb_point(n))).collect();
        let seq = MeasureSequence::from_terms("diracs", json!({}), diracs);
        assert!(!check_fsjn(&seq, 6, 12, &frac(1, 10)).unwrap().passed());
    }

    #[test]
    fn empty_range_is_degenerate() {
        let v = check_fsjn(&standard_sequence(), 6, 0, &frac(1, 10)).unwrap();
        assert!(v.passed() && v.flags.degenerate);
    }

    #[test]
    fn witnesses_reproduce_the_maxima() {
        let seq = standard_sequence();
        for family in [Family::Cylinders, Family::AllClopen, Family::Random { count: 20, seed: 3 }] {
            let v = weakstar_report(&seq, 4, 8, &family, None).unwrap();
            for (i, r) in v.rows.iter().enumerate() {
                assert_eq!(seq.term(i).unwrap().eval(&r.witness).abs(), r.max_abs);
            }
        }
    }

    #[test]
    fn reports_round_trip() {
        let v = check_fsjn(&standard_sequence(), 3, 3, &frac(1, 10)).unwrap();
        let csv = to_csv(&v).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("n,norm,max_abs,witness,max_abs_decimal\n"));
        let back: Verdict = serde_json::from_str(&to_json(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        let dir = tempfile::tempdir().unwrap();
        assert!(emit(&v, Format::Csv, &dir.path().join("missing").join("x.csv")).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("cylinders".parse::<Family>().unwrap(), Family::Cylinders);
        assert_eq!("random:5:9".parse::<Family>().unwrap(), Family::Random { count: 5, seed: 9 });
        assert!("random".parse::<Family>().is_err());
        assert!(weakstar_report(&standard_sequence(), 6, 2, &Family::AllClopen, None).is_err());
    }
}
