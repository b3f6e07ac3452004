use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_traits::{Signed, Zero};
use serde::Serialize;
use serde_json::json;

use crate::cantor::Point;
use crate::error::{Error, Result};
use crate::measures::FsMeasure;
use crate::rational::{self, Rational};
use crate::verify::{self, Verdict};

use super::MeasureSequence;

#[derive(Clone, Debug, Serialize)]
pub struct DisjointConfig {
    /// Number of input terms examined.
    pub horizon: usize,
    /// Two weights closer than this count as equal.
    #[serde(with = "rational::serde_str")]
    pub tol: Rational,
    /// Cylinder depth used for the post-hoc decay check.
    pub verify_depth: u32,
    #[serde(with = "rational::serde_str")]
    pub verify_tol: Rational,
}

impl Default for DisjointConfig {
    fn default() -> Self {
        Self { horizon: 64, tol: rational::frac(1, 1000), verify_depth: 4, verify_tol: rational::frac(1, 10) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Disjointified {
    pub terms: Vec<FsMeasure>,
    /// The chosen subsequence `n_k` of input positions.
    pub subsequence: Vec<usize>,
    /// The detected limit weights `α_x`.
    pub limit: FsMeasure,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointFailure {
    pub reasons: Vec<String>,
    pub terms: Vec<FsMeasure>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisjointOutcome {
    Verified(Disjointified),
    Failed(DisjointFailure),
}

impl DisjointOutcome {
    pub fn terms(&self) -> &[FsMeasure] {
        match self {
            DisjointOutcome::Verified(d) => &d.terms,
            DisjointOutcome::Failed(f) => &f.terms,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, DisjointOutcome::Verified(_))
    }
}

/// Centre of the weight cluster with most members among `values`, where
/// the candidate centres are the values themselves and zero. Ties go to the
/// cluster containing `last`, then to zero, then to the smaller centre.
fn dominant_cluster(values: &[Rational], last: &Rational, tol: &Rational) -> Rational {
    let zero = Rational::zero();
    let centres: BTreeSet<&Rational> = values.iter().chain(std::iter::once(&zero)).collect();
    let mut best: Option<((usize, bool, bool), &Rational)> = None;
    for &c in &centres {
        let count = values.iter().filter(|v| (*v - c).abs() <= *tol).count();
        let key = (count, (last - c).abs() <= *tol, c.is_zero());
        if best.as_ref().map_or(true, |(k, _)| key > *k) {
            best = Some((key, c));
        }
    }
    best.map(|(_, c)| c.clone()).unwrap_or(zero)
}

/// Turns a weak*-null sequence of finitely supported norm-one measures into a
/// disjointly supported one.
///
/// Over the first `horizon` terms, the weight at each point is stabilized
/// along a diagonal subsequence. Points are visited in order of first
/// appearance; the centre of the dominant weight cluster over the later half
/// of the surviving indices becomes the limit weight `α_x`, and unless the
/// last quarter has already settled within `tol` of it, that later half is
/// cut down to the cluster. Points charged by a single term get `α_x = 0`.
///
/// Along the surviving indices `n_k`, `A_k` collects the points where `μ_{n_k}` differs from `α` by more than `tol` and that no
/// earlier `A_j` took. With `ν_k = μ_{n_k}↾A_k` (terms of norm at most
/// `2·tol` are dropped) the output is `θ_j = ρ_j/‖ρ_j‖`,
/// `ρ_j = ν_{2j} − ν_{2j+1}`. The result is re-checked for disjoint supports,
/// unit norms and cylinder decay; a failed check is returned as a report.
pub fn disjointify(seq: &MeasureSequence, cfg: &DisjointConfig) -> Result<DisjointOutcome> {
    let h = seq.available(cfg.horizon);
    if h < 4 {
        return Err(Error::InsufficientHorizon(format!("only {h} input terms")));
    }
    let terms: Vec<FsMeasure> = (0..h).map(|i| seq.atomic_term(i)).collect::<Result<_>>()?;

    let mut order: Vec<Point> = Vec::new();
    let mut seen: HashSet<Point> = HashSet::new();
    for t in &terms {
        for p in t.support() {
            if seen.insert(p.clone()) {
                order.push(p.clone());
            }
        }
    }

    let mut appearances: HashMap<&Point, usize> = HashMap::new();
    for t in &terms {
        for p in t.support() {
            *appearances.entry(p).or_default() += 1;
        }
    }

    let mut indices: Vec<usize> = (0..h).collect();
    let mut limit: BTreeMap<Point, Rational> = BTreeMap::new();
    for x in &order {
        if appearances[x] < 2 {
            // a point charged by a single term has limit weight 0 and never
            // forces a cut
            continue;
        }
        let half = indices.len() / 2;
        let tail_values: Vec<Rational> = indices[half..].iter().map(|&n| terms[n].weight(x)).collect();
        let last = tail_values.last().cloned().unwrap_or_else(Rational::zero);
        let alpha = dominant_cluster(&tail_values, &last, &cfg.tol);
        let close = |v: &Rational| (v - &alpha).abs() <= cfg.tol;
        let settled = tail_values[tail_values.len() / 2..].iter().all(|v| close(v));
        if !settled {
            let mut kept: Vec<usize> = indices[..half].to_vec();
            kept.extend(indices[half..].iter().zip(&tail_values).filter(|(_, v)| close(v)).map(|(&n, _)| n));
            indices = kept;
        }
        if indices.len() < 4 {
            return Err(Error::InsufficientHorizon(format!(
                "weights at {x} do not stabilize along a subsequence of the first {h} terms"
            )));
        }
        if !alpha.is_zero() {
            limit.insert(x.clone(), alpha);
        }
    }

    let mut taken: HashSet<Point> = HashSet::new();
    let mut pieces: Vec<(usize, FsMeasure)> = Vec::new();
    let small = &cfg.tol * rational::int(2);
    for &n in &indices {
        let alpha_at = |p: &Point| limit.get(p).cloned().unwrap_or_else(Rational::zero);
        let a_k: BTreeSet<Point> = terms[n]
            .atoms()
            .filter(|(p, w)| (*w - alpha_at(p)).abs() > cfg.tol && !taken.contains(*p))
            .map(|(p, _)| p.clone())
            .collect();
        taken.extend(a_k.iter().cloned());
        let piece = terms[n].restrict_points(&a_k);
        if piece.norm() > small {
            pieces.push((n, piece));
        }
    }
    if pieces.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} of {} restricted terms exceed norm 2·tol; the input has no weak*-null part",
            pieces.len(),
            indices.len()
        )));
    }

    let mut out = Vec::with_capacity(pieces.len() / 2);
    let mut subsequence = Vec::with_capacity(pieces.len());
    for pair in pieces.chunks_exact(2) {
        let rho = pair[0].1.minus(&pair[1].1);
        out.push(rho.normalize()?);
        subsequence.extend([pair[0].0, pair[1].0]);
    }

    let result = MeasureSequence::from_terms(
        "disjointified",
        json!({ "source": seq.meta().name, "config": cfg }),
        out.clone(),
    );
    let verdict = verify::check_fsjn(&result, cfg.verify_depth, out.len(), &cfg.verify_tol)?;
    let mut reasons = Vec::new();
    if verdict.flags.disjoint_supports != Some(true) {
        reasons.push("supports are not pairwise disjoint".to_string());
    }
    if !verdict.flags.norms_exact_one {
        reasons.push("some term does not have norm exactly 1".to_string());
    }
    if verdict.flags.decay_below_tolerance != Some(true) {
        reasons.push(format!(
            "cylinder values up to depth {} do not drop below {}",
            cfg.verify_depth,
            rational::format(&cfg.verify_tol)
        ));
    }
    let limit = FsMeasure::from_atoms(limit);
    Ok(if reasons.is_empty() {
        DisjointOutcome::Verified(Disjointified { terms: out, subsequence, limit, verdict })
    } else {
        DisjointOutcome::Failed(DisjointFailure { reasons, terms: out, verdict })
    })
}
