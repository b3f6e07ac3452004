use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cantor::Point;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

use super::FsMeasure;

type Stream = Arc<dyn Fn(usize) -> Option<(Point, Rational)> + Send + Sync>;
type TailBound = Arc<dyn Fn(usize) -> Rational + Send + Sync>;

/// How far `cs_truncate` looks for a small enough tail before giving up.
pub const TRUNCATION_SEARCH_CAP: usize = 1 << 20;

/// A countably supported measure `Σ_k w_k δ_{p_k}` presented as a pure
/// stream of atoms together with a certificate `tailbound(m) ≥ Σ_{k≥m} |w_k|`.
///
/// The stream must return the same atom for the same index on every call and
/// may end (return `None`), in which case the measure is finitely supported.
#[derive(Clone)]
pub struct CsMeasure {
    stream: Stream,
    tailbound: TailBound,
}

/// A finite head of a [`CsMeasure`] together with its certified tail.
#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    pub head: FsMeasure,
    pub len: usize,
    #[serde(with = "rational::serde_str")]
    pub tail_bound: Rational,
}

impl CsMeasure {
    pub fn new(
        stream: impl Fn(usize) -> Option<(Point, Rational)> + Send + Sync + 'static,
        tailbound: impl Fn(usize) -> Rational + Send + Sync + 'static,
    ) -> Self {
        Self { stream: Arc::new(stream), tailbound: Arc::new(tailbound) }
    }

    /// A finitely supported measure as a stream, with the exact tail as its
    /// certificate.
    pub fn from_fs(m: &FsMeasure) -> Self {
        let atoms: Arc<Vec<(Point, Rational)>> = Arc::new(m.atoms().map(|(p, w)| (p.clone(), w.clone())).collect());
        let mut tails = vec![Rational::zero(); atoms.len() + 1];
        for k in (0..atoms.len()).rev() {
            tails[k] = &tails[k + 1] + atoms[k].1.abs();
        }
        let tails = Arc::new(tails);
        let a = atoms.clone();
        Self::new(
            move |k| a.get(k).cloned(),
            move |m| tails.get(m).cloned().unwrap_or_else(Rational::zero),
        )
    }

    pub fn atom(&self, k: usize) -> Option<(Point, Rational)> {
        (self.stream)(k)
    }

    pub fn tailbound(&self, m: usize) -> Rational {
        (self.tailbound)(m)
    }

    /// The first `m` atoms (fewer if the stream ends), checking that their
    /// points are pairwise distinct.
    pub fn head(&self, m: usize) -> Result<FsMeasure> {
        let mut seen = BTreeSet::new();
        let mut atoms = Vec::with_capacity(m);
        for k in 0..m {
            let Some((p, w)) = self.atom(k) else { break };
            if !seen.insert(p.clone()) {
                return Err(Error::Certificate(format!("atom {k} repeats the point {p}")));
            }
            atoms.push((p, w));
        }
        Ok(FsMeasure::from_atoms(atoms))
    }

    /// The shortest head whose certified tail is below `eps`.
    ///
    /// While scanning, the certificate is spot-checked: it must be
    /// nonincreasing and bound every individual weight it covers.
    pub fn cs_truncate(&self, eps: &Rational) -> Result<Truncation> {
        if !eps.is_positive() {
            return Err(Error::InvalidArgument("truncation threshold must be positive".into()));
        }
        let mut prev: Option<Rational> = None;
        for m in 0..=TRUNCATION_SEARCH_CAP {
            let t = self.tailbound(m);
            if t.is_negative() {
                return Err(Error::Certificate(format!("tail bound at {m} is negative")));
            }
            if let Some(p) = &prev {
                if &t > p {
                    return Err(Error::Certificate(format!("tail bound increases at {m}")));
                }
            }
            let atom = self.atom(m);
            if let Some((_, w)) = &atom {
                if w.abs() > t {
                    return Err(Error::Certificate(format!("tail bound at {m} is below the weight of atom {m}")));
                }
            }
            if &t < eps {
                let head = self.head(m)?;
                return Ok(Truncation { head, len: m, tail_bound: t });
            }
            if atom.is_none() {
                return Err(Error::Certificate(format!("stream ends at {m} but the tail bound is still {}", rational::format(&t))));
            }
            prev = Some(t);
        }
        Err(Error::Certificate(format!("no tail below {} within {TRUNCATION_SEARCH_CAP} atoms", rational::format(eps))))
    }
}

impl std::fmt::Debug for CsMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CsMeasure(tailbound(0) = {})", rational::format(&self.tailbound(0)))
    }
}
