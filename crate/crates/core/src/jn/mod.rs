//! Builders for weak*-null sequences of norm-one measures, together with
//! disjointification, truncation of countably supported terms, and transport
//! along tree maps.

mod canonical;
mod disjoint;
mod transport;
mod truncate;
mod uds;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cantor::{Clopen, Point};
use crate::error::{Error, Result};
use crate::measures::{DensityMeasure, FsMeasure};
use crate::rational::Rational;

pub use canonical::{comb_point, independent_jn, independent_sequence, scattered_jn, standard_fsjn, standard_sequence, van_der_corput};
pub use disjoint::{disjointify, DisjointConfig, DisjointFailure, DisjointOutcome, Disjointified};
pub use transport::{transport, transport_bound, transport_sequence, OverlapWarning, TransportOptions, Transported};
pub use truncate::{geometric_csjn, truncate_csjn, truncated_sequence, TruncatedTerm};
pub use uds::{uds_partition, uds_sequence, uds_terms_for, uds_to_fsjn, PartitionCell, UdsTerm};

/// A lazily evaluated point sequence `n ↦ x_n`. Finite sequences return an
/// error past their end.
pub type PointStream = Arc<dyn Fn(usize) -> Result<Point> + Send + Sync>;

/// One term of a measure sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Atomic(FsMeasure),
    Density(DensityMeasure),
}

impl Term {
    pub fn norm(&self) -> Rational {
        match self {
            Term::Atomic(m) => m.norm(),
            Term::Density(m) => m.total_variation(),
        }
    }

    pub fn eval(&self, u: &Clopen) -> Rational {
        match self {
            Term::Atomic(m) => m.eval(u),
            Term::Density(m) => m.eval(u),
        }
    }

    pub fn cell_values(&self, d: u32) -> BTreeMap<u64, Rational> {
        match self {
            Term::Atomic(m) => m.cell_values(d),
            Term::Density(m) => m.cell_values(d),
        }
    }

    pub fn as_atomic(&self) -> Option<&FsMeasure> {
        match self {
            Term::Atomic(m) => Some(m),
            Term::Density(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub params: serde_json::Value,
    /// Depth beyond which the terms carry no information, if bounded.
    pub depth: Option<u32>,
    pub normalized: bool,
    /// Label of the first term (some constructions start at 1).
    pub first_index: usize,
    /// Number of terms for finite sequences.
    pub len: Option<usize>,
}

/// A sequence of measures `⟨μ_n⟩` given by a generator and its metadata.
#[derive(Clone)]
pub struct MeasureSequence {
    meta: SequenceMeta,
    generator: Arc<dyn Fn(usize) -> Result<Term> + Send + Sync>,
}

impl MeasureSequence {
    pub fn new(meta: SequenceMeta, generator: impl Fn(usize) -> Result<Term> + Send + Sync + 'static) -> Self {
        Self { meta, generator: Arc::new(generator) }
    }

    pub fn from_terms(name: &str, params: serde_json::Value, terms: Vec<FsMeasure>) -> Self {
        let normalized = terms.iter().all(|t| t.norm() == crate::rational::int(1));
        let meta = SequenceMeta {
            name: name.to_string(),
            params,
            depth: None,
            normalized,
            first_index: 0,
            len: Some(terms.len()),
        };
        let terms = Arc::new(terms);
        Self::new(meta, move |i| Ok(Term::Atomic(terms[i].clone())))
    }

    pub fn meta(&self) -> &SequenceMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut SequenceMeta {
        &mut self.meta
    }

    /// Label of the `i`-th term.
    pub fn label(&self, i: usize) -> usize {
        self.meta.first_index + i
    }

    /// The `i`-th term (position, not label).
    pub fn term(&self, i: usize) -> Result<Term> {
        if let Some(len) = self.meta.len {
            if i >= len {
                return Err(Error::InvalidArgument(format!("sequence {} has only {len} terms", self.meta.name)));
            }
        }
        (self.generator)(i)
    }

    pub fn atomic_term(&self, i: usize) -> Result<FsMeasure> {
        match self.term(i)? {
            Term::Atomic(m) => Ok(m),
            Term::Density(_) => Err(Error::InvalidArgument(format!("{} has density terms", self.meta.name))),
        }
    }

    /// Number of terms available among the first `n`.
    pub fn available(&self, n: usize) -> usize {
        self.meta.len.map_or(n, |l| l.min(n))
    }
}

impl std::fmt::Debug for MeasureSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureSequence").field("meta", &self.meta).finish()
    }
}
