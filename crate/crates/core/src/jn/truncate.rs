use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measures::{CsMeasure, FsMeasure};
use crate::rational::{self, pow2_inv, Rational};

use super::{comb_point, MeasureSequence, SequenceMeta, Term};

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedTerm {
    pub measure: FsMeasure,
    pub head_len: usize,
    #[serde(with = "rational::serde_str")]
    pub tail_bound: Rational,
    /// Norm of the head before normalization; exceeds `1 − 1/n`.
    #[serde(with = "rational::serde_str")]
    pub head_norm: Rational,
}

/// Cuts a norm-one countably supported term to a finite head whose tail is
/// certified below `1/n`, then normalizes the head.
pub fn truncate_csjn(term: &CsMeasure, n: usize) -> Result<TruncatedTerm> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation index must be at least 1".into()));
    }
    let eps = Rational::new(BigInt::from(1), BigInt::from(n));
    let cut = term.cs_truncate(&eps)?;
    let head_norm = cut.head.norm();
    let measure = cut.head.normalize()?;
    Ok(TruncatedTerm { measure, head_len: cut.len, tail_bound: cut.tail_bound, head_norm })
}

/// A norm-one countably supported term built from the scattered pairs
/// `0^{2(m+j)}1^ω, 0^{2(m+j)+1}1^ω` with weights `±2^-(j+2)`, listed
/// alternately by sign.
pub fn geometric_csjn(m: usize) -> CsMeasure {
    CsMeasure::new(
        move |k| {
            let j = k / 2;
            let w = pow2_inv(j as u32 + 2);
            Some(if k % 2 == 0 { (comb_point(2 * (m + j)), w) } else { (comb_point(2 * (m + j) + 1), -w) })
        },
        |k| {
            let j = (k / 2) as u32;
            if k % 2 == 0 {
                pow2_inv(j)
            } else {
                rational::int(3) * pow2_inv(j + 2)
            }
        },
    )
}

/// `n ↦ truncate_csjn(terms(n), n)`, labelled from 1.
pub fn truncated_sequence(name: &str, terms: Arc<dyn Fn(usize) -> CsMeasure + Send + Sync>) -> MeasureSequence {
    let meta = SequenceMeta {
        name: name.to_string(),
        params: json!({ "source": name }),
        depth: None,
        normalized: true,
        first_index: 1,
        len: None,
    };
    MeasureSequence::new(meta, move |i| Ok(Term::Atomic(truncate_csjn(&terms(i + 1), i + 1)?.measure)))
}
