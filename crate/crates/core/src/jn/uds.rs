use std::collections::HashMap;

use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::cantor::Point;
use crate::error::{Error, Result};
use crate::measures::FsMeasure;
use crate::rational::Rational;

use super::{MeasureSequence, PointStream, SequenceMeta, Term};

/// The integer interval `P_n = {2^n − 1, …, 2^(n+1) − 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionCell {
    pub min: u64,
    pub max: u64,
}

impl PartitionCell {
    pub fn len(&self) -> u64 {
        self.max - self.min + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|P_n| / max P_n`, undefined for `P_0 = {0}`.
    pub fn ratio(&self) -> Option<Rational> {
        (self.max > 0).then(|| Rational::new(BigInt::from(self.len()), BigInt::from(self.max)))
    }

    pub fn contains(&self, k: u64) -> bool {
        self.min <= k && k <= self.max
    }
}

pub fn uds_partition(n: u32) -> Result<PartitionCell> {
    if n > 62 {
        return Err(Error::InvalidArgument(format!("partition index {n} too large")));
    }
    Ok(PartitionCell { min: (1u64 << n) - 1, max: (1u64 << (n + 1)) - 2 })
}

#[derive(Clone, Debug, Serialize)]
pub struct UdsTerm {
    pub n: u32,
    pub raw: FsMeasure,
    pub normalized: FsMeasure,
}

/// `ν_n = (1/M_{n+1}) Σ_{k<M_{n+1}} δ_{x_k} − (1/M_n) Σ_{k<M_n} δ_{x_k}` with
/// `M_n = max P_n`, and `μ_n = ν_n / ‖ν_n‖`. Requires `n ≥ 1` and the points
/// `x_0, …, x_{M_{n+1}−1}` to be pairwise distinct.
pub fn uds_to_fsjn(points: &dyn Fn(usize) -> Result<Point>, n: u32) -> Result<UdsTerm> {
    if n == 0 {
        return Err(Error::InvalidArgument("the sequence starts at n = 1 because max P_0 = 0".into()));
    }
    let m_n = uds_partition(n)?.max as usize;
    let m_next = uds_partition(n + 1)?.max as usize;
    let mut seen: HashMap<Point, usize> = HashMap::with_capacity(m_next);
    let mut pts = Vec::with_capacity(m_next);
    for k in 0..m_next {
        let p = points(k)?;
        if let Some(&j) = seen.get(&p) {
            return Err(Error::NotInjective { first: j, second: k });
        }
        seen.insert(p.clone(), k);
        pts.push(p);
    }
    let a = Rational::new(BigInt::from(1), BigInt::from(m_next));
    let b = Rational::new(BigInt::from(1), BigInt::from(m_n));
    let atoms = pts
        .iter()
        .enumerate()
        .map(|(k, p)| (p.clone(), if k < m_n { &a - &b } else { a.clone() }));
    let raw = FsMeasure::from_atoms(atoms);
    let normalized = raw.normalize()?;
    Ok(UdsTerm { n, raw, normalized })
}

/// The normalized terms `μ_1, μ_2, …` over a point stream, labelled from 1.
pub fn uds_sequence(name: &str, points: PointStream, len: Option<usize>) -> MeasureSequence {
    let meta = SequenceMeta {
        name: name.to_string(),
        params: json!({ "points": name }),
        depth: None,
        normalized: true,
        first_index: 1,
        len,
    };
    MeasureSequence::new(meta, move |i| Ok(Term::Atomic(uds_to_fsjn(points.as_ref(), i as u32 + 1)?.normalized)))
}

/// How many terms of the uds sequence a stream of `available` points can
/// feed.
pub fn uds_terms_for(available: usize) -> usize {
    (1u32..62)
        .take_while(|&n| (1usize << (n + 2)) - 2 <= available)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jn::van_der_corput;
    use crate::rational::frac;

    fn vdc(k: usize) -> Result<Point> {
        Ok(van_der_corput(k as u64))
    }

    #[test]
    fn partition_cells() {
        assert_eq!(uds_partition(0).unwrap(), PartitionCell { min: 0, max: 0 });
        let p2 = uds_partition(2).unwrap();
        assert_eq!((p2.min, p2.max), (3, 6));
        assert_eq!(p2.ratio().unwrap(), frac(2, 3));
        assert!(uds_partition(0).unwrap().ratio().is_none());
        for n in 0..20 {
            assert_eq!(uds_partition(n).unwrap().max + 1, uds_partition(n + 1).unwrap().min);
        }
    }

    #[test]
    fn first_term_over_van_der_corput() {
        let t = uds_to_fsjn(&vdc, 1).unwrap();
        assert_eq!(t.raw.len(), 6);
        assert_eq!(t.raw.weight(&van_der_corput(0)), frac(1, 6) - frac(1, 2));
        assert_eq!(t.raw.weight(&van_der_corput(5)), frac(1, 6));
        assert_eq!(t.raw.norm(), frac(4, 3));
        assert_eq!(t.normalized.norm(), frac(1, 1));
        assert!(uds_to_fsjn(&vdc, 0).is_err());
    }

    #[test]
    fn injectivity_is_checked() {
        let repeat = |k: usize| Ok(van_der_corput((k % 3) as u64));
        assert!(matches!(uds_to_fsjn(&repeat, 1), Err(Error::NotInjective { first: 0, second: 3 })));
    }

    #[test]
    fn terms_fed_by_finite_streams() {
        assert_eq!(uds_terms_for(5), 0);
        assert_eq!(uds_terms_for(6), 1);
        assert_eq!(uds_terms_for(14), 2);
    }
}
