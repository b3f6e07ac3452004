use std::collections::HashMap;
use std::sync::Arc;

use serde_json::json;

use crate::cantor::Point;
use crate::error::{Error, Result};
use crate::measures::{DensityMeasure, FsMeasure};
use crate::rational::{self, pow2_inv};

use super::{MeasureSequence, SequenceMeta, Term};

/// Largest index accepted by the constructors that enumerate `2^n` nodes.
const MAX_INDEX: u32 = 22;

fn check_index(n: u32) -> Result<()> {
    if n > MAX_INDEX {
        return Err(Error::DepthExceeded { requested: n + 1, limit: MAX_INDEX + 1 });
    }
    Ok(())
}

/// `2^-(n+1) Σ_{s ∈ 2^n} (δ_{s1^ω} − δ_{s0^ω})`.
pub fn standard_fsjn(n: u32) -> Result<FsMeasure> {
    check_index(n)?;
    let w = pow2_inv(n + 1);
    let neg = -w.clone();
    Ok(FsMeasure::from_atoms((0..1u64 << n).flat_map(|s| {
        [(Point::from_node(s, n, true), w.clone()), (Point::from_node(s, n, false), neg.clone())]
    })))
}

pub fn standard_sequence() -> MeasureSequence {
    let meta = SequenceMeta {
        name: "standard-fsjn".into(),
        params: json!({}),
        depth: None,
        normalized: true,
        first_index: 0,
        len: Some(MAX_INDEX as usize + 1),
    };
    MeasureSequence::new(meta, |i| Ok(Term::Atomic(standard_fsjn(i as u32)?)))
}

/// `μ_n(A) = λ(B_n ∩ A) − λ(B_n^c ∩ A)` with `B_n = {x : x(n) = 1}`, as a
/// depth-`(n+1)` density.
pub fn independent_jn(n: u32) -> Result<DensityMeasure> {
    check_index(n)?;
    let w = pow2_inv(n + 1);
    let neg = -w.clone();
    let cells = (0..1u64 << (n + 1)).map(|t| if t & 1 == 1 { w.clone() } else { neg.clone() }).collect();
    DensityMeasure::new(n + 1, cells)
}

pub fn independent_sequence() -> MeasureSequence {
    let meta = SequenceMeta {
        name: "independent".into(),
        params: json!({}),
        depth: None,
        normalized: true,
        first_index: 0,
        len: Some(MAX_INDEX as usize + 1),
    };
    MeasureSequence::new(meta, |i| Ok(Term::Density(independent_jn(i as u32)?)))
}

/// `0^n 1^ω`.
pub fn comb_point(n: usize) -> Point {
    Point::new(std::iter::repeat(false).take(n), true)
}

/// Binary digits of `n`, least significant first, followed by `0^ω`.
pub fn van_der_corput(n: u64) -> Point {
    let len = 64 - n.leading_zeros() as usize;
    Point::new((0..len).map(|i| n >> i & 1 == 1), false)
}

/// `μ_n = ½(δ_{x_n} − δ_x)`.
///
/// The points are checked over the first `horizon` indices: they must be
/// pairwise distinct, distinct from the limit, and every index in the second
/// half of the window must already agree with the limit on `depth` bits.
pub fn scattered_jn(
    points: Arc<dyn Fn(usize) -> Point + Send + Sync>,
    limit: Point,
    depth: u32,
    horizon: usize,
) -> Result<MeasureSequence> {
    let mut seen: HashMap<Point, usize> = HashMap::new();
    let want = limit.node(depth);
    for n in 0..horizon {
        let p = points(n);
        if p == limit {
            return Err(Error::Convergence(format!("point {n} equals the limit")));
        }
        if let Some(&m) = seen.get(&p) {
            return Err(Error::NotInjective { first: m, second: n });
        }
        if n >= horizon / 2 && p.node(depth) != want {
            return Err(Error::Convergence(format!(
                "point {n} leaves the depth-{depth} neighbourhood of the limit in the second half of the window"
            )));
        }
        seen.insert(p, n);
    }
    let half = rational::frac(1, 2);
    let meta = SequenceMeta {
        name: "scattered".into(),
        params: json!({ "limit": limit, "depth": depth, "horizon": horizon }),
        depth: None,
        normalized: true,
        first_index: 0,
        len: None,
    };
    Ok(MeasureSequence::new(meta, move |n| {
        Ok(Term::Atomic(FsMeasure::from_atoms([(points(n), half.clone()), (limit.clone(), -half.clone())])))
    }))
}
