use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::cantor::{all_cylinders, Clopen, Point, TreeMap};
use crate::error::{Error, Result};
use crate::measures::FsMeasure;
use crate::rational::{self, pow2_inv, Rational};

use super::{MeasureSequence, SequenceMeta, Term};

#[derive(Clone, Debug, Serialize)]
pub struct TransportOptions {
    /// Domain cylinders up to this depth are tested for overlap.
    pub check_depth: u32,
    /// Overlap measure above which a warning is attached.
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { check_depth: 3, bound: Rational::from_integer(BigInt::from(0)) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapWarning {
    pub clopen: Clopen,
    #[serde(with = "rational::serde_str")]
    pub overlap: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transported {
    pub measure: FsMeasure,
    pub warnings: Vec<OverlapWarning>,
}

/// `ν_n = 2^-(n+1) Σ_{s ∈ 2^n} (δ_{y_s^1} − δ_{y_s^0})` where `y_s^i` is the
/// selected preimage of `s i^ω` at depth `depth`.
///
/// The overlap `λ(f[U] ∩ f[Y∖U])` of every domain cylinder up to the
/// configured depth is measured at the working depth; cylinders above the
/// bound are returned as warnings next to the measure.
pub fn transport(f: &TreeMap, n: u32, depth: u32, opts: &TransportOptions) -> Result<Transported> {
    if n >= depth {
        return Err(Error::InvalidArgument(format!("transport index {n} must be below the preimage depth {depth}")));
    }
    f.domain().check_depth(depth)?;
    let w = pow2_inv(n + 1);
    let mut atoms = Vec::with_capacity(2usize << n);
    for s in 0..1u64 << n {
        for (bit, sign) in [(true, w.clone()), (false, -w.clone())] {
            let target = Point::from_node(s, n, bit);
            atoms.push((f.select_preimage(&target, depth)?, sign));
        }
    }
    let measure = FsMeasure::from_atoms(atoms);
    let top = f.depth();
    let mut warnings = Vec::new();
    for u in all_cylinders(opts.check_depth.min(top)) {
        let overlap = f.overlap_measure(&u, top)?;
        if overlap > opts.bound {
            warnings.push(OverlapWarning { clopen: u, overlap });
        }
    }
    Ok(Transported { measure, warnings })
}

/// `|S_n| / 2^n`, where `S_n` is the set of depth-`n` codomain nodes in both
/// `f[U]` and `f[Y∖U]`. Pairs `y_s^0, y_s^1` over any other node fall on the
/// same side of `U` and cancel, so this bounds `|ν_n(U)|`.
pub fn transport_bound(f: &TreeMap, u: &Clopen, n: u32) -> Result<Rational> {
    let s = f.overlap_nodes(u, n)?;
    Ok(Rational::new(BigInt::from(s.len()), BigInt::from(1) << n as usize))
}

/// Terms `n < depth` of the transported sequence.
pub fn transport_sequence(f: Arc<TreeMap>, depth: u32, opts: TransportOptions) -> MeasureSequence {
    let meta = SequenceMeta {
        name: "transport".into(),
        params: json!({ "depth": depth, "options": &opts }),
        depth: None,
        normalized: true,
        first_index: 0,
        len: Some(depth as usize),
    };
    MeasureSequence::new(meta, move |i| Ok(Term::Atomic(transport(&f, i as u32, depth, &opts)?.measure)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::all_clopens;
    use crate::jn::standard_fsjn;
    use crate::rational::frac;
    use num_traits::{Signed, Zero};

    #[test]
    fn identity_reproduces_the_standard_terms() {
        let id = TreeMap::identity(8).unwrap();
        for n in 0..7 {
            let t = transport(&id, n, 8, &TransportOptions::default()).unwrap();
            assert_eq!(t.measure, standard_fsjn(n).unwrap());
            assert!(t.warnings.is_empty());
        }
        let t1 = transport(&id, 1, 8, &TransportOptions::default()).unwrap();
        assert_eq!(t1.measure.eval(&Clopen::cylinder("01").unwrap()), frac(1, 4));
    }

    #[test]
    fn bit_flip_swaps_preimages() {
        let flip = TreeMap::bit_flip(6).unwrap();
        let t = transport(&flip, 0, 3, &TransportOptions::default()).unwrap();
        let expected = FsMeasure::from_atoms([(Point::constant(false), frac(1, 2)), (Point::constant(true), frac(-1, 2))]);
        assert_eq!(t.measure, expected);
    }

    #[test]
    fn overlapping_maps_are_flagged() {
        let mq = TreeMap::merge_quarters(6).unwrap();
        let err = transport(&mq, 1, 3, &TransportOptions::default());
        assert!(matches!(err, Err(Error::NoPreimage { .. })));
        let cr = TreeMap::collapse_right(6).unwrap();
        assert!(transport(&cr, 0, 3, &TransportOptions::default()).is_err());
    }

    #[test]
    fn bound_holds_for_random_maps() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let f = TreeMap::random(7, 4, 0.3, &mut rng).unwrap();
            for n in 0..4 {
                let nu = transport(&f, n, n + 1, &TransportOptions::default()).unwrap().measure;
                assert_eq!(nu.norm(), frac(1, 1));
                for u in all_clopens(n.min(3)) {
                    assert!(nu.eval(&u).abs() <= transport_bound(&f, &u, n).unwrap());
                }
            }
        }
        let auto = TreeMap::random(7, 0, 0.0, &mut rng).unwrap();
        for n in 0..5 {
            let nu = transport(&auto, n, 7, &TransportOptions::default()).unwrap();
            assert!(nu.warnings.is_empty());
            for u in all_clopens(n.min(3)) {
                assert!(nu.measure.eval(&u).is_zero());
            }
        }
    }
}
