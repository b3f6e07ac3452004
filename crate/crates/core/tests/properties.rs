use jnlab::cantor::{Clopen, NodeSet, Point, TreeMap};
use jnlab::ideal::{pseudo_union, ratio, verify_pseudo_union, Certificate, IdealSet, Members, WeightedPartition};
use jnlab::measures::{DensityMeasure, FsMeasure};
use jnlab::rational::frac;
use jnlab::systems::{uniformly_regular_measure, MassRule, Policy, SimpleSystem};
use jnlab::Rational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn clopen(depth: u32) -> impl Strategy<Value = Clopen> {
    proptest::collection::vec(any::<bool>(), 1usize << depth).prop_map(move |bits| {
        let codes = bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i as u64);
        Clopen::from_nodes(NodeSet::from_codes(depth, codes))
    })
}

fn clopen_pair() -> impl Strategy<Value = (Clopen, Clopen, Clopen)> {
    (0u32..=8, 0u32..=8, 0u32..=8).prop_flat_map(|(a, b, c)| (clopen(a), clopen(b), clopen(c)))
}

fn point() -> impl Strategy<Value = Point> {
    (proptest::collection::vec(any::<bool>(), 0..10), any::<bool>()).prop_map(|(p, t)| Point::new(p, t))
}

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=12).prop_map(|(p, q)| frac(p, q))
}

fn measure() -> impl Strategy<Value = FsMeasure> {
    proptest::collection::vec((point(), rational()), 0..12).prop_map(FsMeasure::from_atoms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clopen_boolean_laws((a, b, c) in clopen_pair()) {
        prop_assert_eq!(a.meet(&b), b.meet(&a));
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert_eq!(a.meet(&b.join(&c)), a.meet(&b).join(&a.meet(&c)));
        prop_assert_eq!(a.join(&b.meet(&c)), a.join(&b).meet(&a.join(&c)));
        prop_assert_eq!(a.join(&a.meet(&b)), a.clone());
        prop_assert_eq!(a.join(&b).complement(), a.complement().meet(&b.complement()));
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert!(a.meet(&a.complement()).is_empty());
        prop_assert!(a.join(&a.complement()).is_full());
        prop_assert_eq!(a.difference(&b), a.meet(&b.complement()));
        prop_assert_eq!(a.is_subset(&b), a.meet(&b) == a);
        prop_assert_eq!(a.lambda() + b.lambda(), a.join(&b).lambda() + a.meet(&b).lambda());
    }

    #[test]
    fn clopens_are_canonical(a in (0u32..=8).prop_flat_map(clopen)) {
        let back = Clopen::from_compact(&a.to_compact()).unwrap();
        prop_assert_eq!(&back, &a);
        let words = a.words();
        let again = Clopen::from_words(a.depth(), words.iter().map(String::as_str)).unwrap();
        prop_assert_eq!(&again, &a);
        prop_assert_eq!(Clopen::from_nodes(a.refined(a.depth() + 2)), a);
    }

    #[test]
    fn measures_are_canonical(m in measure()) {
        let again = FsMeasure::from_atoms(m.atoms().map(|(p, w)| (p.clone(), w.clone())));
        prop_assert_eq!(&again, &m);
        prop_assert!(m.atoms().all(|(_, w)| !w.is_zero()));
        let doubled = FsMeasure::from_atoms(m.atoms().chain(m.atoms()).map(|(p, w)| (p.clone(), w.clone())));
        prop_assert_eq!(doubled, m.scale(&frac(2, 1)));
    }

    #[test]
    fn eval_is_additive(m in measure(), (a, b, _) in clopen_pair()) {
        prop_assert_eq!(m.eval(&a.join(&b)) + m.eval(&a.meet(&b)), m.eval(&a) + m.eval(&b));
        prop_assert_eq!(m.eval(&a) + m.eval(&a.complement()), m.total_mass());
        prop_assert!(m.eval(&Clopen::empty()).is_zero());
        prop_assert!(m.eval(&a).abs() <= m.norm());
    }

    #[test]
    fn norm_is_a_norm(m in measure(), n in measure(), c in rational()) {
        prop_assert!(m.plus(&n).norm() <= m.norm() + n.norm());
        prop_assert_eq!(m.scale(&c).norm(), c.abs() * m.norm());
        prop_assert_eq!(m.minus(&m).norm(), Rational::zero());
    }

    #[test]
    fn restriction_splits_the_measure(m in measure(), a in (0u32..=6).prop_flat_map(clopen)) {
        let inside = m.restrict(&a);
        let outside = m.restrict(&a.complement());
        prop_assert!(inside.disjoint_from(&outside));
        prop_assert_eq!(inside.plus(&outside), m.clone());
        prop_assert_eq!(inside.norm() + outside.norm(), m.norm());
        prop_assert_eq!(inside.eval(&a), m.eval(&a));
    }

    #[test]
    fn density_refinement_keeps_values(
        (d, cells) in (0u32..=4).prop_flat_map(|d| (Just(d), proptest::collection::vec(rational(), 1usize << d))),
        extra in 0u32..=3,
        a in (0u32..=4).prop_flat_map(clopen),
    ) {
        let m = DensityMeasure::new(d, cells).unwrap();
        let r = m.refine(d + extra).unwrap();
        prop_assert_eq!(r.eval(&a), m.eval(&a));
        prop_assert_eq!(r.total_variation(), m.total_variation());
        prop_assert_eq!(r.total_mass(), m.total_mass());
    }

    #[test]
    fn images_commute_with_projection(seed in any::<u64>(), depth in 2u32..=7, merge in 0u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = TreeMap::random(depth, merge, 0.3, &mut rng).unwrap();
        for d in 1..=depth {
            for t in f.domain().level(d).iter() {
                let up = f.image(t, d).unwrap();
                prop_assert_eq!(f.image(t >> 1, d - 1), Some(up >> 1));
                prop_assert!(f.codomain().contains(up, d));
            }
        }
    }

    #[test]
    fn node_measures_are_compatible(splits in splits(), p in 0i64..=8) {
        let sys = SimpleSystem::from_splits(Policy::Custom { splits: splits.clone() }, splits.clone()).unwrap();
        for rule in [MassRule::HalfHalf, MassRule::Proportional { share: frac(p, 8) }] {
            let m = uniformly_regular_measure(&sys, &rule).unwrap();
            prop_assert_eq!(m.check_compatibility(splits.len()).unwrap(), None);
        }
    }

    #[test]
    fn bonding_maps_follow_the_coding(splits in splits()) {
        let sys = SimpleSystem::from_splits(Policy::Custom { splits: splits.clone() }, splits.clone()).unwrap();
        prop_assert!(sys.check_bonding_law(splits.len()).unwrap().is_empty());
        let u = splits.len();
        for i in 0..=u {
            for t in 0..u {
                let mid = sys.bond(t + 1, u, i).unwrap();
                prop_assert_eq!(sys.bond(t, u, i).unwrap(), sys.bond(t, t + 1, mid).unwrap());
            }
        }
    }

    #[test]
    fn pseudo_unions_are_sound(family in ideal_family()) {
        let (m, sets) = family;
        let p = WeightedPartition::blocks(m);
        let out = pseudo_union(&p, &sets, sets.len()).unwrap();
        let horizon = 200 * m;
        let report = verify_pseudo_union(&p, &sets, &out.set.members, &out.schedule, horizon).unwrap();
        prop_assert!(report.passed, "{:?}", report.violations);
        let k = out.schedule.len();
        for n in out.schedule[k - 1] + 1..200 {
            prop_assert!(ratio(&p, &out.set.members, n) < frac(1, k as i64));
        }
    }
}

/// Split indices of a system with up to 24 steps; step `t` splits a point of
/// the `t + 1`-point stage.
fn splits() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(any::<prop::sample::Index>(), 0..24)
        .prop_map(|ix| ix.iter().enumerate().map(|(t, i)| i.index(t + 1)).collect())
}

/// Block partitions of size `m` with up to 3 residue classes, each capped at
/// a random cell and certified by a step bound of `1/m`.
fn ideal_family() -> impl Strategy<Value = (u64, Vec<IdealSet>)> {
    (prop::sample::select(vec![8u64, 16]), proptest::collection::vec((0u64..16, 1usize..60), 1..=3)).prop_map(
        |(m, parts)| {
            let sets = parts
                .into_iter()
                .map(|(r, until)| IdealSet {
                    members: Members::Residue { modulus: m, residue: r % m, below_cell: Some(until) },
                    certificate: Certificate::Step { value: frac(1, m as i64), until },
                })
                .collect();
            (m, sets)
        },
    )
}
