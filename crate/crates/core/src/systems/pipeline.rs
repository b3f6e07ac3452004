use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jn::{scattered_jn, uds_sequence, uds_terms_for, MeasureSequence, PointStream};
use crate::rational::{self, Rational};
use crate::verify::{self, Verdict};

use super::{classify, uniformly_regular_measure, MassRule, SimpleSystem, UdGenerator, Witness};

#[derive(Clone, Debug, Serialize)]
pub struct PipelineConfig {
    /// Stage at which the system is classified; all built steps when absent.
    pub budget: Option<usize>,
    /// Levels below the perfect witness root used by the greedy points.
    pub depth: u32,
    /// Number of terms produced and verified (capped by what the witness
    /// supports).
    pub terms: usize,
    pub verify_depth: u32,
    #[serde(with = "rational::serde_str")]
    pub tol: Rational,
    pub rule: MassRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { budget: None, depth: 14, terms: 12, verify_depth: 6, tol: rational::frac(1, 10), rule: MassRule::HalfHalf }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub witness: Witness,
    pub sequence: MeasureSequence,
    pub verdict: Verdict,
}

/// Classifies the system and builds a finitely supported sequence on its
/// limit.
///
/// A scattered witness gives `½(δ_{x_n} − δ_x)` over its side points. A
/// perfect witness gives the normalized differences of empirical averages
/// over greedy points for the node measure of the configured rule,
/// restricted to the witness subtree. Either way the first terms are run
/// through the fsJN check before returning.
pub fn fsjnp_pipeline(sys: &SimpleSystem, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let budget = cfg.budget.unwrap_or(sys.steps());
    let witness = classify(sys, budget)?;
    let (sequence, n) = match &witness {
        Witness::Scattered(w) => {
            let points = Arc::new(w.points.clone());
            let len = points.len();
            let stream = Arc::new(move |i: usize| points[i.min(len - 1)].clone());
            let mut seq = scattered_jn(stream, w.limit.clone(), cfg.verify_depth, len)?;
            seq.meta_mut().name = "systems-scattered".into();
            seq.meta_mut().len = Some(len);
            (seq, cfg.terms.min(len))
        }
        Witness::Perfect(w) => {
            let staged = sys.truncated(budget)?;
            let m = uniformly_regular_measure(&staged, &cfg.rule)?;
            let levels = cfg.depth.min(w.height);
            let root_len = w.root.len() as u32;
            let mut g = UdGenerator::new(&m, &w.root, root_len + levels)?;
            let n = cfg.terms.min(uds_terms_for(g.capacity() as usize));
            if n == 0 {
                return Err(Error::Exhausted { emitted: 0, depth: root_len + levels });
            }
            let needed = (1usize << (n + 2)) - 2;
            let points = Arc::new((0..needed).map(|_| g.next_point()).collect::<Result<Vec<_>>>()?);
            let stream: PointStream = Arc::new(move |i| {
                points
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("only {needed} greedy points were generated")))
            });
            let mut seq = uds_sequence("systems-perfect", stream, Some(n));
            seq.meta_mut().params = serde_json::json!({ "root": w.root, "depth": root_len + levels, "rule": cfg.rule });
            (seq, n)
        }
    };
    let verdict = verify::check_fsjn(&sequence, cfg.verify_depth, n, &cfg.tol)?;
    Ok(PipelineOutput { witness, sequence, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::all_cylinders;
    use crate::jn::{uds_to_fsjn, van_der_corput};
    use crate::systems::{build_system, Policy};
    use num_traits::Zero;

    #[test]
    fn fixed_point_pipeline_is_scattered() {
        let sys = build_system(&Policy::FixedPoint, 32).unwrap();
        let out = fsjnp_pipeline(&sys, &PipelineConfig::default()).unwrap();
        assert!(matches!(out.witness, Witness::Scattered(_)));
        assert!(out.verdict.passed());
        for n in 8..32 {
            let term = out.sequence.term(n).unwrap();
            for u in (0..=8).flat_map(all_cylinders) {
                assert!(term.eval(&u).is_zero());
            }
        }
    }

    #[test]
    fn round_robin_matches_the_direct_construction() {
        let sys = build_system(&Policy::RoundRobin, 255).unwrap();
        let cfg = PipelineConfig { depth: 8, terms: 6, verify_depth: 4, ..Default::default() };
        let out = fsjnp_pipeline(&sys, &cfg).unwrap();
        assert!(matches!(out.witness, Witness::Perfect(_)));
        assert_eq!(out.verdict.terms, 6);
        let vdc = |k: usize| Ok(van_der_corput(k as u64));
        for i in 0..6 {
            let direct = uds_to_fsjn(&vdc, i as u32 + 1).unwrap().normalized;
            assert_eq!(out.sequence.atomic_term(i).unwrap(), direct);
        }
    }

    #[test]
    fn atomic_rule_is_reported() {
        let sys = build_system(&Policy::RoundRobin, 63).unwrap();
        let cfg = PipelineConfig { rule: MassRule::Proportional { share: rational::frac(1, 1) }, ..Default::default() };
        assert!(matches!(fsjnp_pipeline(&sys, &cfg), Err(Error::AtomicMeasure(_))));
    }

    #[test]
    fn inconclusive_budget_propagates() {
        let sys = build_system(&Policy::RoundRobin, 4).unwrap();
        assert!(matches!(fsjnp_pipeline(&sys, &PipelineConfig::default()), Err(Error::Inconclusive { .. })));
    }
}
