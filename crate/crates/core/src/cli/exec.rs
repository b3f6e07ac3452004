use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cantor::{Point, TreeMap};
use crate::error::{Error, Result};
use crate::ideal::{pseudo_union, verify_pseudo_union, IdealSet, SetsFile};
use crate::jn::{
    comb_point, disjointify, geometric_csjn, independent_sequence, scattered_jn, standard_sequence, transport,
    transport_sequence, truncated_sequence, uds_sequence, van_der_corput, DisjointConfig, MeasureSequence,
    SequenceMeta, Term, TransportOptions,
};
use crate::systems::{build_system, classify, fsjnp_pipeline, PipelineConfig, SimpleSystem};
use crate::verify::{self, Family, Format, Verdict};

use super::{
    CheckArgs, Command, DisjointInput, EmitArgs, IdealCommand, JnCommand, MapKind, RunConfig, SystemSource,
    SystemsCommand, VerifyArgs,
};

/// What a run produces.
#[derive(Clone, Debug)]
pub enum Artifact {
    /// A weak*-check report; written as CSV when asked.
    Report(Verdict),
    /// Any other JSON document.
    Document(Value),
}

impl Artifact {
    pub fn render(&self, format: Format) -> Result<String> {
        match (self, format) {
            (Artifact::Report(v), Format::Csv) => verify::to_csv(v),
            (Artifact::Report(v), Format::Json) => verify::to_json(v),
            (Artifact::Document(d), _) => Ok(serde_json::to_string_pretty(d)? + "\n"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub artifact: Artifact,
    /// Result of the check the command performs, if any.
    pub passed: Option<bool>,
    /// Output format forced by the command.
    pub format: Option<Format>,
}

impl Outcome {
    fn document(value: Value) -> Self {
        Outcome { artifact: Artifact::Document(value), passed: None, format: None }
    }

    fn checked(value: Value, passed: bool) -> Self {
        Outcome { artifact: Artifact::Document(value), passed: Some(passed), format: None }
    }
}

/// A dump of the first terms of a sequence, readable by `verify`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceDump {
    pub construction: String,
    pub params: Value,
    pub first_index: usize,
    pub terms: Vec<Term>,
}

impl SequenceDump {
    fn into_sequence(self) -> MeasureSequence {
        let normalized = self.terms.iter().all(|t| t.norm() == crate::rational::int(1));
        let meta = SequenceMeta {
            name: self.construction,
            params: self.params,
            depth: None,
            normalized,
            first_index: self.first_index,
            len: Some(self.terms.len()),
        };
        let terms = Arc::new(self.terms);
        MeasureSequence::new(meta, move |i| Ok(terms[i].clone()))
    }
}

/// `random:K` draws its sets from the run seed; an explicit `random:K:SEED`
/// wins.
fn resolve_family(s: &str, seed: u64) -> Result<Family> {
    let family: Family = s.parse()?;
    Ok(match family {
        Family::Random { count, .. } if s.matches(':').count() == 1 => Family::Random { count, seed },
        f => f,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn check_or_dump(seq: &MeasureSequence, n: usize, check: &CheckArgs, seed: u64) -> Result<Outcome> {
    if check.verify {
        let family = resolve_family(&check.family, seed)?;
        let verdict = verify::check_against(seq, check.depth, n, &family, &check.tol)?;
        let passed = verdict.passed();
        return Ok(Outcome { artifact: Artifact::Report(verdict), passed: Some(passed), format: None });
    }
    if seq.available(n) < n {
        return Err(Error::InvalidArgument(format!("{} has fewer than {n} terms", seq.meta().name)));
    }
    let dump = SequenceDump {
        construction: seq.meta().name.clone(),
        params: seq.meta().params.clone(),
        first_index: seq.meta().first_index,
        terms: (0..n).map(|i| seq.term(i)).collect::<Result<_>>()?,
    };
    Ok(Outcome::document(serde_json::to_value(dump)?))
}

fn tree_map(kind: MapKind, depth: u32, seed: u64) -> Result<TreeMap> {
    match kind {
        MapKind::Identity => TreeMap::identity(depth),
        MapKind::BitFlip => TreeMap::bit_flip(depth),
        MapKind::MergeHalves => TreeMap::merge_halves(depth),
        MapKind::CollapseRight => TreeMap::collapse_right(depth),
        MapKind::MergeQuarters => TreeMap::merge_quarters(depth),
        MapKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            TreeMap::random(depth, depth / 2, 0.3, &mut rng)
        }
    }
}

fn scattered_input(n: usize, depth: u32) -> Result<MeasureSequence> {
    let mut seq = scattered_jn(Arc::new(comb_point), Point::constant(false), depth, n)?;
    seq.meta_mut().len = Some(n);
    Ok(seq)
}

fn run_jn(cmd: &JnCommand, seed: u64) -> Result<Outcome> {
    match cmd {
        JnCommand::Standard { n, check } => check_or_dump(&standard_sequence(), *n, check, seed),
        JnCommand::Independent { n, check } => check_or_dump(&independent_sequence(), *n, check, seed),
        JnCommand::Scattered { n, converge_depth, check } => {
            check_or_dump(&scattered_input(*n, *converge_depth)?, *n, check, seed)
        }
        JnCommand::Uds { n, check } => {
            let seq = uds_sequence("van-der-corput", Arc::new(|k| Ok(van_der_corput(k as u64))), None);
            check_or_dump(&seq, *n, check, seed)
        }
        JnCommand::Transport { map, map_depth, n, check } => {
            let f = tree_map(*map, *map_depth, seed)?;
            let opts = TransportOptions::default();
            let first = transport(&f, 0, *map_depth, &opts)?;
            let seq = transport_sequence(Arc::new(f), *map_depth, opts);
            let mut out = check_or_dump(&seq, *n, check, seed)?;
            if let Artifact::Document(doc) = &mut out.artifact {
                doc["warnings"] = serde_json::to_value(&first.warnings)?;
            }
            Ok(out)
        }
        JnCommand::Disjointify { input, horizon, tol } => {
            let seq = match input {
                DisjointInput::Scattered => scattered_input(*horizon, (*horizon as u32 / 2).min(8))?,
                DisjointInput::Standard => standard_sequence(),
            };
            let cfg = DisjointConfig { horizon: *horizon, tol: tol.clone(), ..Default::default() };
            let outcome = disjointify(&seq, &cfg)?;
            let passed = outcome.is_verified();
            Ok(Outcome::checked(serde_json::to_value(&outcome)?, passed))
        }
        JnCommand::Truncate { n, check } => {
            let seq = truncated_sequence("geometric", Arc::new(geometric_csjn));
            check_or_dump(&seq, *n, check, seed)
        }
    }
}

fn load_system(source: &SystemSource) -> Result<SimpleSystem> {
    match &source.system {
        Some(path) => read_json(path),
        None => build_system(&source.policy, source.steps),
    }
}

fn run_systems(cmd: &SystemsCommand) -> Result<Outcome> {
    match cmd {
        SystemsCommand::Build { source } => Ok(Outcome::document(serde_json::to_value(load_system(source)?)?)),
        SystemsCommand::Classify { source, budget } => {
            let sys = load_system(source)?;
            let budget = budget.unwrap_or(sys.steps());
            let witness = classify(&sys, budget)?;
            Ok(Outcome::document(json!({ "budget": budget, "witness": witness })))
        }
        SystemsCommand::Pipeline { source, budget, depth, terms, verify_depth, tol, rule } => {
            let sys = load_system(source)?;
            let cfg = PipelineConfig {
                budget: *budget,
                depth: *depth,
                terms: *terms,
                verify_depth: *verify_depth,
                tol: tol.clone(),
                rule: rule.clone(),
            };
            let out = fsjnp_pipeline(&sys, &cfg)?;
            let passed = out.verdict.passed();
            let doc = json!({ "witness": out.witness, "verdict": out.verdict });
            Ok(Outcome::checked(doc, passed))
        }
    }
}

fn load_sets(path: &Path) -> Result<Vec<IdealSet>> {
    Ok(read_json::<SetsFile>(path)?.sets)
}

fn parse_schedule(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad schedule entry {t:?}"))))
        .collect()
}

#[derive(Deserialize)]
struct UnionFile {
    set: IdealSet,
    schedule: Vec<usize>,
}

fn run_ideal(cmd: &IdealCommand) -> Result<Outcome> {
    match cmd {
        IdealCommand::PseudoUnion { partition, sets, k, horizon } => {
            let sets = load_sets(sets)?;
            let out = pseudo_union(partition, &sets, *k)?;
            let report = verify_pseudo_union(partition, &sets[..*k], &out.set.members, &out.schedule, *horizon)?;
            let passed = report.passed;
            let doc = json!({
                "partition": partition.to_string(),
                "schedule": out.schedule,
                "set": out.set,
                "report": report,
            });
            Ok(Outcome::checked(doc, passed))
        }
        IdealCommand::Verify { partition, sets, union, schedule, horizon } => {
            let sets = load_sets(sets)?;
            let u: UnionFile = read_json(union)?;
            let schedule = match schedule {
                Some(s) => parse_schedule(s)?,
                None => u.schedule,
            };
            let report = verify_pseudo_union(partition, &sets, &u.set.members, &schedule, *horizon)?;
            let passed = report.passed;
            Ok(Outcome::checked(serde_json::to_value(report)?, passed))
        }
    }
}

fn run_verify(args: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let dump: SequenceDump = read_json(&args.input)?;
    let n = args.terms.unwrap_or(dump.terms.len());
    let seq = dump.into_sequence();
    let check = CheckArgs { verify: true, ..args.check.clone() };
    check_or_dump(&seq, n, &check, seed)
}

fn run_emit(args: &EmitArgs) -> Result<Outcome> {
    let raw: Value = read_json(&args.input)?;
    let report = raw.get("verdict").cloned().unwrap_or(raw);
    let verdict: Verdict = serde_json::from_value(report)?;
    Ok(Outcome { artifact: Artifact::Report(verdict), passed: None, format: args.format })
}

/// Runs the command of a config without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match &cfg.command {
        Command::Jn(cmd) => run_jn(cmd, cfg.seed),
        Command::Systems(cmd) => run_systems(cmd),
        Command::Ideal(cmd) => run_ideal(cmd),
        Command::Verify(args) => run_verify(args, cfg.seed),
        Command::Emit(args) => run_emit(args),
    }
}
