//! Batch generation of verified instances, record verification and
//! dataset statistics.

mod stats;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{sample_chain, ChainConfig, MAX_DEPTH, MIN_DEPTH};
use crate::grounding::{
    ground_chain_with, multiple_choice_question, truth_eval_question, Domain, GroundingConfig,
    InstanceRecord, LabelRatios, Lexicon, LexiconError, QuestionConfig, QuestionType,
};
use crate::oracle::{Oracle, OracleConfig, TruthValue};
use crate::quality::{
    filter_instance, CachedScorer, FilterConfig, HttpScorer, PlausibilityScorer, Reason, ReplayScorer,
    ScorerConfig, ScorerError, SubprocessScorer, Transcript, Verdict,
};
use crate::rules::LogicClass;

pub use stats::{read_records, stats, stats_from_str, stats_of, LengthStats, Stats, StatsError};
pub use verify::{verify_record, RecordVerdict};

/// One or more (domain, logic type, depth) cells with the same count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSpec {
    pub domains: Vec<Domain>,
    pub logic_types: Vec<LogicClass>,
    pub depths: Vec<usize>,
    /// Instances per cell.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestionMix {
    pub truth_eval: f64,
    pub multiple_choice: f64,
}

impl Default for QuestionMix {
    fn default() -> Self {
        QuestionMix {
            truth_eval: 0.5,
            multiple_choice: 0.5,
        }
    }
}

/// An external plausibility scorer: a command line or an HTTP endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSpec {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default)]
    pub retries: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub counts: Vec<CountSpec>,
    pub label_ratios: LabelRatios,
    pub question_mix: QuestionMix,
    pub heuristic_rate: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rule_weights: BTreeMap<String, f64>,
    /// Directory holding `<domain>.json` lexicons.
    pub lexicon_dir: PathBuf,
    /// Per-domain overrides of the lexicon path.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lexicons: BTreeMap<Domain, PathBuf>,
    pub filter: FilterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer: Option<ScorerSpec>,
    pub oracle: OracleConfig,
    pub context: GroundingConfig,
    /// Attempts per requested instance before giving up.
    pub max_attempts: usize,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            counts: Vec::new(),
            label_ratios: LabelRatios::default(),
            question_mix: QuestionMix::default(),
            heuristic_rate: 0.2,
            rule_weights: BTreeMap::new(),
            lexicon_dir: PathBuf::from("lexicons"),
            lexicons: BTreeMap::new(),
            filter: FilterConfig::default(),
            scorer: None,
            oracle: OracleConfig::default(),
            context: GroundingConfig::default(),
            max_attempts: 64,
            workers: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn unit(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<GenConfig, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: GenConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<GenConfig, ConfigError> {
        GenConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for spec in &self.counts {
            if let Some(d) = spec.depths.iter().find(|d| !(MIN_DEPTH..=MAX_DEPTH).contains(*d)) {
                return Err(ConfigError::Invalid(format!(
                    "depth {d} outside {MIN_DEPTH}..={MAX_DEPTH}"
                )));
            }
        }
        let r = &self.label_ratios;
        for (name, v) in [("True", r.true_), ("False", r.false_), ("Unknown", r.unknown)] {
            unit(&format!("label ratio {name}"), v)?;
        }
        if !close(r.true_ + r.false_ + r.unknown, 1.0) {
            return Err(ConfigError::Invalid("label ratios must sum to 1".into()));
        }
        let m = &self.question_mix;
        unit("question_mix.truth_eval", m.truth_eval)?;
        unit("question_mix.multiple_choice", m.multiple_choice)?;
        if !close(m.truth_eval + m.multiple_choice, 1.0) {
            return Err(ConfigError::Invalid("question mix must sum to 1".into()));
        }
        unit("heuristic_rate", self.heuristic_rate)?;
        unit("similarity_threshold", self.filter.similarity_threshold)?;
        unit("plausibility_threshold", self.filter.plausibility_threshold)?;
        if self.context.min_context_chars > self.context.max_context_chars {
            return Err(ConfigError::Invalid("context bounds are reversed".into()));
        }
        if self.max_attempts == 0 {
            return Err(ConfigError::Invalid("max_attempts must be positive".into()));
        }
        if let Some(s) = &self.scorer {
            if s.command.is_some() == s.url.is_some() {
                return Err(ConfigError::Invalid("scorer needs exactly one of command or url".into()));
            }
        }
        Ok(())
    }

    /// Requested count per cell, merged over specs.
    pub fn cells(&self) -> BTreeMap<Cell, usize> {
        let mut cells = BTreeMap::new();
        for spec in &self.counts {
            for &domain in &spec.domains {
                for &logic_type in &spec.logic_types {
                    for &depth in &spec.depths {
                        *cells.entry(Cell { domain, logic_type, depth }).or_default() += spec.count;
                    }
                }
            }
        }
        cells.retain(|_, n| *n > 0);
        cells
    }

    pub fn lexicon_path(&self, domain: Domain) -> PathBuf {
        self.lexicons
            .get(&domain)
            .cloned()
            .unwrap_or_else(|| self.lexicon_dir.join(format!("{domain}.json")))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable seed for a named sub-task of a run.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{tag}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub domain: Domain,
    pub logic_type: LogicClass,
    pub depth: usize,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/d{}", self.domain, self.logic_type, self.depth)
    }
}

/// Splits `n` by `weights` with the largest-remainder method; ties go to
/// the earlier weight.
pub fn quota(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = n - out.iter().sum::<usize>();
    for i in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SlotPlan {
    question_type: QuestionType,
    label: TruthValue,
}

fn plan_cell(config: &GenConfig, cell: Cell, n: usize) -> Vec<SlotPlan> {
    let mix = quota(n, &[config.question_mix.truth_eval, config.question_mix.multiple_choice]);
    let r = &config.label_ratios;
    let labels = quota(mix[0], &[r.true_, r.false_, r.unknown]);
    let mut plan = Vec::with_capacity(n);
    for (label, k) in [TruthValue::True, TruthValue::False, TruthValue::Unknown].into_iter().zip(labels) {
        plan.extend(std::iter::repeat_n(SlotPlan { question_type: QuestionType::TruthEval, label }, k));
    }
    plan.extend(
        std::iter::repeat_n(
            SlotPlan {
                question_type: QuestionType::MultipleChoice,
                label: TruthValue::True,
            },
            mix[1],
        ),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &format!("{cell}/plan")));
    plan.shuffle(&mut rng);
    plan
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Chain,
    Grounding,
    Question,
    Filter,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub cell: Cell,
    pub slot: usize,
    pub attempt: usize,
    pub seed: u64,
    pub stage: Stage,
    pub reason: String,
    /// Failed filter checks, for filter rejections.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub attempts: usize,
    pub accepted: usize,
    /// Rejections per pipeline stage.
    pub rejected: BTreeMap<Stage, usize>,
    /// Filter rejections per failed check.
    pub filter_checks: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GenConfig,
    pub config_hash: String,
    pub seed: u64,
    pub instances: usize,
    /// Hex SHA-256 of the JSONL output.
    pub output_sha256: String,
    pub lexicon_sha256: BTreeMap<Domain, String>,
    pub rule_histogram: BTreeMap<String, usize>,
    pub filter_stats: FilterStats,
    pub rejections: Vec<Rejection>,
    /// Plausibility scores seen during the run, for replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer_transcript: Option<Transcript>,
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("lexicon for {domain}: {source}")]
    Lexicon { domain: Domain, source: LexiconError },
    #[error("{cell} slot {slot}: no acceptable instance after {attempts} attempts (last: {last})")]
    Unreachable {
        cell: Cell,
        slot: usize,
        attempts: usize,
        last: String,
    },
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("manifest does not match: {0}")]
    Replay(String),
}

pub struct Generated {
    pub records: Vec<InstanceRecord>,
    pub manifest: Manifest,
}

impl Generated {
    pub fn jsonl(&self) -> String {
        to_jsonl(&self.records)
    }
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

enum External {
    Subprocess(SubprocessScorer),
    Http(HttpScorer),
}

impl PlausibilityScorer for External {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        match self {
            External::Subprocess(s) => s.score(text),
            External::Http(s) => s.score(text),
        }
    }
}

fn external(spec: &ScorerSpec) -> Result<External, ConfigError> {
    let mut config = ScorerConfig::default();
    if let Some(t) = spec.timeout_ms {
        config.timeout_ms = t;
    }
    if let Some(r) = spec.retries {
        config.retries = r;
    }
    if let Some(url) = &spec.url {
        return Ok(External::Http(HttpScorer { url: url.clone(), config }));
    }
    let cmd = spec.command.as_deref().unwrap_or_default();
    SubprocessScorer::from_command_line(cmd, config)
        .map(External::Subprocess)
        .ok_or_else(|| ConfigError::Invalid("scorer command is empty".into()))
}

struct Ctx<'a> {
    config: &'a GenConfig,
    lexicons: &'a BTreeMap<Domain, Lexicon>,
    scorer: Option<&'a dyn PlausibilityScorer>,
    oracle: Oracle,
    chain: ChainConfig,
    question: QuestionConfig,
}

enum SlotOutcome {
    Done(Box<InstanceRecord>, Vec<Rejection>),
    Failed(GenerateError, Vec<Rejection>),
}

fn reason_name(r: &Reason) -> &'static str {
    match r {
        Reason::LexicalSimilarity { .. } => "lexical_similarity",
        Reason::Plausibility { .. } => "plausibility",
        Reason::ScorerFailure { .. } => "scorer_failure",
    }
}

fn run_slot(ctx: &Ctx, cell: Cell, slot: usize, plan: SlotPlan) -> SlotOutcome {
    let lexicon = &ctx.lexicons[&cell.domain];
    let mut rejections = Vec::new();
    for attempt in 0..ctx.config.max_attempts {
        let seed = derive_seed(ctx.config.seed, &format!("{cell}/{slot}/{attempt}"));
        let mut reject = |stage: Stage, reason: String, checks: Vec<String>| {
            rejections.push(Rejection {
                cell,
                slot,
                attempt,
                seed,
                stage,
                reason,
                checks,
            });
        };
        let chain = match sample_chain(cell.depth, cell.logic_type, seed, &ctx.chain) {
            Ok(c) => c,
            Err(e) => {
                reject(Stage::Chain, e.to_string(), Vec::new());
                continue;
            }
        };
        let instance = match ground_chain_with(&chain, lexicon, seed, &ctx.config.context, &ctx.oracle) {
            Ok(i) => i,
            Err(e) => {
                reject(Stage::Grounding, e.to_string(), Vec::new());
                continue;
            }
        };
        let qseed = derive_seed(seed, "question");
        let question = match plan.question_type {
            QuestionType::TruthEval => {
                truth_eval_question(&instance, lexicon, plan.label, qseed, &ctx.question, &ctx.oracle)
            }
            QuestionType::MultipleChoice => {
                multiple_choice_question(&instance, lexicon, qseed, &ctx.question, &ctx.oracle)
            }
        };
        let question = match question {
            Ok(q) => q,
            Err(e) => {
                reject(Stage::Question, e.to_string(), Vec::new());
                continue;
            }
        };
        match filter_instance(&instance, ctx.scorer, &ctx.config.filter) {
            Ok(d) if d.verdict == Verdict::Accepted => {}
            Ok(d) => {
                let reasons: Vec<String> = d
                    .reasons
                    .iter()
                    .map(|r| serde_json::to_string(r).expect("reason serializes"))
                    .collect();
                let checks = d.reasons.iter().map(|r| reason_name(r).to_string()).collect();
                reject(Stage::Filter, reasons.join("; "), checks);
                continue;
            }
            Err(e) => {
                reject(Stage::Filter, e.to_string(), Vec::new());
                continue;
            }
        }
        let record = InstanceRecord::new(&instance, &question);
        let verdict = verify_record(&record, &ctx.oracle);
        if !verdict.ok() {
            reject(Stage::Verify, verdict.problems.join("; "), Vec::new());
            continue;
        }
        return SlotOutcome::Done(Box::new(record), rejections);
    }
    let last = rejections.last().map(|r| r.reason.clone()).unwrap_or_default();
    SlotOutcome::Failed(
        GenerateError::Unreachable {
            cell,
            slot,
            attempts: ctx.config.max_attempts,
            last,
        },
        rejections,
    )
}

fn load_lexicons(config: &GenConfig) -> Result<(BTreeMap<Domain, Lexicon>, BTreeMap<Domain, String>), GenerateError> {
    let mut lexicons = BTreeMap::new();
    let mut hashes = BTreeMap::new();
    for cell in config.cells().keys() {
        if lexicons.contains_key(&cell.domain) {
            continue;
        }
        let path = config.lexicon_path(cell.domain);
        let fail = |source| GenerateError::Lexicon { domain: cell.domain, source };
        let text = std::fs::read_to_string(&path).map_err(|source| {
            fail(LexiconError::Io {
                path: path.display().to_string(),
                source,
            })
        })?;
        let lex = Lexicon::from_json(&text).map_err(fail)?;
        if lex.domain != cell.domain {
            return Err(fail(LexiconError::Invalid {
                path: "domain".into(),
                message: format!("file declares domain {}", lex.domain),
            }));
        }
        hashes.insert(cell.domain, sha256_hex(text.as_bytes()));
        lexicons.insert(cell.domain, lex);
    }
    Ok((lexicons, hashes))
}

/// Generates the configured dataset, scoring heuristic steps with the
/// configured external scorer if any.
pub fn generate(config: &GenConfig) -> Result<Generated, GenerateError> {
    config.validate()?;
    match &config.scorer {
        None => generate_with(config, None),
        Some(spec) => {
            let cached = CachedScorer::new(external(spec)?);
            let mut out = generate_with(config, Some(&cached))?;
            out.manifest.scorer_transcript = Some(cached.transcript());
            Ok(out)
        }
    }
}

/// Regenerates a dataset from its manifest, answering plausibility
/// queries from the recorded transcript.
pub fn replay(manifest: &Manifest) -> Result<Generated, GenerateError> {
    if manifest.config.hash() != manifest.config_hash {
        return Err(GenerateError::Replay("config hash differs from the recorded one".into()));
    }
    let mut out = match &manifest.scorer_transcript {
        None => generate_with(&manifest.config, None)?,
        Some(t) => {
            let scorer = ReplayScorer::new(t.clone());
            let mut out = generate_with(&manifest.config, Some(&scorer))?;
            out.manifest.scorer_transcript = Some(t.clone());
            out
        }
    };
    if out.manifest.lexicon_sha256 != manifest.lexicon_sha256 {
        return Err(GenerateError::Replay("lexicon files changed".into()));
    }
    if out.manifest.output_sha256 != manifest.output_sha256 {
        return Err(GenerateError::Replay("output differs from the recorded dataset".into()));
    }
    out.manifest.scorer_transcript = manifest.scorer_transcript.clone();
    Ok(out)
}

pub fn generate_with(config: &GenConfig, scorer: Option<&dyn PlausibilityScorer>) -> Result<Generated, GenerateError> {
    config.validate()?;
    let (lexicons, lexicon_sha256) = load_lexicons(config)?;
    let ctx = Ctx {
        config,
        lexicons: &lexicons,
        scorer,
        oracle: Oracle::new(config.oracle.clone()),
        chain: ChainConfig {
            heuristic_rate: config.heuristic_rate,
            rule_weights: config.rule_weights.clone(),
            ..ChainConfig::default()
        },
        question: QuestionConfig {
            ratios: config.label_ratios.clone(),
            ..QuestionConfig::default()
        },
    };
    let jobs: Vec<(Cell, usize, SlotPlan)> = config
        .cells()
        .into_iter()
        .flat_map(|(cell, n)| {
            plan_cell(config, cell, n)
                .into_iter()
                .enumerate()
                .map(move |(slot, plan)| (cell, slot, plan))
        })
        .collect();
    let run = || -> Vec<SlotOutcome> {
        jobs.par_iter()
            .map(|&(cell, slot, plan)| run_slot(&ctx, cell, slot, plan))
            .collect()
    };
    let outcomes = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| run())
    } else {
        run()
    };

    let mut records = Vec::new();
    let mut rejections = Vec::new();
    let mut failure = None;
    for outcome in outcomes {
        match outcome {
            SlotOutcome::Done(r, rej) => {
                records.push(*r);
                rejections.extend(rej);
            }
            SlotOutcome::Failed(e, rej) => {
                rejections.extend(rej);
                failure.get_or_insert(e);
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(GenerateError::DuplicateId(w[0].id.clone()));
    }

    let mut rule_histogram = BTreeMap::new();
    for r in &records {
        for s in &r.chain {
            *rule_histogram.entry(s.rule_id.clone()).or_default() += 1;
        }
    }
    let mut filter_stats = FilterStats {
        attempts: records.len() + rejections.len(),
        accepted: records.len(),
        ..FilterStats::default()
    };
    for r in &rejections {
        *filter_stats.rejected.entry(r.stage).or_default() += 1;
        for c in &r.checks {
            *filter_stats.filter_checks.entry(c.clone()).or_default() += 1;
        }
    }
    let jsonl = to_jsonl(&records);
    let manifest = Manifest {
        config: config.clone(),
        config_hash: config.hash(),
        seed: config.seed,
        instances: records.len(),
        output_sha256: sha256_hex(jsonl.as_bytes()),
        lexicon_sha256,
        rule_histogram,
        filter_stats,
        rejections,
        scorer_transcript: None,
    };
    Ok(Generated { records, manifest })
}

/// Verifies records in parallel; verdicts keep the input order.
pub fn verify_records(records: &[InstanceRecord], oracle: &Oracle) -> Vec<RecordVerdict> {
    records.par_iter().map(|r| verify_record(r, oracle)).collect()
}

#[cfg(test)]
mod tests;
