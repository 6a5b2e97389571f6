use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::chain::StepType;
use crate::grounding::{Answer, Domain, InstanceRecord, QuestionType};
use crate::rules::LogicClass;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot read instances: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub min: Option<usize>,
    pub max: Option<usize>,
    pub mean: Option<f64>,
}

impl LengthStats {
    pub(crate) fn of(values: &[usize]) -> LengthStats {
        if values.is_empty() {
            return LengthStats::default();
        }
        LengthStats {
            min: values.iter().min().copied(),
            max: values.iter().max().copied(),
            mean: Some(values.iter().sum::<usize>() as f64 / values.len() as f64),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub instances: usize,
    pub by_domain: BTreeMap<Domain, usize>,
    pub by_logic_type: BTreeMap<LogicClass, usize>,
    pub by_depth: BTreeMap<usize, usize>,
    pub by_source: BTreeMap<String, usize>,
    pub by_question_type: BTreeMap<QuestionType, usize>,
    pub by_answer: BTreeMap<String, usize>,
    pub depth: LengthStats,
    /// In characters.
    pub context_length: LengthStats,
    pub heuristic_steps: usize,
    pub rule_histogram: BTreeMap<String, usize>,
}

fn source(image_ref: &str) -> String {
    image_ref.rsplit_once('/').map_or(image_ref, |(dir, _)| dir).to_string()
}

fn answer_key(a: &Answer) -> String {
    match a {
        Answer::Label(v) => v.as_str().to_string(),
        Answer::Index(_) => "option".to_string(),
    }
}

pub fn stats_of(records: &[InstanceRecord]) -> Stats {
    let mut s = Stats {
        instances: records.len(),
        ..Stats::default()
    };
    for r in records {
        *s.by_domain.entry(r.domain).or_default() += 1;
        *s.by_logic_type.entry(r.logic_type).or_default() += 1;
        *s.by_depth.entry(r.depth).or_default() += 1;
        *s.by_source.entry(source(&r.image_ref)).or_default() += 1;
        *s.by_question_type.entry(r.question_type).or_default() += 1;
        *s.by_answer.entry(answer_key(&r.answer)).or_default() += 1;
        for step in &r.chain {
            *s.rule_histogram.entry(step.rule_id.clone()).or_default() += 1;
            if step.step_type == StepType::Heuristic {
                s.heuristic_steps += 1;
            }
        }
    }
    s.depth = LengthStats::of(&records.iter().map(|r| r.depth).collect::<Vec<_>>());
    s.context_length = LengthStats::of(&records.iter().map(|r| r.context.chars().count()).collect::<Vec<_>>());
    s
}

/// Reads JSONL instances, one per line; blank lines are skipped.
pub fn read_records(reader: impl BufRead) -> Result<Vec<InstanceRecord>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(&line).map_err(|e| StatsError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn stats(reader: impl BufRead) -> Result<Stats, StatsError> {
    Ok(stats_of(&read_records(reader)?))
}

pub fn stats_from_str(text: &str) -> Result<Stats, StatsError> {
    stats(text.as_bytes())
}
