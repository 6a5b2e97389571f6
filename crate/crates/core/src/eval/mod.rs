//! Scoring predictions against gold answers and chains, and assembling
//! accuracy tables by domain, logic type and depth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grounding::{Answer, Domain, InstanceRecord};
use crate::quality::jaccard;
use crate::rules::LogicClass;
use crate::solver::{PredictionRecord, Predicted};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("prediction {0:?} has no gold instance")]
    Dangling(String),
    #[error("prediction {0:?} appears more than once")]
    Duplicate(String),
}

/// Exact match after label normalisation; an unresolved prediction is
/// always wrong.
pub fn score_answer(pred: &Predicted, gold: &Answer) -> bool {
    matches!(pred, Predicted::Answer(a) if a == gold)
}

/// [`score_answer`] over label strings, case-insensitively.
pub fn score_label(pred: &str, gold: &str) -> Result<bool, EvalError> {
    let p = Predicted::parse_label(pred).ok_or_else(|| EvalError::UnknownLabel(pred.to_string()))?;
    let g = match Predicted::parse_label(gold) {
        Some(Predicted::Answer(a)) => a,
        _ => return Err(EvalError::UnknownLabel(gold.to_string())),
    };
    Ok(score_answer(&p, &g))
}

fn token_seq(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn lcs(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 of two texts over word tokens.
pub fn rouge_l_pair(pred: &str, gold: &str) -> f64 {
    let p = token_seq(pred);
    let g = token_seq(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    let l = lcs(&p, &g);
    if l == 0 {
        return 0.0;
    }
    let precision = l as f64 / p.len() as f64;
    let recall = l as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean of a pairwise score over index-aligned steps; unmatched steps on
/// either side score 0.
fn aligned(pred: &[String], gold: &[String], score: impl Fn(&str, &str) -> f64) -> f64 {
    let n = pred.len().max(gold.len());
    if n == 0 {
        return 1.0;
    }
    let total: f64 = pred.iter().zip(gold).map(|(p, g)| score(p, g)).sum();
    total / n as f64
}

pub fn rouge_l(pred_steps: &[String], gold_steps: &[String]) -> f64 {
    aligned(pred_steps, gold_steps, rouge_l_pair)
}

pub fn step_jaccard(pred_steps: &[String], gold_steps: &[String]) -> f64 {
    aligned(pred_steps, gold_steps, jaccard)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepScores {
    pub rouge_l: f64,
    pub jaccard: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub predicted: Predicted,
    pub gold: Answer,
    pub answer_correct: bool,
    pub step_scores: StepScores,
}

/// Step texts to compare: natural language when the prediction has it
/// for every step, formulas otherwise.
fn step_texts(pred: &PredictionRecord, gold: &InstanceRecord) -> (Vec<String>, Vec<String>) {
    let all_nl = !pred.trace.is_empty() && pred.trace.iter().all(|s| s.conclusion_nl.is_some());
    if all_nl {
        (
            pred.trace.iter().map(|s| s.conclusion_nl.clone().unwrap_or_default()).collect(),
            gold.chain.iter().map(|s| s.conclusion_nl.clone()).collect(),
        )
    } else {
        (
            pred.trace.iter().map(|s| s.conclusion_formal.clone()).collect(),
            gold.chain.iter().map(|s| s.conclusion_formal.clone()).collect(),
        )
    }
}

pub fn evaluate_one(pred: &PredictionRecord, gold: &InstanceRecord) -> EvalRecord {
    let (p, g) = step_texts(pred, gold);
    EvalRecord {
        id: pred.id.clone(),
        predicted: pred.answer,
        gold: gold.answer,
        answer_correct: score_answer(&pred.answer, &gold.answer),
        step_scores: StepScores {
            rouge_l: rouge_l(&p, &g),
            jaccard: step_jaccard(&p, &g),
        },
    }
}

/// Scores every prediction against its gold instance, in prediction order.
pub fn evaluate(gold: &[InstanceRecord], preds: &[PredictionRecord]) -> Result<Vec<EvalRecord>, EvalError> {
    let by_id: BTreeMap<&str, &InstanceRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(preds.len());
    for p in preds {
        if !seen.insert(p.id.as_str()) {
            return Err(EvalError::Duplicate(p.id.clone()));
        }
        let g = by_id.get(p.id.as_str()).ok_or_else(|| EvalError::Dangling(p.id.clone()))?;
        pairs.push((p, *g));
    }
    Ok(pairs.par_iter().map(|(p, g)| evaluate_one(p, g)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub domain: Domain,
    pub logic_type: LogicClass,
    pub depth: usize,
}

impl From<&InstanceRecord> for InstanceMeta {
    fn from(r: &InstanceRecord) -> Self {
        InstanceMeta {
            domain: r.domain,
            logic_type: r.logic_type,
            depth: r.depth,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub count: usize,
    pub correct: usize,
    /// Percentage, absent for empty cells.
    pub accuracy: Option<f64>,
}

impl Cell {
    fn add(&mut self, correct: bool) {
        self.count += 1;
        self.correct += usize::from(correct);
        self.accuracy = Some(100.0 * self.correct as f64 / self.count as f64);
    }

    fn render(&self) -> String {
        match self.accuracy {
            Some(a) => format!("{a:.1}"),
            None => "\u{2014}".to_string(),
        }
    }
}

pub const DEPTH_BUCKETS: [(&str, usize, usize); 4] = [("2-3", 2, 3), ("4-5", 4, 5), ("6-7", 6, 7), ("8-9", 8, 9)];

pub fn depth_bucket(depth: usize) -> &'static str {
    DEPTH_BUCKETS
        .iter()
        .find(|(_, lo, hi)| (*lo..=*hi).contains(&depth))
        .map(|(name, _, _)| *name)
        .unwrap_or("other")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Cell,
    /// Logic type, then domain.
    pub cells: BTreeMap<LogicClass, BTreeMap<Domain, Cell>>,
    pub by_logic_type: BTreeMap<LogicClass, Cell>,
    pub by_domain: BTreeMap<Domain, Cell>,
    pub by_depth: BTreeMap<String, Cell>,
    pub mean_rouge_l: Option<f64>,
    pub mean_jaccard: Option<f64>,
    /// Scores computed by other tools, merged under their own names.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, serde_json::Value>,
}

pub fn aggregate_report(
    records: &[EvalRecord],
    instances: &BTreeMap<String, InstanceMeta>,
) -> Result<Report, EvalError> {
    let mut report = Report::default();
    for l in LogicClass::ALL {
        report.by_logic_type.insert(l, Cell::default());
        let row = report.cells.entry(l).or_default();
        for d in Domain::ALL {
            row.insert(d, Cell::default());
        }
    }
    for d in Domain::ALL {
        report.by_domain.insert(d, Cell::default());
    }
    for (name, _, _) in DEPTH_BUCKETS {
        report.by_depth.insert(name.to_string(), Cell::default());
    }
    let mut rouge = 0.0;
    let mut jac = 0.0;
    for r in records {
        let meta = instances.get(&r.id).ok_or_else(|| EvalError::Dangling(r.id.clone()))?;
        let ok = r.answer_correct;
        report.overall.add(ok);
        report.cells.get_mut(&meta.logic_type).expect("row").get_mut(&meta.domain).expect("cell").add(ok);
        report.by_logic_type.get_mut(&meta.logic_type).expect("row").add(ok);
        report.by_domain.get_mut(&meta.domain).expect("column").add(ok);
        report.by_depth.entry(depth_bucket(meta.depth).to_string()).or_default().add(ok);
        rouge += r.step_scores.rouge_l;
        jac += r.step_scores.jaccard;
    }
    if !records.is_empty() {
        report.mean_rouge_l = Some(rouge / records.len() as f64);
        report.mean_jaccard = Some(jac / records.len() as f64);
    }
    Ok(report)
}

fn short_domain(d: Domain) -> &'static str {
    match d {
        Domain::Entertainment => "Ent.",
        Domain::Healthcare => "Healthcare",
        Domain::Traffic => "Traffic",
        Domain::Sports => "Sports",
        Domain::Social => "Social",
        Domain::Science => "Science",
        Domain::Finance => "Finance",
        Domain::General => "General",
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(out.trim_end().chars().count()));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

impl Report {
    /// Accuracy by logic type and domain, then by depth bucket, as aligned
    /// plain text.
    pub fn to_table(&self) -> String {
        let mut header = vec!["Symbol".to_string()];
        header.extend(Domain::ALL.iter().map(|d| short_domain(*d).to_string()));
        header.push("All".into());
        let mut rows = Vec::new();
        for l in LogicClass::ALL {
            let mut row = vec![l.to_string()];
            row.extend(Domain::ALL.iter().map(|d| self.cells[&l][d].render()));
            row.push(self.by_logic_type[&l].render());
            rows.push(row);
        }
        let mut all = vec!["All".to_string()];
        all.extend(Domain::ALL.iter().map(|d| self.by_domain[d].render()));
        all.push(self.overall.render());
        rows.push(all);
        let mut out = table(&header, &rows);

        out.push('\n');
        let mut header = vec!["Depth".to_string()];
        let mut row = vec!["Accuracy".to_string()];
        let mut counts = vec!["Count".to_string()];
        for (name, cell) in &self.by_depth {
            header.push(name.clone());
            row.push(cell.render());
            counts.push(cell.count.to_string());
        }
        out.push_str(&table(&header, &[row, counts]));

        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "\u{2014}".into());
        let _ = writeln!(
            out,
            "\nInstances: {}  Correct: {}  ROUGE-L: {}  Jaccard: {}",
            self.overall.count,
            self.overall.correct,
            fmt(self.mean_rouge_l),
            fmt(self.mean_jaccard)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::TruthValue;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn labels() {
        assert_eq!(score_label("true", "True"), Ok(true));
        assert_eq!(score_label("Unknown", "False"), Ok(false));
        assert!(matches!(score_label("maybe", "True"), Err(EvalError::UnknownLabel(_))));
        assert!(score_answer(&Predicted::Answer(Answer::Index(2)), &Answer::Index(2)));
        assert!(!score_answer(&Predicted::UNRESOLVED, &Answer::Index(2)));
    }

    #[test]
    fn rouge_examples() {
        assert!((rouge_l(&s(&["the cat sat"]), &s(&["the cat"])) - 0.8).abs() < 1e-9);
        assert_eq!(rouge_l(&s(&["a b", "c"]), &s(&["a b", "c"])), 1.0);
        assert_eq!(rouge_l(&s(&["a b"]), &s(&["c d"])), 0.0);
        assert_eq!(rouge_l(&[], &[]), 1.0);
        assert_eq!(rouge_l(&s(&["a"]), &s(&["a", "b"])), 0.5);
    }

    fn rec(id: &str, ok: bool) -> EvalRecord {
        EvalRecord {
            id: id.into(),
            predicted: Predicted::Answer(Answer::Label(if ok { TruthValue::True } else { TruthValue::False })),
            gold: Answer::Label(TruthValue::True),
            answer_correct: ok,
            step_scores: StepScores { rouge_l: 1.0, jaccard: 1.0 },
        }
    }

    fn meta(d: Domain, l: LogicClass, depth: usize) -> InstanceMeta {
        InstanceMeta { domain: d, logic_type: l, depth }
    }

    #[test]
    fn report_cells() {
        let instances = BTreeMap::from([
            ("a".to_string(), meta(Domain::Traffic, LogicClass::PL, 2)),
            ("b".to_string(), meta(Domain::Traffic, LogicClass::PL, 5)),
            ("c".to_string(), meta(Domain::Finance, LogicClass::NM, 9)),
        ]);
        let r = aggregate_report(&[rec("a", true), rec("b", false), rec("c", true)], &instances).unwrap();
        assert_eq!(r.cells[&LogicClass::PL][&Domain::Traffic].accuracy, Some(50.0));
        assert_eq!(r.cells[&LogicClass::NM][&Domain::Finance].accuracy, Some(100.0));
        assert_eq!(r.cells[&LogicClass::FOL][&Domain::Sports].accuracy, None);
        let total: usize = r.cells.values().flat_map(|row| row.values()).map(|c| c.count).sum();
        assert_eq!(total, 3);
        let table = r.to_table();
        assert!(table.contains("50.0"));
        assert!(table.contains('\u{2014}'));
        assert_eq!(
            aggregate_report(&[rec("zzz", true)], &instances),
            Err(EvalError::Dangling("zzz".into()))
        );
    }

    #[test]
    fn buckets() {
        assert_eq!(depth_bucket(2), "2-3");
        assert_eq!(depth_bucket(7), "6-7");
        assert_eq!(depth_bucket(9), "8-9");
    }
}
