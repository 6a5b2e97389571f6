use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::grounding::{Answer, InstanceRecord};
use crate::oracle::{verify_chain_with, Oracle, Status, TruthValue, VerificationReport};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordVerdict {
    pub id: String,
    /// Absent when the chain could not be rebuilt from the record.
    pub chain: Option<VerificationReport>,
    pub answer_ok: bool,
    /// Whether text alone and image alone both leave the gold statement
    /// undecided; absent for Unknown answers.
    pub modality_ok: Option<bool>,
    pub problems: Vec<String>,
}

impl RecordVerdict {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// The statement the gold answer asserts to follow.
fn gold_claim(record: &InstanceRecord) -> Option<Formula> {
    match record.answer {
        Answer::Label(TruthValue::True) => record.formal.hypothesis.clone(),
        Answer::Label(TruthValue::False) => record.formal.hypothesis.as_ref().map(Formula::negated),
        Answer::Label(TruthValue::Unknown) => None,
        Answer::Index(i) => record.formal.options.get(i).cloned(),
    }
}

fn check_answer(record: &InstanceRecord, oracle: &Oracle, problems: &mut Vec<String>) -> bool {
    let knowledge = record.knowledge();
    let defaults = &record.formal.defaults;
    match record.answer {
        Answer::Label(label) => {
            let Some(h) = &record.formal.hypothesis else {
                problems.push("truth question without a hypothesis".into());
                return false;
            };
            match oracle.truth_value(&knowledge, defaults, h) {
                Ok(v) if v == label => true,
                Ok(v) => {
                    problems.push(format!("gold answer {label:?} but the oracle gives {v:?}"));
                    false
                }
                Err(e) => {
                    problems.push(format!("oracle: {e}"));
                    false
                }
            }
        }
        Answer::Index(i) => {
            if record.formal.options.len() != record.options.len() || i >= record.options.len() {
                problems.push("answer index does not name an option".into());
                return false;
            }
            let mut entailed = Vec::new();
            for (k, o) in record.formal.options.iter().enumerate() {
                match oracle.truth_value(&knowledge, defaults, o) {
                    Ok(TruthValue::True) => entailed.push(k),
                    Ok(_) => {}
                    Err(e) => {
                        problems.push(format!("oracle on option {k}: {e}"));
                        return false;
                    }
                }
            }
            if entailed == [i] {
                true
            } else {
                problems.push(format!("options entailed: {entailed:?}, gold {i}"));
                false
            }
        }
    }
}

fn check_modality(record: &InstanceRecord, claim: &Formula, oracle: &Oracle, problems: &mut Vec<String>) -> bool {
    let f = &record.formal;
    let text: Vec<Formula> = f.context.iter().chain(&f.bridges).cloned().collect();
    let image: Vec<Formula> = f.visual.iter().chain(&f.bridges).cloned().collect();
    let mut ok = true;
    for (name, formulas, defaults) in [("text", &text, &f.defaults[..]), ("image", &image, &[][..])] {
        match oracle.entails(formulas, defaults, claim) {
            Ok(v) if v.status == Status::NotEntailed => {}
            Ok(v) => {
                ok = false;
                problems.push(format!("{name} alone gives {:?} for the gold statement", v.status));
            }
            Err(e) => {
                ok = false;
                problems.push(format!("oracle on {name} alone: {e}"));
            }
        }
    }
    ok
}

/// Re-checks a record from its formal fields: chain soundness, the gold
/// answer and the need for both modalities.
pub fn verify_record(record: &InstanceRecord, oracle: &Oracle) -> RecordVerdict {
    let mut problems = Vec::new();
    let chain = match record.to_chain() {
        Ok(c) => {
            let report = verify_chain_with(&c, oracle);
            if !report.is_sound() {
                problems.push(format!("chain: {:?}", report.overall));
            }
            Some(report)
        }
        Err(e) => {
            problems.push(format!("record: {e}"));
            None
        }
    };
    let answer_ok = check_answer(record, oracle, &mut problems);
    let modality_ok = gold_claim(record).map(|c| check_modality(record, &c, oracle, &mut problems));
    RecordVerdict {
        id: record.id.clone(),
        chain,
        answer_ok,
        modality_ok,
        problems,
    }
}
