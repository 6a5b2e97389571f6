use super::*;
use crate::chain::compose_chain;
use crate::grounding::{
    ground_chain, load_lexicon, multiple_choice_question, truth_eval_question, Lexicon, QuestionConfig,
};
use crate::oracle::verify_chain;

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn pl(known: &[&str]) -> SolverState {
    SolverState::new(known.iter().map(|s| f(s)).collect(), Vec::new(), classes_for(LogicClass::PL))
}

fn lexicon() -> Lexicon {
    load_lexicon(concat!(env!("CARGO_MANIFEST_DIR"), "/../../lexicons/general.json")).unwrap()
}

fn record(rules: &[&str], label: Option<TruthValue>) -> InstanceRecord {
    let chain = compose_chain(rules).unwrap();
    let lex = lexicon();
    let g = ground_chain(&chain, &lex, 5).unwrap();
    let qc = QuestionConfig::default();
    let o = Oracle::default();
    let q = match label {
        Some(l) => truth_eval_question(&g, &lex, l, 5, &qc, &o).unwrap(),
        None => multiple_choice_question(&g, &lex, 5, &qc, &o).unwrap(),
    };
    InstanceRecord::new(&g, &q)
}

#[test]
fn selects_modus_ponens() {
    let s = pl(&["p -> q", "p"]);
    match select_premises(&s, &[f("q")]) {
        Selection::Rule(hit) => {
            assert_eq!(hit.rule_id, "MP");
            assert_eq!(hit.premises, vec![0, 1]);
            assert_eq!(hit.conclusion, f("q"));
        }
        Selection::Fallback => panic!("expected a rule"),
    }
}

#[test]
fn selection_skips_known_conclusions() {
    let s = pl(&["p -> q", "q"]);
    let Selection::Rule(hit) = select_premises(&s, &[f("p")]) else {
        panic!("the implication alone still licenses rewrites")
    };
    assert!(!s.known.contains(&hit.conclusion));
    let first_novel = crate::rules::applicable_rules(&s.known, &s.classes)
        .into_iter()
        .find(|h| !s.known.contains(&h.conclusion))
        .unwrap();
    assert_eq!(hit, first_novel);
    assert_eq!(select_premises(&pl(&[]), &[f("p")]), Selection::Fallback);
}

#[test]
fn identify_and_halt() {
    assert_eq!(identify_type(&Selection::Fallback, None), ReasoningType::Halt);
    let mut s = pl(&[]);
    step(&mut s, &[f("p")], None);
    assert!(s.halted.is_some());
    assert!(s.known.is_empty());
}

#[test]
fn step_is_monotone_and_novel() {
    let mut s = pl(&["p -> q", "p"]);
    step(&mut s, &[f("q")], None);
    assert_eq!(s.known, vec![f("p -> q"), f("p"), f("q")]);
    step(&mut s, &[f("q")], None);
    assert_eq!(s.known.iter().filter(|k| **k == f("q")).count(), 1);
    assert!(s.known.len() == 4 || s.halted.is_some());
}

#[test]
fn solves_true_false_unknown() {
    for (label, expect) in [
        (TruthValue::True, TruthValue::True),
        (TruthValue::False, TruthValue::False),
        (TruthValue::Unknown, TruthValue::Unknown),
    ] {
        let r = record(&["MP", "MP"], Some(label));
        let sol = solve(&r, None, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_eq!(sol.answer, Predicted::Answer(Answer::Label(expect)));
        if label != TruthValue::Unknown {
            let ids: Vec<&str> = sol.trace.iter().map(|s| s.rule_id.as_str()).collect();
            assert_eq!(ids, vec!["MP", "MP"]);
        }
        if !sol.trace.is_empty() {
            assert!(verify_chain(&trace_chain(&PredictionRecord::new(&r.id, &sol).trace, r.logic_type).unwrap()).is_sound());
        }
    }
}

#[test]
fn solves_multiple_choice() {
    let r = record(&["HS", "MP"], None);
    let sol = solve(&r, None, DEFAULT_MAX_ITERATIONS).unwrap();
    assert_eq!(sol.answer, Predicted::Answer(r.answer));
}

#[test]
fn exhaustion_and_bounds() {
    let r = record(&["MP", "MP"], Some(TruthValue::True));
    assert!(matches!(solve(&r, None, 0), Err(SolveError::NoIterations)));
    let sol = solve(&r, None, 1).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.answer, Predicted::Answer(Answer::Label(TruthValue::Unknown)));
}

struct Echo(Formula);

impl HeuristicProvider for Echo {
    fn propose(&self, _known: &[Formula], _goals: &[Formula]) -> Result<Option<Proposal>, ProviderError> {
        Ok(Some(Proposal {
            formula: self.0.clone(),
            justification: "it seems so".into(),
            premises: Vec::new(),
        }))
    }
}

#[test]
fn provider_steps_are_heuristic() {
    let mut s = pl(&[]);
    let p = Echo(f("r"));
    step(&mut s, &[f("r")], Some(&p));
    assert_eq!(s.trace.len(), 1);
    assert_eq!(s.trace[0].step_type, StepType::Heuristic);
    step(&mut s, &[f("r")], Some(&p));
    assert!(s.halted.is_some());
}

#[test]
fn subprocess_provider() {
    let p = SubprocessProvider {
        program: "sh".into(),
        args: vec!["-c".into(), r#"cat > /dev/null; echo '{"formula": "q", "justification": "j"}'"#.into()],
        timeout_ms: 5000,
    };
    let got = p.propose(&[f("p")], &[f("q")]).unwrap().unwrap();
    assert_eq!(got.formula, f("q"));
    let decline = SubprocessProvider {
        program: "sh".into(),
        args: vec!["-c".into(), "cat > /dev/null; echo null".into()],
        timeout_ms: 5000,
    };
    assert_eq!(decline.propose(&[], &[f("q")]).unwrap(), None);
}

#[test]
fn predictions_serialize() {
    assert_eq!(serde_json::to_string(&Predicted::UNRESOLVED).unwrap(), "\"Unresolved\"");
    let p: Predicted = serde_json::from_str("\"Unresolved\"").unwrap();
    assert_eq!(p, Predicted::UNRESOLVED);
    let p: Predicted = serde_json::from_str("3").unwrap();
    assert_eq!(p, Predicted::Answer(Answer::Index(3)));
}
