//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use reasonbench::chain::{fresh_instances, StepType};
use reasonbench::eval::{aggregate_report, evaluate, rouge_l_pair, score_answer, InstanceMeta};
use reasonbench::formula::{parse_default, parse_formula, Formula};
use reasonbench::grounding::{Answer, Domain, InstanceRecord};
use reasonbench::oracle::{theory_constants, verify_chain, DefaultTheory, Oracle, Status, TruthValue};
use reasonbench::pipeline::{
    generate, replay, stats_of, verify_records, CountSpec, GenConfig, Generated, ScorerSpec,
};
use reasonbench::quality::{
    filter_steps, jaccard, CachedScorer, FilterConfig, PlausibilityScorer, ReplayScorer, ScorerError, StepTexts,
};
use reasonbench::rules::{catalog, dump_json, Family, LogicClass};
use reasonbench::solver::{solve_records, trace_chain, PredictionRecord};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, format!("took {:.1?}, limit {:.0?}", took, limit))
}

fn lexicon_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicons")
}

/// 8 domains, 3 classes, depths 2 to 9, 1000 instances.
fn suite_config() -> GenConfig {
    let all_depths: Vec<usize> = (2..=9).collect();
    GenConfig {
        seed: 42,
        counts: vec![
            CountSpec {
                domains: Domain::ALL.to_vec(),
                logic_types: vec![LogicClass::PL, LogicClass::FOL, LogicClass::NM],
                depths: all_depths,
                count: 5,
            },
            CountSpec {
                domains: Domain::ALL.to_vec(),
                logic_types: vec![LogicClass::PL],
                depths: vec![2, 3, 4, 5, 6],
                count: 1,
            },
        ],
        lexicon_dir: lexicon_dir(),
        ..GenConfig::default()
    }
}

fn pl_soundness() -> Outcome {
    let start = Instant::now();
    let oracle = Oracle::default();
    let rules: Vec<_> = catalog().by_family(Family::PL).collect();
    check(rules.len() == 12, format!("{} PL schemas", rules.len()))?;
    let mut checked = 0;
    for rule in rules {
        for inst in fresh_instances(rule) {
            let v = oracle.pl_entails(&inst.premises, &inst.conclusion).map_err(|e| e.to_string())?;
            check(v.status == Status::Entailed, format!("{} fails", rule.id))?;
            checked += 1;
        }
    }
    check(checked == 16, format!("{checked} directions"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("12 schemas, {checked} directions, {:.1?}", start.elapsed()))
}

fn fol_soundness() -> Outcome {
    let start = Instant::now();
    let oracle = Oracle::default();
    let mut ids = BTreeSet::new();
    let mut checked = 0;
    for rule in catalog().by_class(LogicClass::FOL) {
        for inst in fresh_instances(rule) {
            for size in 1..=3 {
                let v = oracle
                    .fol_entails_finite(&inst.premises, &inst.conclusion, size)
                    .map_err(|e| e.to_string())?;
                check(v.status == Status::Entailed, format!("{} has a countermodel of size <= {size}", rule.id))?;
                checked += 1;
            }
        }
        ids.insert(rule.id);
    }
    for id in ["MV1", "MV2", "MV3", "MV4", "MV5", "MV6", "MV7", "EG", "UI"] {
        check(ids.contains(id), format!("{id} missing"))?;
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{} schemas, {checked} checks, {:.1?}", ids.len(), start.elapsed()))
}

fn template(id: &str) -> Result<(Vec<Formula>, Vec<reasonbench::formula::DefaultRule>, Formula), String> {
    let rule = catalog().get(id).ok_or(format!("{id} missing"))?;
    let inst = fresh_instances(rule).into_iter().next().ok_or(format!("{id} has no instance"))?;
    Ok((inst.premises, inst.defaults, inst.conclusion))
}

fn non_monotonicity() -> Outcome {
    let start = Instant::now();
    let oracle = Oracle::default();
    let f = |s: &str| parse_formula(s).unwrap();
    let base = DefaultTheory {
        facts: vec![f("bird(a)")],
        hard_rules: vec![f("forall x. (penguin(x) -> ~flies(x))")],
        defaults: vec![parse_default("bird(x) : flies(x) / flies(x)").unwrap()],
    };
    let consts = vec!["a".to_string()];
    let goal = f("flies(a)");
    let without = oracle.default_entails(&base, &consts, &goal).map_err(|e| e.to_string())?;
    check(without.is_entailed(), "flies(a) not derived without the penguin fact")?;
    let mut with = base.clone();
    with.facts.push(f("penguin(a)"));
    let with = oracle.default_entails(&with, &consts, &goal).map_err(|e| e.to_string())?;
    check(!with.is_entailed(), "flies(a) still derived with the penguin fact")?;

    let (p, d, c) = template("DRD")?;
    let t = DefaultTheory::split(&p, &d);
    let v = oracle.default_entails(&t, &theory_constants(&p, &d, Some(&c)), &c).map_err(|e| e.to_string())?;
    check(v.is_entailed(), "DRD template conclusion not derived")?;

    let mut counts = Vec::new();
    for id in ["DRS", "RAP"] {
        let (p, d, c) = template(id)?;
        let t = DefaultTheory::split(&p, &d);
        let exts = oracle
            .default_extensions(&t, &theory_constants(&p, &d, Some(&c)))
            .map_err(|e| e.to_string())?;
        counts.push(exts.len());
    }
    check(counts == [2, 1], format!("DRS/RAP extensions {counts:?}, want [2, 1]"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("DRD on/off, DRS 2 extensions, RAP 1, {:.1?}", start.elapsed()))
}

fn generation_soundness(suite: &Generated, took: Duration) -> Outcome {
    let records = &suite.records;
    check(records.len() == 1000, format!("{} instances", records.len()))?;
    let domains: BTreeSet<_> = records.iter().map(|r| r.domain).collect();
    let classes: BTreeSet<_> = records.iter().map(|r| r.logic_type).collect();
    let depths: BTreeSet<_> = records.iter().map(|r| r.depth).collect();
    check(domains.len() == 8 && classes.len() == 3, "coverage of domains or classes")?;
    check(depths == (2..=9).collect(), format!("depths {depths:?}"))?;
    let start = Instant::now();
    let verdicts = verify_records(records, &Oracle::default());
    let bad: Vec<_> = verdicts.iter().filter(|v| !v.chain.as_ref().is_some_and(|c| c.is_sound())).collect();
    check(bad.is_empty(), format!("{} unsound, first {}", bad.len(), bad.first().map_or("", |v| &v.id)))?;
    let mut true_cases = 0;
    for (r, v) in records.iter().zip(&verdicts) {
        check(v.id == r.id, "verdict order")?;
        if matches!(r.answer, Answer::Label(TruthValue::True)) {
            true_cases += 1;
            check(v.modality_ok == Some(true), format!("{}: context alone settles the claim", r.id))?;
        }
        check(v.ok(), format!("{}: {}", r.id, v.problems.join("; ")))?;
    }
    let total = took + start.elapsed();
    check(total < Duration::from_secs(300), format!("took {total:.1?}"))?;
    Ok(format!(
        "1000 sound, modality holds on {true_cases} gold-True instances, {total:.1?}"
    ))
}

/// Scores text by a stable function of its bytes.
struct Hashing;

impl PlausibilityScorer for Hashing {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let sum: u32 = text.bytes().map(u32::from).sum();
        Ok(if sum.is_multiple_of(5) { 0.2 } else { 0.9 })
    }
}

fn filter_fidelity() -> Outcome {
    let cfg = FilterConfig::default();
    let pair = |a: String, b: String| {
        vec![
            StepTexts { similarity: a.clone(), plausibility: a },
            StepTexts { similarity: b.clone(), plausibility: b },
        ]
    };
    check(jaccard("a b c", "a b d") == 0.5, "fixture is not 0.5")?;
    let half = filter_steps(&pair("a b c".into(), "a b d".into()), None, &cfg).map_err(|e| e.to_string())?;
    check(half.accepted(), "0.5 pair rejected")?;
    let shared: Vec<String> = (0..51).map(|i| format!("w{i}")).collect();
    let a = [shared.clone(), (0..25).map(|i| format!("x{i}")).collect()].concat().join(" ");
    let b = [shared, (0..24).map(|i| format!("y{i}")).collect()].concat().join(" ");
    check(jaccard(&a, &b) == 0.51, format!("fixture is {}", jaccard(&a, &b)))?;
    let above = filter_steps(&pair(a, b), None, &cfg).map_err(|e| e.to_string())?;
    check(!above.accepted(), "0.51 pair accepted")?;

    let texts: Vec<StepTexts> = (0..40)
        .map(|i| StepTexts {
            similarity: format!("step {i}"),
            plausibility: format!("Since fact {i} holds, conclusion {} follows.", i * 7),
        })
        .collect();
    let live = CachedScorer::new(Hashing);
    let mut decisions = Vec::new();
    for w in texts.chunks(2) {
        decisions.push(filter_steps(w, Some(&live), &cfg).map_err(|e| e.to_string())?);
    }
    let replayed = ReplayScorer::new(live.transcript());
    let mut again = Vec::new();
    for w in texts.chunks(2) {
        again.push(filter_steps(w, Some(&replayed), &cfg).map_err(|e| e.to_string())?);
    }
    let enc = |d: &Vec<_>| serde_json::to_string(d).unwrap();
    check(enc(&decisions) == enc(&again), "replayed decisions differ")?;
    let rejected = decisions.iter().filter(|d| !d.accepted()).count();
    check(rejected > 0 && rejected < decisions.len(), "fixture exercises one verdict only")?;

    let mut c = suite_config();
    c.counts = vec![CountSpec {
        domains: vec![Domain::Traffic],
        logic_types: vec![LogicClass::PL],
        depths: vec![3],
        count: 6,
    }];
    c.scorer = Some(ScorerSpec {
        command: Some("sh -c 'read x; if [ $((${#x} % 3)) -eq 0 ]; then echo 0.1; else echo 0.8; fi'".into()),
        url: None,
        timeout_ms: None,
        retries: None,
    });
    let run = generate(&c).map_err(|e| e.to_string())?;
    check(run.manifest.scorer_transcript.is_some(), "no transcript recorded")?;
    let rerun = replay(&run.manifest).map_err(|e| e.to_string())?;
    check(run.jsonl() == rerun.jsonl(), "replayed generation differs")?;
    check(
        serde_json::to_string(&run.manifest.rejections).unwrap() == serde_json::to_string(&rerun.manifest.rejections).unwrap(),
        "replayed rejections differ",
    )?;
    Ok(format!(
        "0.5 accepted, 0.51 rejected, {rejected}/{} fixture rejections and a scored run replay bit-exactly",
        decisions.len()
    ))
}

fn solver_completeness(suite: &Generated) -> Outcome {
    let subset: Vec<InstanceRecord> = suite
        .records
        .iter()
        .filter(|r| r.logic_type == LogicClass::PL && r.chain.iter().all(|s| s.step_type == StepType::Symbolic))
        .cloned()
        .collect();
    check(!subset.is_empty(), "empty subset")?;
    let start = Instant::now();
    let results = solve_records(&subset, None, 20, &Oracle::default());
    let mut correct = 0;
    for (r, res) in subset.iter().zip(results) {
        let p = res.map_err(|e| format!("{}: {e}", r.id))?;
        if score_answer(&p.answer, &r.answer) {
            correct += 1;
        }
        let chain = trace_chain(&p.trace, r.logic_type).map_err(|e| format!("{}: {e}", r.id))?;
        check(p.trace.is_empty() || verify_chain(&chain).is_sound(), format!("{}: trace unsound", r.id))?;
    }
    check(correct == subset.len(), format!("{correct}/{} correct", subset.len()))?;
    within(Duration::from_secs(120), start)?;
    Ok(format!("{correct}/{} correct, all traces sound, {:.1?}", subset.len(), start.elapsed()))
}

fn metrics(suite: &Generated) -> Outcome {
    let r = rouge_l_pair("the cat sat", "the cat");
    check((r - 0.8).abs() <= 1e-9, format!("rouge_l = {r}"))?;
    let j = jaccard("a b c", "a b d");
    check(j == 0.5, format!("jaccard = {j}"))?;
    let gold = &suite.records;
    let preds: Vec<PredictionRecord> = gold.iter().map(PredictionRecord::from_gold).collect();
    let records = evaluate(gold, &preds).map_err(|e| e.to_string())?;
    let meta = gold.iter().map(|r| (r.id.clone(), InstanceMeta::from(r))).collect();
    let report = aggregate_report(&records, &meta).map_err(|e| e.to_string())?;
    check(report.overall.accuracy == Some(100.0), format!("self accuracy {:?}", report.overall.accuracy))?;
    check(report.mean_rouge_l == Some(1.0) && report.mean_jaccard == Some(1.0), "self step scores below 1")?;
    Ok(format!("rouge_l {r:.3}, jaccard {j}, self-scoring 1.0 / 100% on {}", gold.len()))
}

fn determinism(suite: &Generated) -> Outcome {
    let again = generate(&suite_config()).map_err(|e| e.to_string())?;
    check(suite.jsonl() == again.jsonl(), "second run differs")?;
    let replayed = replay(&suite.manifest).map_err(|e| e.to_string())?;
    check(suite.jsonl() == replayed.jsonl(), "manifest replay differs")?;
    Ok(format!("byte-identical twice and on replay, sha256 {}", &suite.manifest.output_sha256[..16]))
}

fn stats_reproduction(suite: &Generated) -> Outcome {
    let s = stats_of(&suite.records);
    check(s.by_domain.len() == 8 && s.by_logic_type.len() == 3, "coverage")?;
    let (dmin, dmax) = (s.depth.min.unwrap_or(0), s.depth.max.unwrap_or(0));
    check(dmin >= 2 && dmax <= 9, format!("depth {dmin}..{dmax}"))?;
    let (cmin, cmax) = (s.context_length.min.unwrap_or(0), s.context_length.max.unwrap_or(0));
    check(cmin >= 35 && cmax <= 1484, format!("context length {cmin}..{cmax}"))?;
    let dump = dump_json();
    let counts: Vec<u64> = ["PL", "FOL", "MV", "NM"]
        .iter()
        .map(|k| dump["counts"][k].as_u64().unwrap_or(0))
        .collect();
    check(counts == [12, 13, 7, 8], format!("catalog counts {counts:?}"))?;
    Ok(format!("depth {dmin}..{dmax}, context {cmin}..{cmax} chars, catalog 12/13/7/8"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("FAIL {name}: {why}");
        }
    };
    report("rule soundness, PL", pl_soundness());
    report("rule soundness, FOL", fol_soundness());
    report("non-monotonicity", non_monotonicity());
    let start = Instant::now();
    match generate(&suite_config()) {
        Ok(suite) => {
            let took = start.elapsed();
            report("generation soundness", generation_soundness(&suite, took));
            report("filter fidelity", filter_fidelity());
            report("solver completeness", solver_completeness(&suite));
            report("metrics", metrics(&suite));
            report("determinism", determinism(&suite));
            report("stats reproduction", stats_reproduction(&suite));
        }
        Err(e) => {
            for name in ["generation soundness", "solver completeness", "metrics", "determinism", "stats reproduction"] {
                report(name, Err(format!("generation failed: {e}")));
            }
            report("filter fidelity", filter_fidelity());
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
