use super::*;

fn lexicon_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicons")
}

fn config(domain: Domain, logic: LogicClass, depth: usize, count: usize) -> GenConfig {
    GenConfig {
        seed: 7,
        counts: vec![CountSpec {
            domains: vec![domain],
            logic_types: vec![logic],
            depths: vec![depth],
            count,
        }],
        lexicon_dir: lexicon_dir(),
        ..GenConfig::default()
    }
}

#[test]
fn validation() {
    let mut c = config(Domain::Traffic, LogicClass::PL, 12, 1);
    assert!(matches!(c.validate(), Err(ConfigError::Invalid(m)) if m.contains("depth 12")));
    c.counts[0].depths = vec![2];
    assert!(c.validate().is_ok());
    c.label_ratios.unknown = 0.3;
    assert!(c.validate().is_err());
    c.label_ratios.unknown = 0.2;
    c.filter.similarity_threshold = 1.5;
    assert!(c.validate().is_err());
    assert!(matches!(
        GenConfig::from_json(r#"{"seed": 1, "colour": 2}"#),
        Err(ConfigError::Schema { .. })
    ));
}

#[test]
fn quotas() {
    assert_eq!(quota(10, &[0.4, 0.4, 0.2]), vec![4, 4, 2]);
    assert_eq!(quota(3, &[0.4, 0.4, 0.2]), vec![1, 1, 1]);
    assert_eq!(quota(1, &[0.5, 0.5]), vec![1, 0]);
    assert_eq!(quota(0, &[1.0]), vec![0]);
    assert_eq!(quota(7, &[1.0, 0.0]), vec![7, 0]);
}

#[test]
fn cells_merge() {
    let mut c = config(Domain::Traffic, LogicClass::PL, 2, 3);
    c.counts.push(CountSpec {
        domains: vec![Domain::Traffic, Domain::Sports],
        logic_types: vec![LogicClass::PL],
        depths: vec![2, 3],
        count: 1,
    });
    let cells = c.cells();
    assert_eq!(cells.len(), 4);
    assert_eq!(cells.values().sum::<usize>(), 7);
}

#[test]
fn ten_pl_traffic_instances() {
    let c = config(Domain::Traffic, LogicClass::PL, 2, 10);
    let out = generate(&c).unwrap();
    assert_eq!(out.records.len(), 10);
    let oracle = Oracle::default();
    for r in &out.records {
        let v = verify_record(r, &oracle);
        assert!(v.ok(), "{}: {:?}", r.id, v.problems);
        assert_eq!(r.depth, 2);
    }
    let ids: Vec<&str> = out.records.iter().map(|r| r.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(out.manifest.instances, 10);
    assert_eq!(out.manifest.rule_histogram.values().sum::<usize>(), 20);

    let again = generate(&c).unwrap();
    assert_eq!(out.jsonl(), again.jsonl());
    let replayed = replay(&out.manifest).unwrap();
    assert_eq!(replayed.jsonl(), out.jsonl());
    assert_eq!(replayed.manifest, out.manifest);

    let s = stats_from_str(&out.jsonl()).unwrap();
    assert_eq!(s.instances, 10);
    assert_eq!(s.by_depth, BTreeMap::from([(2, 10)]));
    let lo = s.context_length.min.unwrap();
    let hi = s.context_length.max.unwrap();
    assert!(lo >= 35 && hi <= 1484);
}

#[test]
fn label_mix_follows_quota() {
    let mut c = config(Domain::Sports, LogicClass::PL, 3, 10);
    c.question_mix = QuestionMix {
        truth_eval: 1.0,
        multiple_choice: 0.0,
    };
    let out = generate(&c).unwrap();
    let s = stats_of(&out.records);
    assert_eq!(s.by_answer["True"], 4);
    assert_eq!(s.by_answer["False"], 4);
    assert_eq!(s.by_answer["Unknown"], 2);
}

#[test]
fn tampered_manifest_is_refused() {
    let c = config(Domain::Finance, LogicClass::NM, 2, 2);
    let out = generate(&c).unwrap();
    let mut m = out.manifest.clone();
    m.config.seed += 1;
    assert!(matches!(replay(&m), Err(GenerateError::Replay(_))));
    let mut m = out.manifest;
    m.output_sha256 = "0".repeat(64);
    assert!(matches!(replay(&m), Err(GenerateError::Replay(_))));
}

#[test]
fn missing_lexicon() {
    let mut c = config(Domain::Traffic, LogicClass::PL, 2, 1);
    c.lexicon_dir = PathBuf::from("/nonexistent");
    assert!(matches!(generate(&c), Err(GenerateError::Lexicon { .. })));
}

#[test]
fn stats_edge_cases() {
    let s = stats_from_str("").unwrap();
    assert_eq!(s.instances, 0);
    assert_eq!(s.context_length.mean, None);
    let json = serde_json::to_value(&s).unwrap();
    assert!(json["context_length"]["mean"].is_null());
    assert_eq!(LengthStats::of(&[35, 1484]).mean, Some(759.5));
    assert!(matches!(
        stats_from_str("\n{not json}\n"),
        Err(StatsError::Malformed { line: 2, .. })
    ));
}

#[test]
fn depth_histogram() {
    let c = config(Domain::Science, LogicClass::PL, 2, 2);
    let mut records = generate(&c).unwrap().records;
    let mut third = records[0].clone();
    third.depth = 5;
    records.push(third);
    let s = stats_of(&records);
    assert_eq!(s.by_depth, BTreeMap::from([(2, 2), (5, 1)]));
}

#[test]
fn seeds_are_stable() {
    assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
    assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
}
