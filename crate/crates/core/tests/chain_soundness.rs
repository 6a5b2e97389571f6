use rayon::prelude::*;
use reasonbench::chain::{sample_chain, ChainConfig, Provenance, StepType};
use reasonbench::oracle::verify_chain;
use reasonbench::rules::LogicClass;

const PER_CELL: u64 = 1000;

fn check_class(class: LogicClass) {
    let cfg = ChainConfig {
        heuristic_rate: 0.2,
        ..ChainConfig::default()
    };
    for depth in 2..=9 {
        let failures: Vec<String> = (0..PER_CELL)
            .into_par_iter()
            .filter_map(|seed| {
                let chain = sample_chain(depth, class, seed, &cfg).unwrap();
                assert_eq!(chain.depth(), depth);
                let report = verify_chain(&chain);
                (!report.is_sound()).then(|| format!("seed {seed}: {:?}\n{chain}", report.overall))
            })
            .collect();
        assert!(failures.is_empty(), "{class} depth {depth}: {}", failures[0]);
    }
}

#[test]
fn propositional_chains_verify() {
    check_class(LogicClass::PL);
}

#[test]
fn first_order_chains_verify() {
    check_class(LogicClass::FOL);
}

#[test]
fn default_chains_verify() {
    check_class(LogicClass::NM);
}

#[test]
fn chains_are_connected() {
    let cfg = ChainConfig {
        heuristic_rate: 0.3,
        ..ChainConfig::default()
    };
    for class in LogicClass::ALL {
        for seed in 0..200 {
            let chain = sample_chain(2 + (seed as usize % 8), class, seed, &cfg).unwrap();
            assert_eq!(chain.final_conclusion, chain.steps.last().unwrap().conclusion);
            for (i, step) in chain.steps.iter().enumerate().skip(1) {
                assert!(step
                    .premises
                    .iter()
                    .any(|p| p.provenance == Provenance::Derived(i - 1)));
            }
            assert!(chain.steps.first().unwrap().step_type == StepType::Symbolic);
            assert!(chain.steps.last().unwrap().step_type == StepType::Symbolic);
            for root in &chain.root_premises {
                assert!(chain
                    .steps
                    .iter()
                    .any(|s| s.premises.iter().any(|p| &p.formula == root)));
            }
        }
    }
}
