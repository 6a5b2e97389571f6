use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rules::{catalog, Family, LogicClass, RuleSchema};

use super::{accepts, Builder, ChainError, ReasoningChain, MAX_DEPTH, MIN_DEPTH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Probability that an interior position becomes a heuristic step.
    pub heuristic_rate: f64,
    /// Relative sampling weight per rule id; unlisted rules weigh 1.
    pub rule_weights: BTreeMap<String, f64>,
    /// Search nodes explored before giving up.
    pub max_nodes: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            heuristic_rate: 0.0,
            rule_weights: BTreeMap::new(),
            max_nodes: 20_000,
        }
    }
}

impl ChainConfig {
    fn weight(&self, id: &str) -> f64 {
        self.rule_weights.get(id).copied().unwrap_or(1.0)
    }
}

/// Rules a chain of the class may use.
fn pool(class: LogicClass) -> Vec<&'static RuleSchema> {
    catalog()
        .iter()
        .filter(|r| match class {
            LogicClass::PL => r.family == Family::PL,
            LogicClass::FOL => matches!(r.family, Family::FOL | Family::MV),
            LogicClass::NM => matches!(r.family, Family::NM | Family::PL),
        })
        .collect()
}

/// Weighted random order without replacement: sort by `u^(1/w)`.
fn weighted_order<'a>(
    rules: &[&'a RuleSchema],
    config: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a RuleSchema> {
    let mut keyed: Vec<(f64, &RuleSchema)> = rules
        .iter()
        .filter_map(|r| {
            let w = config.weight(r.id);
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (w > 0.0).then(|| (u.powf(1.0 / w), *r))
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    keyed.into_iter().map(|(_, r)| r).collect()
}

struct Search<'a> {
    class: LogicClass,
    pool: Vec<&'static RuleSchema>,
    config: &'a ChainConfig,
    /// Per position: whether it is a heuristic bridge.
    layout: Vec<bool>,
    rng: ChaCha8Rng,
    nodes: usize,
}

impl Search<'_> {
    fn run(&mut self, b: Builder, pos: usize, has_nm: bool) -> Option<Builder> {
        if pos == self.layout.len() {
            return (self.class != LogicClass::NM || has_nm).then_some(b);
        }
        if self.layout[pos] {
            // The bridge is chosen together with the rule after it.
            return self.run(b, pos + 1, has_nm);
        }
        let bridged = pos > 0 && self.layout[pos - 1];
        let symbolic_left = self.layout[pos..].iter().filter(|h| !**h).count();
        let mut candidates = weighted_order(&self.pool, self.config, &mut self.rng);
        if self.class == LogicClass::NM && !has_nm && symbolic_left == 1 {
            candidates.retain(|r| r.logic_class == LogicClass::NM);
        }
        for rule in candidates {
            self.nodes += 1;
            if self.nodes > self.config.max_nodes {
                return None;
            }
            let mut next = b.clone();
            if bridged {
                next.push_heuristic(rule);
            } else if let Some(prev) = next.last_conclusion() {
                if !accepts(rule, prev) {
                    continue;
                }
            }
            if !next.push_rule(rule) {
                continue;
            }
            let nm = has_nm || rule.logic_class == LogicClass::NM;
            if let Some(done) = self.run(next, pos + 1, nm) {
                return Some(done);
            }
        }
        None
    }
}

/// Samples a chain of exactly `depth` steps from the class's rule pool.
///
/// Heuristic steps never come first, last, or twice in a row. NM chains
/// mix default patterns with propositional rules over ground atoms and
/// contain at least one default pattern.
pub fn sample_chain(
    depth: usize,
    class: LogicClass,
    seed: u64,
    config: &ChainConfig,
) -> Result<ReasoningChain, ChainError> {
    if !(MIN_DEPTH..=MAX_DEPTH).contains(&depth) {
        return Err(ChainError::DepthOutOfRange(depth));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layout = vec![false; depth];
    for i in 1..depth - 1 {
        if !layout[i - 1] && config.heuristic_rate > 0.0 && rng.gen_bool(config.heuristic_rate.min(1.0)) {
            layout[i] = true;
        }
    }
    let mut search = Search {
        class,
        pool: pool(class),
        config,
        layout,
        rng,
        nodes: 0,
    };
    search
        .run(Builder::new(class), 0, false)
        .map(Builder::finish)
        .ok_or(ChainError::NoCompatibleSequence { depth, class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::StepType;

    #[test]
    fn deterministic() {
        let cfg = ChainConfig::default();
        let a = sample_chain(2, LogicClass::PL, 7, &cfg).unwrap();
        let b = sample_chain(2, LogicClass::PL, 7, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn exact_depth_and_class() {
        let cfg = ChainConfig::default();
        for seed in 0..20 {
            assert_eq!(sample_chain(9, LogicClass::PL, seed, &cfg).unwrap().depth(), 9);
            let c = sample_chain(3, LogicClass::FOL, seed, &cfg).unwrap();
            for id in c.rule_ids() {
                assert_eq!(catalog().get(id).unwrap().logic_class, LogicClass::FOL);
            }
            let c = sample_chain(4, LogicClass::NM, seed, &cfg).unwrap();
            assert!(c
                .rule_ids()
                .iter()
                .any(|id| catalog().get(id).unwrap().logic_class == LogicClass::NM));
        }
    }

    #[test]
    fn heuristic_layout() {
        let cfg = ChainConfig {
            heuristic_rate: 1.0,
            ..ChainConfig::default()
        };
        let c = sample_chain(7, LogicClass::PL, 3, &cfg).unwrap();
        let kinds: Vec<bool> = c.steps.iter().map(|s| s.step_type == StepType::Heuristic).collect();
        assert_eq!(kinds, [false, true, false, true, false, true, false]);
    }

    #[test]
    fn depth_guard() {
        let cfg = ChainConfig::default();
        assert_eq!(
            sample_chain(10, LogicClass::PL, 0, &cfg),
            Err(ChainError::DepthOutOfRange(10))
        );
    }
}
