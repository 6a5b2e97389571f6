//! Symbolic machinery for building and checking multimodal logical
//! reasoning benchmarks: a formula language, an executable inference-rule
//! catalog, brute-force entailment oracles, reasoning-chain synthesis,
//! grounding into question-answer instances, quality filters, a
//! deterministic iterative solver and an evaluation harness.

pub mod chain;
pub mod eval;
pub mod formula;
pub mod grounding;
pub mod oracle;
pub mod pipeline;
mod process;
pub mod quality;
pub mod rules;
pub mod solver;
