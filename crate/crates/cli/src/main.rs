//! Command-line front end: generate, verify, solve, score, stats and
//! rules-dump.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use reasonbench::eval::{aggregate_report, evaluate, InstanceMeta};
use reasonbench::grounding::InstanceRecord;
use reasonbench::oracle::{Oracle, OracleError};
use reasonbench::pipeline::{
    generate, read_records, replay, stats_of, to_jsonl, verify_records, GenConfig, GenerateError, Manifest,
};
use reasonbench::rules::{dump_json, LogicClass};
use reasonbench::solver::{
    solve_records, HeuristicProvider, SolveError, SubprocessProvider, DEFAULT_MAX_ITERATIONS,
};

#[derive(Parser)]
#[command(name = "reasonbench", version, about = "Build, check, solve and score symbolic reasoning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate verified instances from a config, or replay a manifest.
    Generate {
        #[arg(long, required_unless_present = "replay", conflicts_with = "replay")]
        config: Option<PathBuf>,
        /// Regenerate the dataset recorded in a manifest.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        lexicon_dir: Option<PathBuf>,
    },
    /// Re-check chains, answers and modality needs of instances.
    Verify {
        instances: PathBuf,
        /// Per-instance verdicts as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the iterative solver over instances.
    Solve {
        instances: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iters: usize,
        /// Command answering heuristic queries; see the README for the protocol.
        #[arg(long)]
        heuristic_cmd: Option<String>,
        #[arg(long, default_value_t = 30_000)]
        heuristic_timeout_ms: u64,
        /// Only solve instances of these logic types, e.g. `PL,NM`.
        #[arg(long, value_delimiter = ',')]
        logic_classes: Vec<LogicClass>,
    },
    /// Score predictions against gold instances.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Dataset statistics as JSON.
    Stats {
        instances: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The rule catalog as JSON.
    RulesDump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

const VERIFY_FAILED: u8 = 2;
const RESOURCE_CAP: u8 = 3;

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        let code = match e {
            GenerateError::Unreachable { .. } => RESOURCE_CAP,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

fn load_instances(path: &Path) -> Result<Vec<InstanceRecord>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    read_records(BufReader::new(file)).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line)
            .map_err(|e| Failure::usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

fn manifest_path(out: &Path, manifest: Option<PathBuf>) -> PathBuf {
    manifest.unwrap_or_else(|| {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            replay: replay_from,
            out,
            manifest,
            seed,
            workers,
            lexicon_dir,
        } => {
            let generated = match (config, replay_from) {
                (Some(path), None) => {
                    let mut config = GenConfig::from_json(&read_file(&path)?).map_err(|e| Failure::usage(e.to_string()))?;
                    if let Some(s) = seed {
                        config.seed = s;
                    }
                    if let Some(w) = workers {
                        config.workers = w;
                    }
                    if let Some(d) = lexicon_dir {
                        config.lexicon_dir = d;
                    }
                    generate(&config)?
                }
                (None, Some(path)) => {
                    if seed.is_some() || lexicon_dir.is_some() {
                        return Err(Failure::usage("--seed and --lexicon-dir cannot change a replayed run"));
                    }
                    let m: Manifest = serde_json::from_str(&read_file(&path)?)
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    replay(&m)?
                }
                _ => return Err(Failure::usage("give exactly one of --config or --replay")),
            };
            write_file(&out, &generated.jsonl())?;
            write_file(&manifest_path(&out, manifest), &pretty(&generated.manifest))?;
            eprintln!(
                "wrote {} instances to {} ({} rejected attempts)",
                generated.records.len(),
                out.display(),
                generated.manifest.rejections.len()
            );
            Ok(())
        }
        Command::Verify { instances, out } => {
            let records = load_instances(&instances)?;
            let verdicts = verify_records(&records, &Oracle::default());
            if let Some(p) = &out {
                write_file(p, &to_jsonl(&verdicts))?;
            }
            let bad: Vec<_> = verdicts.iter().filter(|v| !v.ok()).collect();
            for v in &bad {
                eprintln!("{}: {}", v.id, v.problems.join("; "));
            }
            eprintln!("{} of {} instances verified", verdicts.len() - bad.len(), verdicts.len());
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Failure {
                    code: VERIFY_FAILED,
                    message: format!("{} instances failed verification", bad.len()),
                })
            }
        }
        Command::Solve {
            instances,
            out,
            max_iters,
            heuristic_cmd,
            heuristic_timeout_ms,
            logic_classes,
        } => {
            let mut records = load_instances(&instances)?;
            if !logic_classes.is_empty() {
                let keep: BTreeSet<LogicClass> = logic_classes.into_iter().collect();
                records.retain(|r| keep.contains(&r.logic_type));
            }
            records.sort_by(|a, b| a.id.cmp(&b.id));
            let provider = match heuristic_cmd {
                Some(cmd) => Some(
                    SubprocessProvider::from_command_line(&cmd, heuristic_timeout_ms)
                        .ok_or_else(|| Failure::usage("--heuristic-cmd is empty or badly quoted"))?,
                ),
                None => None,
            };
            let provider = provider.as_ref().map(|p| p as &dyn HeuristicProvider);
            let mut predictions = Vec::with_capacity(records.len());
            for (r, result) in records.iter().zip(solve_records(&records, provider, max_iters, &Oracle::default())) {
                match result {
                    Ok(p) => predictions.push(p),
                    Err(SolveError::Oracle(OracleError::BudgetExhausted)) => {
                        return Err(Failure {
                            code: RESOURCE_CAP,
                            message: format!("{}: oracle budget exhausted", r.id),
                        })
                    }
                    Err(SolveError::NoIterations) => return Err(Failure::usage("--max-iters must be at least 1")),
                    Err(e) => return Err(Failure::usage(format!("{}: {e}", r.id))),
                }
            }
            write_file(&out, &to_jsonl(&predictions))?;
            Ok(())
        }
        Command::Score { gold, pred, out, table } => {
            let gold = load_instances(&gold)?;
            let preds = load_jsonl(&pred)?;
            let records = evaluate(&gold, &preds).map_err(|e| Failure::usage(e.to_string()))?;
            let meta: BTreeMap<String, InstanceMeta> = gold.iter().map(|r| (r.id.clone(), InstanceMeta::from(r))).collect();
            let report = aggregate_report(&records, &meta).map_err(|e| Failure::usage(e.to_string()))?;
            let doc = serde_json::json!({ "report": report, "records": records });
            write_file(&out, &pretty(&doc))?;
            if let Some(t) = table {
                write_file(&t, &report.to_table())?;
            }
            Ok(())
        }
        Command::Stats { instances, out } => {
            let records = load_instances(&instances)?;
            emit(out.as_deref(), &pretty(&stats_of(&records)))
        }
        Command::RulesDump { out } => emit(out.as_deref(), &pretty(&dump_json())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
