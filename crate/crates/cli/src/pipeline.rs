//! Runs a sequence of steps described by a JSON config.
//!
//! ```json
//! {
//!   "inputs": ["demo.pidl"],
//!   "steps": [
//!     {"step": "ingest"},
//!     {"step": "filter", "params": {"profile": "steady"}},
//!     {"step": "validate"},
//!     {"step": "rewrite", "params": {"rules": "rules.json", "log": "log.json"}},
//!     {"step": "solve", "params": {"output": "solution.json"}},
//!     {"step": "export", "params": {"format": "simspec"}}
//!   ],
//!   "output": "demo.sim.json"
//! }
//! ```
//!
//! Paths are relative to the config file. The graph flows from step to step;
//! `merge` takes the next unused input as its second graph. The final output
//! is the last export, or the graph itself when no export ran last. Any step
//! may also write its result to an `output` param.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::ops::{self, CliError, ExportFormat, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Ingest,
    Filter,
    Rewrite,
    Merge,
    Validate,
    Solve,
    Export,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub step: StepKind,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub steps: Vec<StepConfig>,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IngestParams {
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterParams {
    profile: String,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateParams {
    profile: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewriteParams {
    rules: PathBuf,
    log: Option<PathBuf>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeParams {
    policy: Option<PathBuf>,
    conflicts: Option<PathBuf>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveParams {
    output: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportParams {
    format: ExportFormat,
    output: Option<PathBuf>,
}

fn params<T: DeserializeOwned>(index: usize, step: &StepConfig) -> Result<T> {
    serde_json::from_value(Value::Object(step.params.clone()))
        .map_err(|e| CliError::Usage(format!("step {} ({:?}): {e}", index + 1, step.step)))
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("pipeline config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    /// Structural checks that need no file access.
    fn check(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(format!("pipeline config: {m}")));
        if self.steps.is_empty() {
            return usage("no steps".into());
        }
        if self.inputs.is_empty() {
            return usage("no inputs".into());
        }
        if let Some(i) = self.steps.iter().skip(1).position(|s| s.step == StepKind::Ingest) {
            return usage(format!("step {} is ingest; only the first step may ingest", i + 2));
        }
        if self.steps[0].step != StepKind::Ingest && self.inputs[0].extension().is_some_and(|e| e == "pidl") {
            return usage("a PIDL input needs an ingest step first".into());
        }
        let merges = self.steps.iter().filter(|s| s.step == StepKind::Merge).count();
        if merges + 1 != self.inputs.len() {
            return usage(format!(
                "{} input(s) given but {} merge step(s); expected one input per merge plus one",
                self.inputs.len(),
                merges
            ));
        }
        Ok(())
    }
}

enum Output {
    Graph,
    Text(String),
}

/// Runs `config` with paths resolved against `base`.
pub fn run(config: &PipelineConfig, base: &Path) -> Result<()> {
    let at = |p: &Path| base.join(p);
    let mut inputs = config.inputs.iter().map(|p| at(p));
    let first = inputs.next().expect("checked nonempty");
    let mut graph = ops::load_graph(&first)?;
    let mut last = Output::Graph;

    for (i, step) in config.steps.iter().enumerate() {
        eprintln!("step {}: {:?}", i + 1, step.step);
        let mut step_output = None;
        last = Output::Graph;
        match step.step {
            StepKind::Ingest => {
                let p: IngestParams = params(i, step)?;
                step_output = p.output;
            }
            StepKind::Filter => {
                let p: FilterParams = params(i, step)?;
                graph = ops::filter(&graph, &ops::load_profile(&p.profile, base)?)?;
                step_output = p.output;
            }
            StepKind::Validate => {
                let p: ValidateParams = params(i, step)?;
                let profile = ops::load_profile(p.profile.as_deref().unwrap_or("steady"), base)?;
                ops::check(&graph, &profile)?;
            }
            StepKind::Rewrite => {
                let p: RewriteParams = params(i, step)?;
                let (out, log) = ops::rewrite(&graph, &ops::load_rules(&at(&p.rules))?)?;
                graph = out;
                if let Some(log_path) = p.log {
                    ops::write_text(&at(&log_path), &log.to_json())?;
                }
                step_output = p.output;
            }
            StepKind::Merge => {
                let p: MergeParams = params(i, step)?;
                let other = ops::load_graph(&inputs.next().expect("checked count"))?;
                let policy = ops::load_policy(p.policy.map(|q| at(&q)).as_deref())?;
                let (out, conflicts) = ops::merge_graphs(&graph, &other, &policy)?;
                graph = out;
                if let Some(c) = p.conflicts {
                    ops::write_text(&at(&c), &ops::conflicts_text(&conflicts))?;
                }
                step_output = p.output;
            }
            StepKind::Solve => {
                let p: SolveParams = params(i, step)?;
                let solution = ops::solve(&graph)?;
                ops::write_text(&at(&p.output), &solution.to_json())?;
            }
            StepKind::Export => {
                let p: ExportParams = params(i, step)?;
                let text = ops::export(&graph, p.format)?;
                if let Some(out) = p.output {
                    ops::write_text(&at(&out), &text)?;
                }
                last = Output::Text(text);
                continue;
            }
        }
        if let Some(out) = step_output {
            ops::write_text(&at(&out), &ops::graph_text(&graph))?;
        }
    }

    let final_text = match last {
        Output::Graph => ops::graph_text(&graph),
        Output::Text(text) => text,
    };
    ops::write_text(&at(&config.output), &final_text)
}
