//! Operations shared by the subcommands and the pipeline runner. Both paths
//! go through these functions, so their outputs agree byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pidtwin_core::balance::{solve_steady_state, BalanceError, FlowSolution};
use pidtwin_core::export::{to_dot, to_graphml, to_json, to_simspec};
use pidtwin_core::transform::{
    apply_ruleset, conflicts_to_json, filter_fidelity, merge, Conflict, FidelityProfile, MergePolicy, RewriteLog,
    RuleSet,
};
use pidtwin_core::validate::{validate, Severity};
use pidtwin_core::{parse, IngestError, ProcessGraph, SourceDoc};

/// Meta key naming the simulator a graph was rewritten for.
pub const SIMULATOR_KEY: &str = "simulator";
/// Simulator name used when a graph was never rewritten.
pub const DEFAULT_SIMULATOR: &str = "generic";

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration.
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    /// An input file that does not parse.
    Input { path: PathBuf, message: String },
    /// A transform or export that refused its input.
    Operation(String),
    /// Validation found errors; already reported.
    Validation { errors: usize },
    Solver(BalanceError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Solver(_) => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Operation(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Input { path, message } => {
                let lines: Vec<String> = message.lines().map(|l| format!("{}:{l}", path.display())).collect();
                f.write_str(&lines.join("\n"))
            }
            CliError::Validation { errors } => write!(f, "validation failed with {errors} error(s)"),
            CliError::Solver(e) => write!(f, "solver: {e}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Input {
        path: path.to_path_buf(),
        message: " not valid UTF-8".into(),
    })
}

/// Writes `text` with exactly one trailing newline.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, body).map_err(io)
}

fn input_error(path: &Path, message: impl fmt::Display) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Loads a graph: `.pidl` files as PIDL, anything else as GraphJSON.
pub fn load_graph(path: &Path) -> Result<ProcessGraph> {
    let content = read(path)?;
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let doc = if path.extension().is_some_and(|e| e == "pidl") {
        SourceDoc::pidl(id, content)
    } else {
        SourceDoc::graph_json(id, content)
    };
    parse(&doc).map_err(|e| match e {
        IngestError::Parse(errors) => input_error(
            path,
            errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"),
        ),
        other => input_error(path, format!(" {other}")),
    })
}

/// A preset name (`steady`, `steady_state`, `dynamic`) or a profile file.
pub fn load_profile(spec: &str, base: &Path) -> Result<FidelityProfile> {
    if let Some(p) = FidelityProfile::preset(spec) {
        return Ok(p);
    }
    let path = base.join(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "unknown profile '{spec}': not a preset (steady, dynamic) and no such file"
        )));
    }
    FidelityProfile::from_json(&read_text(&path)?).map_err(|e| input_error(&path, format!(" {e}")))
}

pub fn load_rules(path: &Path) -> Result<RuleSet> {
    RuleSet::from_json(&read_text(path)?).map_err(|e| input_error(path, format!(" {e}")))
}

pub fn load_policy(path: Option<&Path>) -> Result<MergePolicy> {
    match path {
        None => Ok(MergePolicy::default()),
        Some(p) => MergePolicy::from_json(&read_text(p)?).map_err(|e| input_error(p, format!(" {e}"))),
    }
}

fn operation(e: impl fmt::Display) -> CliError {
    CliError::Operation(e.to_string())
}

pub fn filter(graph: &ProcessGraph, profile: &FidelityProfile) -> Result<ProcessGraph> {
    filter_fidelity(graph, profile).map_err(operation)
}

/// Reports every finding on stderr; fails if any is an error.
pub fn check(graph: &ProcessGraph, profile: &FidelityProfile) -> Result<()> {
    let report = validate(graph, profile);
    for f in &report.findings {
        eprintln!("{f}");
    }
    let errors = report.findings.iter().filter(|f| f.severity == Severity::Error).count();
    if report.passed {
        eprintln!("validation passed ({} finding(s))", report.findings.len());
        Ok(())
    } else {
        Err(CliError::Validation { errors })
    }
}

/// Applies the rules and records the target simulator in the graph meta.
pub fn rewrite(graph: &ProcessGraph, rules: &RuleSet) -> Result<(ProcessGraph, RewriteLog)> {
    let (mut out, log) = apply_ruleset(graph, rules).map_err(operation)?;
    out.set_meta(SIMULATOR_KEY, rules.simulator_name.clone());
    Ok((out, log))
}

pub fn merge_graphs(a: &ProcessGraph, b: &ProcessGraph, policy: &MergePolicy) -> Result<(ProcessGraph, Vec<Conflict>)> {
    let (g, conflicts) = merge(a, b, policy).map_err(operation)?;
    for c in &conflicts {
        eprintln!(
            "conflict: {} '{}' key '{}': {} vs {}",
            match c.element {
                pidtwin_core::transform::Element::Node => "node",
                pidtwin_core::transform::Element::Edge => "edge",
            },
            c.tag,
            c.key,
            c.value_a,
            c.value_b
        );
    }
    Ok((g, conflicts))
}

pub fn conflicts_text(conflicts: &[Conflict]) -> String {
    conflicts_to_json(conflicts)
}

pub fn solve(graph: &ProcessGraph) -> Result<FlowSolution> {
    let solution = solve_steady_state(graph).map_err(CliError::Solver)?;
    for w in &solution.capacity_warnings {
        eprintln!("capacity: pump '{}' carries {} above max_flow {}", w.node, w.flow, w.max_flow);
    }
    Ok(solution)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Dot,
    Graphml,
    Simspec,
}

pub fn export(graph: &ProcessGraph, format: ExportFormat) -> Result<String> {
    Ok(match format {
        ExportFormat::Dot => to_dot(graph),
        ExportFormat::Graphml => to_graphml(graph),
        ExportFormat::Simspec => {
            let name = graph
                .meta()
                .get(SIMULATOR_KEY)
                .map_or(DEFAULT_SIMULATOR, String::as_str);
            to_simspec(graph, name).map_err(operation)?.to_json()
        }
    })
}

pub fn graph_text(graph: &ProcessGraph) -> String {
    to_json(graph)
}
