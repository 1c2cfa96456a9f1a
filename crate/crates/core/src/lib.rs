//! Process-plant graph model and the passes that turn P&ID data into
//! simulation-ready models.
//!
//! ```
//! use pidtwin_core::{fixtures, solve_steady_state};
//!
//! let plant = fixtures::splitter_plant();
//! let solution = solve_steady_state(&plant).unwrap();
//! assert_eq!(solution.flows["E3"], 2.5);
//! ```

pub mod balance;
pub mod export;
pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod transform;
pub mod validate;

pub use balance::{build_equations, solve_steady_state, BalanceError, FlowSolution, LinearSystem};
pub use export::{to_dot, to_graphml, to_json, to_simspec, ExportError, SimSpec};
pub use graph::{
    AttrValue, Attrs, Direction, Edge, EdgeKind, Endpoint, GraphError, Node, NodeKind, Nozzle, Position,
    ProcessGraph,
};
pub use ingest::{parse, parse_graph_json, parse_pidl, IngestError, ParseError, SourceDoc, SourceFormat};
pub use transform::{
    apply_ruleset, filter_fidelity, merge, ConfigError, Conflict, FidelityProfile, MergePolicy, RewriteLog, RuleSet,
    TransformError,
};
pub use validate::{validate, Finding, Severity, ValidationReport};
