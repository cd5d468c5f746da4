//! Detection of multi-parameter inconsistencies between API documentation
//! and Python library code.
//!
//! Documentation constraints are written in a small logic over parameter
//! comparisons. Function bodies are lowered to path constraints, and the two
//! are compared crisply through a satisfiability check or fuzzily through a
//! membership degree that tolerates misspelled names and nearby operators.

pub mod checker;
pub mod code_model;
pub mod constraint;
pub mod corpus;
pub mod docstrings;
pub mod extraction;
pub mod fcl;
pub mod sat;

pub use checker::{
    check, check_crisp, check_fuzzy, check_usage_predicate, classify, CheckConfig, Evidence, Kind, Status, Summary,
    Verdict,
};
pub use code_model::{
    enumerate_paths, ignored_conditions, is_used, slice_under_condition, FunctionModel, ModelError, PathConstraint,
    PathSet, Terminal, Truthiness,
};
pub use constraint::{parse_constraint, Constraint, Expression, Operator, ParseError, PredKind, Value};
pub use corpus::{CorpusRecord, Label, MutationPattern};
pub use docstrings::{DocUnit, ParamDoc};
pub use extraction::{ExtractionResult, LlmClient, MockClient, ReplayClient};
pub use fcl::{FclConfig, Membership};
pub use sat::{check_sat, is_satisfiable, SatResult};
