//! Influence diagrams, decision trees, and their evaluators.
//!
//! Two independent evaluation routes are provided: compiling a diagram to
//! a decision tree and folding it back ([`evaluate_diagram`]), and brute
//! forcing every policy ([`enumerate_policies`]). They must always agree;
//! the test suites hold them to that.

mod compile;
mod diagram;
mod enumerate;
mod tree;

use thiserror::Error;

pub use compile::{compile_to_tree, evaluate_diagram};
pub use diagram::{
    assignment_index, joint_count, validate_diagram, ChanceNode, DecisionNode, InfluenceDiagram,
    NodeKind, UtilityTable, ValidationReport, Violation, PROB_TOL,
};
pub use enumerate::{
    enumerate_policies, enumerate_policies_capped, policy_space_size, DEFAULT_WORK_CAP,
};
pub use tree::{
    fold_back, ChanceBranch, DecisionChild, DecisionTree, Evaluation, PolicyEntry, TreeNode,
};

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("invalid influence diagram: {0}")]
    Invalid(ValidationReport),
    #[error("cannot order diagram nodes into a tree: {0}")]
    Unorderable(String),
    #[error("malformed decision tree: {0}")]
    MalformedTree(String),
    #[error("policy enumeration needs {required} scored terms, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },
    #[error("tree contains no decision node")]
    NoDecision,
    #[error("parse error: {0}")]
    Parse(String),
}
