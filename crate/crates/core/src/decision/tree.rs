//! Decision trees and their backward-induction evaluation.
//!
//! Evaluation takes the probability-weighted mean at chance nodes and the
//! maximum at decision nodes, working leaves-to-root. Ties at a decision
//! node always go to the lowest-index child so results are deterministic.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagram::PROB_TOL;
use super::DecisionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionChild {
    pub action: String,
    pub node: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceBranch {
    pub outcome: String,
    pub probability: f64,
    pub node: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Decision {
        label: String,
        children: Vec<DecisionChild>,
    },
    Chance {
        label: String,
        children: Vec<ChanceBranch>,
    },
    Terminal {
        utility: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, DecisionError> {
        serde_json::from_str(text).map_err(|e| DecisionError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DecisionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DecisionError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// The optimal action at one decision node instance. `context` holds the
/// branch labels taken from the root down to that node, keyed by node
/// label, so the same decision reached under different observations gets
/// distinct entries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub decision: String,
    pub context: BTreeMap<String, String>,
    pub action: String,
}

/// Result of evaluating a tree or diagram.
///
/// `expected_utility` is the value of the optimal policy. `action_values`
/// holds, per alternative of the first decision, the value of committing
/// that decision to the alternative while choosing optimally everywhere
/// else. When nothing is observed before the first decision (the default),
/// the two views coincide and `expected_utility == max(action_values)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub best_action: String,
    pub expected_utility: f64,
    pub action_values: BTreeMap<String, f64>,
    pub policy: Vec<PolicyEntry>,
}

impl Evaluation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evaluation serialization cannot fail")
    }
}

/// Evaluate a tree by averaging out at chance nodes and folding back the
/// maximum at decision nodes.
pub fn fold_back(tree: &DecisionTree) -> Result<Evaluation, DecisionError> {
    let first = first_decision(&tree.root).ok_or(DecisionError::NoDecision)?;
    let first_label = match first {
        TreeNode::Decision { label, .. } => label.clone(),
        _ => unreachable!(),
    };

    let mut policy = Vec::new();
    let mut path = Vec::new();
    let mut action_values = BTreeMap::new();

    let (expected_utility, best_action) = match &tree.root {
        TreeNode::Decision { label, children } => {
            // Root decision: its child values are exactly the per-action
            // expected utilities, so fold each child once.
            if children.is_empty() {
                return Err(DecisionError::MalformedTree(format!(
                    "decision `{label}` has no children"
                )));
            }
            let mut values = Vec::with_capacity(children.len());
            for child in children {
                path.push((label.clone(), child.action.clone()));
                let v = fold(&child.node, &mut path, &mut policy)?;
                path.pop();
                values.push((child.action.as_str(), v));
                action_values.insert(child.action.clone(), v);
            }
            let best = argmax(values.into_iter());
            policy.push(PolicyEntry {
                decision: label.clone(),
                context: BTreeMap::new(),
                action: best.clone(),
            });
            (action_values[&best], best)
        }
        _ => {
            let expected = fold(&tree.root, &mut path, &mut policy)?;
            let order = first_actions(first);
            for action in &order {
                let v = fold_committed(&tree.root, &first_label, action)?;
                action_values.insert(action.clone(), v);
            }
            let best = argmax(order.iter().map(|a| (a.as_str(), action_values[a])));
            (expected, best)
        }
    };

    policy.sort();
    Ok(Evaluation {
        best_action,
        expected_utility,
        action_values,
        policy,
    })
}

fn argmax<'a>(values: impl Iterator<Item = (&'a str, f64)>) -> String {
    let mut best: Option<(&str, f64)> = None;
    for (label, v) in values {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((label, v)),
        }
    }
    best.map(|(l, _)| l.to_string()).unwrap_or_default()
}

fn fold(
    node: &TreeNode,
    path: &mut Vec<(String, String)>,
    policy: &mut Vec<PolicyEntry>,
) -> Result<f64, DecisionError> {
    match node {
        TreeNode::Terminal { utility } => Ok(*utility),
        TreeNode::Chance { label, children } => {
            check_branch_probabilities(label, children)?;
            let mut value = 0.0;
            for branch in children {
                path.push((label.clone(), branch.outcome.clone()));
                let v = fold(&branch.node, path, policy)?;
                path.pop();
                value += branch.probability * v;
            }
            Ok(value)
        }
        TreeNode::Decision { label, children } => {
            if children.is_empty() {
                return Err(DecisionError::MalformedTree(format!(
                    "decision `{label}` has no children"
                )));
            }
            let mut best_value = f64::NEG_INFINITY;
            let mut best_action = &children[0].action;
            for child in children {
                path.push((label.clone(), child.action.clone()));
                let v = fold(&child.node, path, policy)?;
                path.pop();
                if v > best_value {
                    best_value = v;
                    best_action = &child.action;
                }
            }
            policy.push(PolicyEntry {
                decision: label.clone(),
                context: path.iter().cloned().collect(),
                action: best_action.clone(),
            });
            Ok(best_value)
        }
    }
}

/// Fold with every instance of decision `target` pinned to `action`.
fn fold_committed(node: &TreeNode, target: &str, action: &str) -> Result<f64, DecisionError> {
    match node {
        TreeNode::Terminal { utility } => Ok(*utility),
        TreeNode::Chance { label, children } => {
            check_branch_probabilities(label, children)?;
            let mut value = 0.0;
            for branch in children {
                value += branch.probability * fold_committed(&branch.node, target, action)?;
            }
            Ok(value)
        }
        TreeNode::Decision { label, children } => {
            if label == target {
                let child = children
                    .iter()
                    .find(|c| c.action == action)
                    .ok_or_else(|| {
                        DecisionError::MalformedTree(format!(
                            "decision `{label}` is missing child `{action}`"
                        ))
                    })?;
                fold_committed(&child.node, target, action)
            } else {
                let mut best = f64::NEG_INFINITY;
                for child in children {
                    best = best.max(fold_committed(&child.node, target, action)?);
                }
                if children.is_empty() {
                    return Err(DecisionError::MalformedTree(format!(
                        "decision `{label}` has no children"
                    )));
                }
                Ok(best)
            }
        }
    }
}

fn check_branch_probabilities(label: &str, children: &[ChanceBranch]) -> Result<(), DecisionError> {
    if children.is_empty() {
        return Err(DecisionError::MalformedTree(format!(
            "chance `{label}` has no branches"
        )));
    }
    let sum: f64 = children.iter().map(|b| b.probability).sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(DecisionError::MalformedTree(format!(
            "chance `{label}` branch probabilities sum to {sum}"
        )));
    }
    Ok(())
}

/// First decision node encountered in pre-order; for compiled trees this is
/// the first decision in `decision_order`.
fn first_decision(node: &TreeNode) -> Option<&TreeNode> {
    match node {
        TreeNode::Decision { .. } => Some(node),
        TreeNode::Chance { children, .. } => children.iter().find_map(|b| first_decision(&b.node)),
        TreeNode::Terminal { .. } => None,
    }
}

fn first_actions(node: &TreeNode) -> Vec<String> {
    match node {
        TreeNode::Decision { children, .. } => children.iter().map(|c| c.action.clone()).collect(),
        _ => Vec::new(),
    }
}
