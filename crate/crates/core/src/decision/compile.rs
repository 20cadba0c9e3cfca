//! Compilation of influence diagrams into decision trees.
//!
//! The tree interleaves decisions (in `decision_order`) with the chance
//! nodes observed before each of them; chance nodes nobody observes are
//! appended after the last decision in dependency order. Branch
//! probabilities come straight from CPT rows conditioned on the path and
//! leaves carry utility-table lookups.

use std::collections::HashMap;

use super::diagram::{assignment_index, validate_diagram, InfluenceDiagram, NodeKind};
use super::tree::{fold_back, ChanceBranch, DecisionChild, DecisionTree, Evaluation, TreeNode};
use super::DecisionError;

/// One level of the compiled tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Placed {
    Decision(usize),
    Chance(usize),
}

/// Order nodes so that every node appears after its parents, decisions
/// appear in `decision_order`, and observed chance nodes appear directly
/// before the decision that observes them.
pub(crate) fn placement_order(d: &InfluenceDiagram) -> Result<Vec<Placed>, DecisionError> {
    let index = d.node_index();
    let mut placed_flags: HashMap<&str, bool> = HashMap::new();
    let mut order = Vec::with_capacity(d.decisions.len() + d.chances.len());

    let parents_placed = |c: usize, flags: &HashMap<&str, bool>| {
        d.chances[c]
            .parents
            .iter()
            .all(|p| flags.get(p.as_str()).copied().unwrap_or(false))
    };

    for dec_id in &d.decision_order {
        if let Some(observed) = d.observed_before.get(dec_id) {
            let mut pending: Vec<&str> = observed.iter().map(String::as_str).collect();
            while !pending.is_empty() {
                let before = pending.len();
                pending.retain(|obs_id| {
                    let Some(NodeKind::Chance(c)) = index.get(obs_id) else {
                        return true;
                    };
                    if parents_placed(*c, &placed_flags) {
                        order.push(Placed::Chance(*c));
                        placed_flags.insert(d.chances[*c].id.as_str(), true);
                        false
                    } else {
                        true
                    }
                });
                if pending.len() == before {
                    return Err(DecisionError::Unorderable(format!(
                        "observed nodes {pending:?} for decision `{dec_id}` depend on values not yet known"
                    )));
                }
            }
        }
        let Some(NodeKind::Decision(i)) = index.get(dec_id.as_str()) else {
            return Err(DecisionError::Unorderable(format!(
                "decision_order entry `{dec_id}` is not a decision"
            )));
        };
        order.push(Placed::Decision(*i));
        placed_flags.insert(dec_id.as_str(), true);
    }

    // Remaining (unobserved) chance nodes, in dependency order.
    loop {
        let mut progressed = false;
        for (c, node) in d.chances.iter().enumerate() {
            if placed_flags.get(node.id.as_str()).copied().unwrap_or(false) {
                continue;
            }
            if parents_placed(c, &placed_flags) {
                order.push(Placed::Chance(c));
                placed_flags.insert(node.id.as_str(), true);
                progressed = true;
            }
        }
        let remaining = d
            .chances
            .iter()
            .filter(|c| !placed_flags.contains_key(c.id.as_str()))
            .count();
        if remaining == 0 {
            break;
        }
        if !progressed {
            return Err(DecisionError::Unorderable(
                "chance nodes cannot be ordered; the parent graph is cyclic".into(),
            ));
        }
    }

    Ok(order)
}

/// Compile a valid influence diagram into its decision tree.
pub fn compile_to_tree(d: &InfluenceDiagram) -> Result<DecisionTree, DecisionError> {
    let report = validate_diagram(d);
    if !report.is_ok() {
        return Err(DecisionError::Invalid(report));
    }
    let order = placement_order(d)?;
    let index = d.node_index();

    // Pre-resolve parent lists to (kind, index) and cardinalities.
    let chance_parent_refs: Vec<Vec<NodeKind>> = d
        .chances
        .iter()
        .map(|c| c.parents.iter().map(|p| index[p.as_str()]).collect())
        .collect();
    let utility_parent_refs: Vec<NodeKind> = d
        .utility
        .parents
        .iter()
        .map(|p| index[p.as_str()])
        .collect();

    let builder = TreeBuilder {
        d,
        order: &order,
        chance_parent_refs: &chance_parent_refs,
        utility_parent_refs: &utility_parent_refs,
    };
    // Assignment along the current path: value index per decision / chance.
    let mut decided = vec![usize::MAX; d.decisions.len()];
    let mut realized = vec![usize::MAX; d.chances.len()];
    let root = builder.build(0, &mut decided, &mut realized);
    Ok(DecisionTree { root })
}

struct TreeBuilder<'a> {
    d: &'a InfluenceDiagram,
    order: &'a [Placed],
    chance_parent_refs: &'a [Vec<NodeKind>],
    utility_parent_refs: &'a [NodeKind],
}

impl TreeBuilder<'_> {
    fn card_of(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Decision(i) => self.d.decisions[i].alternatives.len(),
            NodeKind::Chance(i) => self.d.chances[i].outcomes.len(),
        }
    }

    fn build(&self, level: usize, decided: &mut [usize], realized: &mut [usize]) -> TreeNode {
        if level == self.order.len() {
            let cards: Vec<usize> = self
                .utility_parent_refs
                .iter()
                .map(|&k| self.card_of(k))
                .collect();
            let values: Vec<usize> = self
                .utility_parent_refs
                .iter()
                .map(|&k| match k {
                    NodeKind::Decision(i) => decided[i],
                    NodeKind::Chance(i) => realized[i],
                })
                .collect();
            let utility = self.d.utility.values[assignment_index(&cards, &values)];
            return TreeNode::Terminal { utility };
        }
        match self.order[level] {
            Placed::Decision(i) => {
                let node = &self.d.decisions[i];
                let children = node
                    .alternatives
                    .iter()
                    .enumerate()
                    .map(|(a, action)| {
                        decided[i] = a;
                        DecisionChild {
                            action: action.clone(),
                            node: self.build(level + 1, decided, realized),
                        }
                    })
                    .collect();
                decided[i] = usize::MAX;
                TreeNode::Decision {
                    label: node.id.clone(),
                    children,
                }
            }
            Placed::Chance(i) => {
                let node = &self.d.chances[i];
                let cards: Vec<usize> = self.chance_parent_refs[i]
                    .iter()
                    .map(|&k| self.card_of(k))
                    .collect();
                let values: Vec<usize> = self.chance_parent_refs[i]
                    .iter()
                    .map(|&k| match k {
                        NodeKind::Decision(j) => decided[j],
                        NodeKind::Chance(j) => realized[j],
                    })
                    .collect();
                let row = &node.cpt[assignment_index(&cards, &values)];
                let children = node
                    .outcomes
                    .iter()
                    .enumerate()
                    .map(|(o, outcome)| {
                        realized[i] = o;
                        ChanceBranch {
                            outcome: outcome.clone(),
                            probability: row[o],
                            node: self.build(level + 1, decided, realized),
                        }
                    })
                    .collect();
                realized[i] = usize::MAX;
                TreeNode::Chance {
                    label: node.id.clone(),
                    children,
                }
            }
        }
    }
}

/// Compile and fold back in one call.
pub fn evaluate_diagram(d: &InfluenceDiagram) -> Result<Evaluation, DecisionError> {
    fold_back(&compile_to_tree(d)?)
}
