//! Influence-diagram node types, tables, and structural validation.
//!
//! Tables are stored flat: conditional probability tables hold one row per
//! joint parent assignment, and utility tables one value per joint parent
//! assignment, both in row-major order with the *last* parent varying
//! fastest. `docs/formats.md` documents the JSON encoding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DecisionError;

/// Tolerance for probability-row sums. Rows further off than this are
/// rejected by validation, never renormalized.
pub const PROB_TOL: f64 = 1e-9;

/// A random variable with a discrete outcome space and a CPT over its
/// parents (decisions or other chance nodes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceNode {
    pub id: String,
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    /// One probability row per joint parent assignment.
    pub cpt: Vec<Vec<f64>>,
}

/// A choice point with a fixed, ordered set of alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionNode {
    pub id: String,
    pub alternatives: Vec<String>,
}

/// The single utility node: one real value per joint parent assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

/// A decision problem: decisions, chance nodes, and one utility node.
///
/// `decision_order` fixes the order in which decisions are taken.
/// `observed_before` optionally lists chance nodes whose outcome is known
/// before a given decision; by default nothing is observed, which puts the
/// first decision at the root of the compiled tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceDiagram {
    pub decisions: Vec<DecisionNode>,
    pub chances: Vec<ChanceNode>,
    pub utility: UtilityTable,
    pub decision_order: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observed_before: BTreeMap<String, Vec<String>>,
}

/// One broken rule, naming the offending node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: String,
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.node, self.rule, self.detail)
    }
}

/// Outcome of [`validate_diagram`]: empty means the diagram is well formed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Which kind of node an identifier resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Decision(usize),
    Chance(usize),
}

impl InfluenceDiagram {
    /// Map from node id to its kind and index. Duplicate ids keep the first
    /// entry; validation reports the duplicates.
    pub fn node_index(&self) -> HashMap<&str, NodeKind> {
        let mut map = HashMap::new();
        for (i, d) in self.decisions.iter().enumerate() {
            map.entry(d.id.as_str()).or_insert(NodeKind::Decision(i));
        }
        for (i, c) in self.chances.iter().enumerate() {
            map.entry(c.id.as_str()).or_insert(NodeKind::Chance(i));
        }
        map
    }

    /// Number of outcomes or alternatives of a node, if it exists.
    pub fn cardinality(&self, id: &str) -> Option<usize> {
        match self.node_index().get(id)? {
            NodeKind::Decision(i) => Some(self.decisions[*i].alternatives.len()),
            NodeKind::Chance(i) => Some(self.chances[*i].outcomes.len()),
        }
    }

    pub fn decision(&self, id: &str) -> Option<&DecisionNode> {
        self.decisions.iter().find(|d| d.id == id)
    }

    pub fn chance(&self, id: &str) -> Option<&ChanceNode> {
        self.chances.iter().find(|c| c.id == id)
    }

    /// The decision taken first, per `decision_order`.
    pub fn first_decision(&self) -> Option<&DecisionNode> {
        self.decision_order.first().and_then(|id| self.decision(id))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, DecisionError> {
        serde_json::from_str(text).map_err(|e| DecisionError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DecisionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DecisionError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), DecisionError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| DecisionError::Parse(format!("{}: {e}", path.display())))
    }
}

/// Flat index of one joint assignment, row-major with the last position
/// varying fastest.
pub fn assignment_index(cards: &[usize], values: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), values.len());
    let mut idx = 0;
    for (card, value) in cards.iter().zip(values) {
        debug_assert!(value < card);
        idx = idx * card + value;
    }
    idx
}

/// Product of cardinalities, i.e. the number of joint assignments.
pub fn joint_count(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Check every structural invariant of the diagram and report all failures.
pub fn validate_diagram(d: &InfluenceDiagram) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |node: &str, rule: &str, detail: String| {
        out.push(Violation {
            node: node.to_string(),
            rule: rule.to_string(),
            detail,
        })
    };

    // Unique ids across both node families.
    let mut seen = HashSet::new();
    for id in self_ids(d) {
        if !seen.insert(id) {
            push(id, "duplicate-id", "node id declared more than once".into());
        }
    }

    for dec in &d.decisions {
        if dec.alternatives.len() < 2 {
            push(
                &dec.id,
                "alternatives",
                format!(
                    "need at least 2 alternatives, found {}",
                    dec.alternatives.len()
                ),
            );
        }
        let mut alt_seen = HashSet::new();
        for a in &dec.alternatives {
            if a.is_empty() {
                push(&dec.id, "alternatives", "empty alternative label".into());
            }
            if !alt_seen.insert(a) {
                push(
                    &dec.id,
                    "alternatives",
                    format!("duplicate alternative `{a}`"),
                );
            }
        }
    }

    let index = d.node_index();

    for ch in &d.chances {
        if ch.outcomes.len() < 2 {
            push(
                &ch.id,
                "outcomes",
                format!("need at least 2 outcomes, found {}", ch.outcomes.len()),
            );
        }
        let mut seen_outcome = HashSet::new();
        for o in &ch.outcomes {
            if !seen_outcome.insert(o) {
                push(&ch.id, "outcomes", format!("duplicate outcome `{o}`"));
            }
        }
        let mut cards = Vec::with_capacity(ch.parents.len());
        let mut resolved = true;
        for p in &ch.parents {
            match index.get(p.as_str()) {
                Some(NodeKind::Decision(i)) => cards.push(d.decisions[*i].alternatives.len()),
                Some(NodeKind::Chance(i)) => cards.push(d.chances[*i].outcomes.len()),
                None => {
                    push(
                        &ch.id,
                        "unresolved-parent",
                        format!("parent `{p}` does not exist"),
                    );
                    resolved = false;
                }
            }
        }
        if resolved {
            let rows = joint_count(&cards);
            if ch.cpt.len() != rows {
                push(
                    &ch.id,
                    "row-count",
                    format!(
                        "expected one row per joint parent assignment ({rows}), found {}",
                        ch.cpt.len()
                    ),
                );
            }
        }
        for (r, row) in ch.cpt.iter().enumerate() {
            if row.len() != ch.outcomes.len() {
                push(
                    &ch.id,
                    "row-width",
                    format!(
                        "row {r} has {} entries for {} outcomes",
                        row.len(),
                        ch.outcomes.len()
                    ),
                );
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                push(
                    &ch.id,
                    "probability-range",
                    format!("row {r} has entries outside [0, 1]"),
                );
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                push(&ch.id, "row-sum", format!("row {r} sums to {sum}, not 1"));
            }
        }
    }

    // Acyclicity of the parent graph (decisions are parentless, so any
    // cycle runs through chance nodes).
    if let Some(cycle_node) = find_cycle(d, &index) {
        push(
            &cycle_node,
            "cycle",
            "node participates in a parent cycle".into(),
        );
    }

    // Utility table shape.
    let mut u_cards = Vec::new();
    let mut u_resolved = true;
    for p in &d.utility.parents {
        match index.get(p.as_str()) {
            Some(NodeKind::Decision(i)) => u_cards.push(d.decisions[*i].alternatives.len()),
            Some(NodeKind::Chance(i)) => u_cards.push(d.chances[*i].outcomes.len()),
            None => {
                push(
                    "utility",
                    "unresolved-parent",
                    format!("parent `{p}` does not exist"),
                );
                u_resolved = false;
            }
        }
    }
    if u_resolved {
        let want = joint_count(&u_cards);
        if d.utility.values.len() != want {
            push(
                "utility",
                "utility-count",
                format!("expected {want} values, found {}", d.utility.values.len()),
            );
        }
    }
    if d.utility.values.iter().any(|v| !v.is_finite()) {
        push(
            "utility",
            "utility-finite",
            "utility values must be finite".into(),
        );
    }

    // decision_order must be a permutation of the decision ids.
    let order_set: HashSet<&str> = d.decision_order.iter().map(String::as_str).collect();
    if d.decision_order.len() != d.decisions.len() || order_set.len() != d.decision_order.len() {
        push(
            "decision_order",
            "decision-order",
            "must list every decision exactly once".into(),
        );
    } else {
        for id in &d.decision_order {
            if !matches!(index.get(id.as_str()), Some(NodeKind::Decision(_))) {
                push(id, "decision-order", "entry is not a decision node".into());
            }
        }
    }

    // observed_before entries must name a decision and distinct chance nodes.
    for (dec_id, observed) in &d.observed_before {
        if !matches!(index.get(dec_id.as_str()), Some(NodeKind::Decision(_))) {
            push(
                dec_id,
                "observed",
                "observed_before key is not a decision".into(),
            );
        }
        let mut obs_seen = HashSet::new();
        for o in observed {
            if !matches!(index.get(o.as_str()), Some(NodeKind::Chance(_))) {
                push(
                    dec_id,
                    "observed",
                    format!("observed node `{o}` is not a chance node"),
                );
            }
            if !obs_seen.insert(o) {
                push(
                    dec_id,
                    "observed",
                    format!("observed node `{o}` listed twice"),
                );
            }
        }
    }

    ValidationReport { violations: out }
}

fn self_ids(d: &InfluenceDiagram) -> impl Iterator<Item = &str> {
    d.decisions
        .iter()
        .map(|n| n.id.as_str())
        .chain(d.chances.iter().map(|n| n.id.as_str()))
}

fn find_cycle(d: &InfluenceDiagram, index: &HashMap<&str, NodeKind>) -> Option<String> {
    // 0 = unvisited, 1 = in progress, 2 = done.
    let mut mark = vec![0u8; d.chances.len()];
    fn visit(
        i: usize,
        d: &InfluenceDiagram,
        index: &HashMap<&str, NodeKind>,
        mark: &mut [u8],
    ) -> Option<usize> {
        match mark[i] {
            1 => return Some(i),
            2 => return None,
            _ => {}
        }
        mark[i] = 1;
        for p in &d.chances[i].parents {
            if let Some(NodeKind::Chance(j)) = index.get(p.as_str()) {
                if let Some(hit) = visit(*j, d, index, mark) {
                    return Some(hit);
                }
            }
        }
        mark[i] = 2;
        None
    }
    for i in 0..d.chances.len() {
        if let Some(hit) = visit(i, d, index, &mut mark) {
            return Some(d.chances[hit].id.clone());
        }
    }
    None
}
