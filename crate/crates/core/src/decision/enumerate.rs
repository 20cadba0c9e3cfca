//! Exhaustive policy enumeration.
//!
//! Scores every deterministic policy by summing probability-weighted
//! utilities over all joint chance outcomes. Exponential by nature and
//! guarded by a work cap; it exists as the exact cross-check for the
//! compile-and-fold evaluation path and shares nothing with it beyond the
//! table indexing conventions.

use std::collections::BTreeMap;

use super::compile::{placement_order, Placed};
use super::diagram::{assignment_index, validate_diagram, InfluenceDiagram, NodeKind};
use super::tree::{Evaluation, PolicyEntry};
use super::DecisionError;

/// Default bound on scored terms (policies times joint chance outcomes).
pub const DEFAULT_WORK_CAP: u128 = 1_000_000;

/// Number of deterministic policies of a diagram, or `None` when it
/// overflows u128.
pub fn policy_space_size(d: &InfluenceDiagram) -> Option<u128> {
    let report = validate_diagram(d);
    if !report.is_ok() {
        return Some(0);
    }
    let order = placement_order(d).ok()?;
    let mut total: u128 = 1;
    for info in decision_infos(d, &order) {
        let alts = d.decisions[info.decision].alternatives.len() as u128;
        let mut per_decision: u128 = 1;
        for _ in 0..info.context_count {
            per_decision = per_decision.checked_mul(alts)?;
        }
        total = total.checked_mul(per_decision)?;
    }
    Some(total)
}

/// Enumerate with the default work cap.
pub fn enumerate_policies(d: &InfluenceDiagram) -> Result<Evaluation, DecisionError> {
    enumerate_policies_capped(d, DEFAULT_WORK_CAP)
}

struct DecisionInfo {
    decision: usize,
    /// Everything known when this decision is taken, in tree order.
    sources: Vec<Placed>,
    context_count: usize,
}

fn decision_infos(d: &InfluenceDiagram, order: &[Placed]) -> Vec<DecisionInfo> {
    let mut infos = Vec::new();
    for (pos, item) in order.iter().enumerate() {
        if let Placed::Decision(i) = item {
            let sources: Vec<Placed> = order[..pos].to_vec();
            let context_count = sources
                .iter()
                .map(|s| match s {
                    Placed::Decision(j) => d.decisions[*j].alternatives.len(),
                    Placed::Chance(j) => d.chances[*j].outcomes.len(),
                })
                .product();
            infos.push(DecisionInfo {
                decision: *i,
                sources,
                context_count,
            });
        }
    }
    infos
}

/// Enumerate every policy, score each exactly, and return the best with
/// the same lowest-index tie-break the fold-back evaluator uses.
pub fn enumerate_policies_capped(
    d: &InfluenceDiagram,
    cap: u128,
) -> Result<Evaluation, DecisionError> {
    let report = validate_diagram(d);
    if !report.is_ok() {
        return Err(DecisionError::Invalid(report));
    }
    let order = placement_order(d)?;
    let infos = decision_infos(d, &order);
    if infos.is_empty() {
        return Err(DecisionError::NoDecision);
    }

    let joint_states: u128 = d
        .chances
        .iter()
        .map(|c| c.outcomes.len() as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX);
    let policies = policy_space_size(d).unwrap_or(u128::MAX);
    let work = policies.saturating_mul(joint_states);
    if work > cap {
        return Err(DecisionError::CapExceeded {
            required: work,
            cap,
        });
    }

    let index = d.node_index();
    let chance_parent_refs: Vec<Vec<NodeKind>> = d
        .chances
        .iter()
        .map(|c| c.parents.iter().map(|p| index[p.as_str()]).collect())
        .collect();
    let chance_parent_cards: Vec<Vec<usize>> = chance_parent_refs
        .iter()
        .map(|refs| {
            refs.iter()
                .map(|k| match k {
                    NodeKind::Decision(i) => d.decisions[*i].alternatives.len(),
                    NodeKind::Chance(i) => d.chances[*i].outcomes.len(),
                })
                .collect()
        })
        .collect();
    let utility_refs: Vec<NodeKind> = d
        .utility
        .parents
        .iter()
        .map(|p| index[p.as_str()])
        .collect();
    let utility_cards: Vec<usize> = utility_refs
        .iter()
        .map(|k| match k {
            NodeKind::Decision(i) => d.decisions[*i].alternatives.len(),
            NodeKind::Chance(i) => d.chances[*i].outcomes.len(),
        })
        .collect();

    // Policy slots: per decision, one action index per information state.
    let slot_counts: Vec<usize> = infos.iter().map(|i| i.context_count).collect();
    let alt_counts: Vec<usize> = infos
        .iter()
        .map(|i| d.decisions[i.decision].alternatives.len())
        .collect();
    let mut policy: Vec<Vec<usize>> = slot_counts.iter().map(|n| vec![0usize; *n]).collect();

    let first_decision_idx = infos[0].decision;
    let chance_cards: Vec<usize> = d.chances.iter().map(|c| c.outcomes.len()).collect();

    let mut best_score = f64::NEG_INFINITY;
    let mut best_policy: Option<Vec<Vec<usize>>> = None;
    let mut committed_best: Vec<f64> = vec![f64::NEG_INFINITY; alt_counts[0]];

    let mut joint = vec![0usize; d.chances.len()];
    let mut decided = vec![0usize; d.decisions.len()];
    let mut parent_values: Vec<usize> = Vec::new();

    loop {
        // Score the current policy over every joint chance outcome.
        let mut score = 0.0;
        joint.iter_mut().for_each(|v| *v = 0);
        loop {
            // Resolve the decision taken at each information state.
            for (k, info) in infos.iter().enumerate() {
                let mut ctx = 0usize;
                for s in &info.sources {
                    match s {
                        Placed::Decision(j) => {
                            ctx = ctx * d.decisions[*j].alternatives.len() + decided[*j];
                        }
                        Placed::Chance(j) => {
                            ctx = ctx * d.chances[*j].outcomes.len() + joint[*j];
                        }
                    }
                }
                decided[info.decision] = policy[k][ctx];
            }

            let mut prob = 1.0;
            for (c, node) in d.chances.iter().enumerate() {
                parent_values.clear();
                for r in &chance_parent_refs[c] {
                    parent_values.push(match r {
                        NodeKind::Decision(j) => decided[*j],
                        NodeKind::Chance(j) => joint[*j],
                    });
                }
                let row = assignment_index(&chance_parent_cards[c], &parent_values);
                prob *= node.cpt[row][joint[c]];
                if prob == 0.0 {
                    break;
                }
            }

            if prob != 0.0 {
                parent_values.clear();
                for r in &utility_refs {
                    parent_values.push(match r {
                        NodeKind::Decision(j) => decided[*j],
                        NodeKind::Chance(j) => joint[*j],
                    });
                }
                let u = d.utility.values[assignment_index(&utility_cards, &parent_values)];
                score += prob * u;
            }

            if !advance(&mut joint, &chance_cards) {
                break;
            }
        }

        if score > best_score {
            best_score = score;
            best_policy = Some(policy.clone());
        }
        // Track per-alternative bests among policies that commit the first
        // decision to one alternative everywhere.
        let first_slots = &policy[0];
        if first_slots.iter().all(|a| *a == first_slots[0]) {
            let a = first_slots[0];
            if score > committed_best[a] {
                committed_best[a] = score;
            }
        }

        if !advance_policy(&mut policy, &alt_counts) {
            break;
        }
    }

    let best_policy = best_policy.expect("at least one policy is always scored");
    let first = &d.decisions[first_decision_idx];
    let mut action_values = BTreeMap::new();
    for (a, alt) in first.alternatives.iter().enumerate() {
        action_values.insert(alt.clone(), committed_best[a]);
    }
    let mut best_action = first.alternatives[0].clone();
    let mut best_committed = committed_best[0];
    for (a, alt) in first.alternatives.iter().enumerate().skip(1) {
        if committed_best[a] > best_committed {
            best_committed = committed_best[a];
            best_action = alt.clone();
        }
    }

    let policy_entries = describe_policy(d, &infos, &best_policy);

    Ok(Evaluation {
        best_action,
        expected_utility: best_score,
        action_values,
        policy: policy_entries,
    })
}

/// Mixed-radix increment, last position fastest. Returns false on wrap.
fn advance(values: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..values.len()).rev() {
        values[i] += 1;
        if values[i] < cards[i] {
            return true;
        }
        values[i] = 0;
    }
    false
}

fn advance_policy(policy: &mut [Vec<usize>], alt_counts: &[usize]) -> bool {
    for k in (0..policy.len()).rev() {
        let alts = alt_counts[k];
        for s in (0..policy[k].len()).rev() {
            policy[k][s] += 1;
            if policy[k][s] < alts {
                return true;
            }
            policy[k][s] = 0;
        }
    }
    false
}

fn describe_policy(
    d: &InfluenceDiagram,
    infos: &[DecisionInfo],
    policy: &[Vec<usize>],
) -> Vec<PolicyEntry> {
    let mut entries = Vec::new();
    for (k, info) in infos.iter().enumerate() {
        let dec = &d.decisions[info.decision];
        let cards: Vec<usize> = info
            .sources
            .iter()
            .map(|s| match s {
                Placed::Decision(j) => d.decisions[*j].alternatives.len(),
                Placed::Chance(j) => d.chances[*j].outcomes.len(),
            })
            .collect();
        let mut values = vec![0usize; cards.len()];
        for slot_action in policy[k].iter().take(info.context_count) {
            let mut context = BTreeMap::new();
            for (pos, s) in info.sources.iter().enumerate() {
                let (name, label) = match s {
                    Placed::Decision(j) => (
                        d.decisions[*j].id.clone(),
                        d.decisions[*j].alternatives[values[pos]].clone(),
                    ),
                    Placed::Chance(j) => (
                        d.chances[*j].id.clone(),
                        d.chances[*j].outcomes[values[pos]].clone(),
                    ),
                };
                context.insert(name, label);
            }
            entries.push(PolicyEntry {
                decision: dec.id.clone(),
                context,
                action: dec.alternatives[*slot_action].clone(),
            });
            advance(&mut values, &cards);
        }
    }
    entries.sort();
    entries
}
