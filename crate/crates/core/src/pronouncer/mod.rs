//! The decision-support boundary agents query.
//!
//! A `Pronouncer` holds immutable, pre-registered templates. Agents send a
//! [`Query`] naming a template and binding its value slots; the pronouncer
//! instantiates, validates, and evaluates the diagram and answers with the
//! expected-utility-maximizing action. A per-template [`NormFilter`] can
//! strike actions from consideration before the argmax.

mod bench;
mod template;
pub mod transport;
pub mod wire;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{evaluate_diagram, validate_diagram, DecisionError};

pub use bench::BenchStats;
pub use template::{BindingValue, Query, SlotTarget, TemplateModel};

#[derive(Debug, Error)]
pub enum PronounceError {
    #[error("template `{0}` is already registered")]
    DuplicateTemplate(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{id}` has an invalid skeleton: {reason}")]
    InvalidSkeleton { id: String, reason: String },
    #[error("invalid norm filter for template `{id}`: {reason}")]
    InvalidFilter { id: String, reason: String },
    #[error("missing binding for slot `{0}`")]
    MissingBinding(String),
    #[error("binding `{0}` does not match any slot")]
    UnknownBinding(String),
    #[error("bad binding for slot `{slot}`: {reason}")]
    BadBinding { slot: String, reason: String },
    #[error("bound diagram failed validation: {0}")]
    InvalidBound(String),
    #[error("benchmark needs at least one run")]
    NoRuns,
    #[error(transparent)]
    Evaluation(#[from] DecisionError),
}

/// Actions a template is never allowed to advise.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormFilter {
    pub forbidden: BTreeSet<String>,
}

impl NormFilter {
    pub fn forbidding<I, S>(actions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            forbidden: actions.into_iter().map(Into::into).collect(),
        }
    }

    pub fn permits(&self, action: &str) -> bool {
        !self.forbidden.contains(action)
    }
}

/// The pronouncer's answer: the advised action, its expected utility, the
/// full per-action values, and whatever the norm filter removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub action: String,
    #[serde(rename = "eu")]
    pub expected_utility: f64,
    pub action_values: BTreeMap<String, f64>,
    pub filtered_out: Vec<String>,
}

struct Registered {
    model: TemplateModel,
    filter: Option<NormFilter>,
}

/// Template registry and query evaluator. Registration write-locks the
/// registry; entries are immutable afterwards, so queries and benchmarks
/// from any number of threads only take read locks.
#[derive(Default)]
pub struct Pronouncer {
    templates: RwLock<BTreeMap<String, Arc<Registered>>>,
}

impl Pronouncer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a template without a norm filter.
    pub fn register_template(&self, template: TemplateModel) -> Result<String, PronounceError> {
        self.register(template, None)
    }

    /// Register a template together with its norm filter.
    pub fn register_template_with_filter(
        &self,
        template: TemplateModel,
        filter: NormFilter,
    ) -> Result<String, PronounceError> {
        self.register(template, Some(filter))
    }

    fn register(
        &self,
        template: TemplateModel,
        filter: Option<NormFilter>,
    ) -> Result<String, PronounceError> {
        template.check()?;
        if let Some(f) = &filter {
            let first = template
                .skeleton
                .first_decision()
                .expect("checked templates have a first decision");
            for action in &f.forbidden {
                if !first.alternatives.contains(action) {
                    return Err(PronounceError::InvalidFilter {
                        id: template.id.clone(),
                        reason: format!("`{action}` is not an alternative of `{}`", first.id),
                    });
                }
            }
            if first.alternatives.iter().all(|a| f.forbidden.contains(a)) {
                return Err(PronounceError::InvalidFilter {
                    id: template.id.clone(),
                    reason: "filter forbids every alternative".into(),
                });
            }
        }
        let id = template.id.clone();
        let mut map = self.templates.write().expect("registry lock poisoned");
        if map.contains_key(&id) {
            return Err(PronounceError::DuplicateTemplate(id));
        }
        map.insert(
            id.clone(),
            Arc::new(Registered {
                model: template,
                filter,
            }),
        );
        Ok(id)
    }

    /// Retrieve a registered template by id.
    pub fn template(&self, id: &str) -> Option<TemplateModel> {
        self.templates
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .map(|r| r.model.clone())
    }

    pub fn template_ids(&self) -> Vec<String> {
        self.templates
            .read()
            .expect("registry lock poisoned")
            .keys()
            .cloned()
            .collect()
    }

    fn entry(&self, id: &str) -> Result<Arc<Registered>, PronounceError> {
        self.templates
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| PronounceError::UnknownTemplate(id.to_string()))
    }

    /// Evaluate a query and return the advised action.
    pub fn pronounce(&self, query: &Query) -> Result<Advice, PronounceError> {
        let entry = self.entry(&query.template_id)?;
        pronounce_entry(&entry, &query.bindings)
    }

    /// Like [`Pronouncer::pronounce`] with an extra ad-hoc predicate over
    /// `(action, expected utility)`; actions it rejects are filtered out in
    /// addition to the template's norm filter. This is the hook point for
    /// richer advice constraints such as risk bounds.
    pub fn pronounce_filtered(
        &self,
        query: &Query,
        keep: &dyn Fn(&str, f64) -> bool,
    ) -> Result<Advice, PronounceError> {
        let entry = self.entry(&query.template_id)?;
        let mut advice = pronounce_entry(&entry, &query.bindings)?;
        let first = entry.model.skeleton.first_decision().expect("checked");
        let removed: Vec<String> = first
            .alternatives
            .iter()
            .filter(|a| {
                !advice.filtered_out.contains(a) && !keep(a, advice.action_values[a.as_str()])
            })
            .cloned()
            .collect();
        if removed.is_empty() {
            return Ok(advice);
        }
        let mut filtered_out = advice.filtered_out.clone();
        filtered_out.extend(removed);
        let survivors: Vec<&String> = first
            .alternatives
            .iter()
            .filter(|a| !filtered_out.contains(a))
            .collect();
        let best = survivors
            .into_iter()
            .max_by(|a, b| {
                advice.action_values[a.as_str()]
                    .partial_cmp(&advice.action_values[b.as_str()])
                    .expect("finite utilities")
            })
            .ok_or_else(|| PronounceError::InvalidFilter {
                id: entry.model.id.clone(),
                reason: "predicate rejected every remaining alternative".into(),
            })?;
        advice.action = best.clone();
        advice.expected_utility = advice.action_values[best.as_str()];
        advice.filtered_out = filtered_out;
        Ok(advice)
    }
}

fn pronounce_entry(
    entry: &Registered,
    bindings: &BTreeMap<String, BindingValue>,
) -> Result<Advice, PronounceError> {
    let diagram = entry.model.instantiate(bindings)?;
    let report = validate_diagram(&diagram);
    if !report.is_ok() {
        return Err(PronounceError::InvalidBound(report.to_string()));
    }
    let eval = evaluate_diagram(&diagram)?;
    let first = diagram.first_decision().expect("validated diagram");

    let filtered_out: Vec<String> = match &entry.filter {
        Some(f) => first
            .alternatives
            .iter()
            .filter(|a| !f.permits(a))
            .cloned()
            .collect(),
        None => Vec::new(),
    };

    // Argmax over surviving alternatives, scanned in declaration order so
    // exact ties keep the lowest index.
    let mut action: Option<&String> = None;
    let mut best = f64::NEG_INFINITY;
    for alt in &first.alternatives {
        if filtered_out.contains(alt) {
            continue;
        }
        let v = eval.action_values[alt.as_str()];
        if action.is_none() || v > best {
            action = Some(alt);
            best = v;
        }
    }
    let action = action
        .expect("filters never remove every alternative")
        .clone();

    Ok(Advice {
        action,
        expected_utility: best,
        action_values: eval.action_values,
        filtered_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable};

    fn coin_template() -> TemplateModel {
        let skeleton = InfluenceDiagram {
            decisions: vec![DecisionNode {
                id: "bet".into(),
                alternatives: vec!["hold".into(), "play".into(), "fold".into()],
            }],
            chances: vec![ChanceNode {
                id: "coin".into(),
                outcomes: vec!["heads".into(), "tails".into()],
                parents: vec![],
                cpt: vec![vec![0.5, 0.5]],
            }],
            utility: UtilityTable {
                parents: vec!["bet".into(), "coin".into()],
                values: vec![0.0; 6],
            },
            decision_order: vec!["bet".into()],
            observed_before: Default::default(),
        };
        let mut slots = BTreeMap::new();
        slots.insert(
            "coin_prior".to_string(),
            SlotTarget::CptRow {
                node: "coin".into(),
                row: 0,
            },
        );
        for i in 0..6 {
            slots.insert(format!("u{i}"), SlotTarget::Utility { index: i });
        }
        TemplateModel {
            id: "coin".into(),
            skeleton,
            slots,
        }
    }

    fn bindings(values: [f64; 6]) -> BTreeMap<String, BindingValue> {
        let mut b = BTreeMap::new();
        b.insert("coin_prior".into(), BindingValue::Row(vec![0.5, 0.5]));
        for (i, v) in values.iter().enumerate() {
            b.insert(format!("u{i}"), BindingValue::Value(*v));
        }
        b
    }

    fn query(values: [f64; 6]) -> Query {
        Query {
            template_id: "coin".into(),
            bindings: bindings(values),
            requester: "test".into(),
        }
    }

    #[test]
    fn register_then_retrieve() {
        let p = Pronouncer::new();
        let id = p.register_template(coin_template()).unwrap();
        assert_eq!(id, "coin");
        assert!(p.template("coin").is_some());
        assert_eq!(p.template_ids(), vec!["coin".to_string()]);
    }

    #[test]
    fn duplicate_registration_is_an_error() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        assert!(matches!(
            p.register_template(coin_template()),
            Err(PronounceError::DuplicateTemplate(_))
        ));
    }

    #[test]
    fn single_alternative_skeleton_is_invalid() {
        let mut t = coin_template();
        t.skeleton.decisions[0].alternatives.truncate(1);
        let p = Pronouncer::new();
        assert!(matches!(
            p.register_template(t),
            Err(PronounceError::InvalidSkeleton { .. })
        ));
    }

    #[test]
    fn unknown_template_is_an_error() {
        let p = Pronouncer::new();
        assert!(matches!(
            p.pronounce(&query([0.0; 6])),
            Err(PronounceError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn constant_utility_ties_break_to_first_alternative() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        let advice = p.pronounce(&query([2.0; 6])).unwrap();
        assert_eq!(advice.action, "hold");
        assert!(advice.filtered_out.is_empty());
        assert_eq!(advice.action_values.len(), 3);
    }

    #[test]
    fn norm_filter_removes_the_best_action() {
        // play has EU 5, hold 1, fold 0. Forbid play: advice falls to hold.
        let p = Pronouncer::new();
        p.register_template_with_filter(coin_template(), NormFilter::forbidding(["play"]))
            .unwrap();
        let advice = p.pronounce(&query([1.0, 1.0, 5.0, 5.0, 0.0, 0.0])).unwrap();
        assert_eq!(advice.action, "hold");
        assert_eq!(advice.expected_utility, 1.0);
        assert_eq!(advice.filtered_out, vec!["play".to_string()]);
        assert!(advice.action_values["play"] > advice.action_values["hold"]);
    }

    #[test]
    fn filter_forbidding_everything_is_rejected_at_registration() {
        let p = Pronouncer::new();
        let err = p
            .register_template_with_filter(
                coin_template(),
                NormFilter::forbidding(["hold", "play", "fold"]),
            )
            .unwrap_err();
        assert!(matches!(err, PronounceError::InvalidFilter { .. }));
        let err = p
            .register_template_with_filter(coin_template(), NormFilter::forbidding(["jump"]))
            .unwrap_err();
        assert!(matches!(err, PronounceError::InvalidFilter { .. }));
    }

    #[test]
    fn predicate_filter_composes_with_norms() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        let q = query([1.0, 1.0, 5.0, 5.0, 3.0, 3.0]);
        // Reject anything with EU above 4: strikes play, keeps fold.
        let advice = p.pronounce_filtered(&q, &|_, eu| eu <= 4.0).unwrap();
        assert_eq!(advice.action, "fold");
        assert_eq!(advice.filtered_out, vec!["play".to_string()]);
    }

    #[test]
    fn repeated_queries_give_identical_advice() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        let q = query([0.3, -0.7, 2.5, -4.0, 1.0, 1.0]);
        let first = p.pronounce(&q).unwrap();
        for _ in 0..5 {
            assert_eq!(p.pronounce(&q).unwrap(), first);
        }
    }

    #[test]
    fn single_run_benchmark_reports_zero_stddev() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        let q = query([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let stats = p.benchmark("coin", &q.bindings, 1, 0).unwrap();
        assert_eq!(stats.runs, 1);
        assert_eq!(stats.stddev_ms, 0.0);
        assert!(stats.mean_ms > 0.0);
        assert!(matches!(
            p.benchmark("coin", &q.bindings, 0, 0),
            Err(PronounceError::NoRuns)
        ));
        assert!(matches!(
            p.benchmark("slots", &q.bindings, 5, 0),
            Err(PronounceError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn bad_probability_binding_fails_the_query() {
        let p = Pronouncer::new();
        p.register_template(coin_template()).unwrap();
        let mut q = query([0.0; 6]);
        q.bindings
            .insert("coin_prior".into(), BindingValue::Row(vec![0.7, 0.7]));
        assert!(matches!(
            p.pronounce(&q),
            Err(PronounceError::BadBinding { .. })
        ));
    }
}
