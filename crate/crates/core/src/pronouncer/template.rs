//! Decision templates and value binding.
//!
//! A template fixes the *structure* of a recurring decision situation; the
//! querying agent supplies only the numbers. Each named slot points at one
//! CPT row or one utility cell of the skeleton diagram, and a query must
//! bind every slot, no more and no less.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decision::{validate_diagram, InfluenceDiagram, PROB_TOL};

use super::PronounceError;

/// Where a slot's value lands in the skeleton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum SlotTarget {
    /// Replaces CPT row `row` of chance node `node`.
    CptRow { node: String, row: usize },
    /// Replaces utility value `index`.
    Utility { index: usize },
}

/// A pre-designed decision problem with named value slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateModel {
    pub id: String,
    pub skeleton: InfluenceDiagram,
    pub slots: BTreeMap<String, SlotTarget>,
}

impl TemplateModel {
    /// Every slot must be bound by a query; this is the full list.
    pub fn required_bindings(&self) -> Vec<&str> {
        self.slots.keys().map(String::as_str).collect()
    }

    /// Check the template is usable: slot targets resolve and stay in
    /// bounds, and the skeleton validates as stored (its placeholder
    /// values are legal stand-ins).
    pub(crate) fn check(&self) -> Result<(), PronounceError> {
        for (name, target) in &self.slots {
            match target {
                SlotTarget::CptRow { node, row } => {
                    let chance = self.skeleton.chance(node).ok_or_else(|| {
                        PronounceError::InvalidSkeleton {
                            id: self.id.clone(),
                            reason: format!("slot `{name}` targets unknown chance node `{node}`"),
                        }
                    })?;
                    if *row >= chance.cpt.len() {
                        return Err(PronounceError::InvalidSkeleton {
                            id: self.id.clone(),
                            reason: format!(
                                "slot `{name}` targets row {row} of `{node}` which has {} rows",
                                chance.cpt.len()
                            ),
                        });
                    }
                }
                SlotTarget::Utility { index } => {
                    if *index >= self.skeleton.utility.values.len() {
                        return Err(PronounceError::InvalidSkeleton {
                            id: self.id.clone(),
                            reason: format!(
                                "slot `{name}` targets utility value {index} of {}",
                                self.skeleton.utility.values.len()
                            ),
                        });
                    }
                }
            }
        }
        let report = validate_diagram(&self.skeleton);
        if !report.is_ok() {
            return Err(PronounceError::InvalidSkeleton {
                id: self.id.clone(),
                reason: report.to_string(),
            });
        }
        if self.skeleton.first_decision().is_none() {
            return Err(PronounceError::InvalidSkeleton {
                id: self.id.clone(),
                reason: "skeleton has no first decision".into(),
            });
        }
        Ok(())
    }

    /// Fill the skeleton with a query's bindings.
    pub fn instantiate(
        &self,
        bindings: &BTreeMap<String, BindingValue>,
    ) -> Result<InfluenceDiagram, PronounceError> {
        for name in bindings.keys() {
            if !self.slots.contains_key(name) {
                return Err(PronounceError::UnknownBinding(name.clone()));
            }
        }
        let mut diagram = self.skeleton.clone();
        for (name, target) in &self.slots {
            let value = bindings
                .get(name)
                .ok_or_else(|| PronounceError::MissingBinding(name.clone()))?;
            apply(&mut diagram, name, target, value)?;
        }
        Ok(diagram)
    }
}

fn apply(
    diagram: &mut InfluenceDiagram,
    name: &str,
    target: &SlotTarget,
    value: &BindingValue,
) -> Result<(), PronounceError> {
    match (target, value) {
        (SlotTarget::CptRow { node, row }, BindingValue::Row(values)) => {
            let chance = diagram
                .chances
                .iter_mut()
                .find(|c| &c.id == node)
                .ok_or_else(|| PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: format!("slot targets unknown chance node `{node}`"),
                })?;
            if *row >= chance.cpt.len() {
                return Err(PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: format!(
                        "slot targets row {row} of `{node}` which has {} rows",
                        chance.cpt.len()
                    ),
                });
            }
            if values.len() != chance.outcomes.len() {
                return Err(PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: format!(
                        "row has {} entries for {} outcomes",
                        values.len(),
                        chance.outcomes.len()
                    ),
                });
            }
            let sum: f64 = values.iter().sum();
            if values
                .iter()
                .any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
                || (sum - 1.0).abs() > PROB_TOL
            {
                return Err(PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: format!(
                        "probability row must lie in [0,1] and sum to 1, sums to {sum}"
                    ),
                });
            }
            chance.cpt[*row] = values.clone();
            Ok(())
        }
        (SlotTarget::Utility { index }, BindingValue::Value(v)) => {
            if !v.is_finite() {
                return Err(PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: "utility value must be finite".into(),
                });
            }
            if *index >= diagram.utility.values.len() {
                return Err(PronounceError::BadBinding {
                    slot: name.to_string(),
                    reason: format!(
                        "slot targets utility value {index} of {}",
                        diagram.utility.values.len()
                    ),
                });
            }
            diagram.utility.values[*index] = *v;
            Ok(())
        }
        (SlotTarget::CptRow { .. }, BindingValue::Value(_)) => Err(PronounceError::BadBinding {
            slot: name.to_string(),
            reason: "slot expects a probability row, got a scalar".into(),
        }),
        (SlotTarget::Utility { .. }, BindingValue::Row(_)) => Err(PronounceError::BadBinding {
            slot: name.to_string(),
            reason: "slot expects a scalar utility, got a row".into(),
        }),
    }
}

/// Either a probability row (for CPT slots) or a scalar (for utility slots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BindingValue {
    Value(f64),
    Row(Vec<f64>),
}

/// A decision request: which template, the slot values, and who asks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(rename = "template")]
    pub template_id: String,
    pub bindings: BTreeMap<String, BindingValue>,
    pub requester: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{ChanceNode, DecisionNode, UtilityTable};

    pub(crate) fn coin_template() -> TemplateModel {
        let skeleton = InfluenceDiagram {
            decisions: vec![DecisionNode {
                id: "bet".into(),
                alternatives: vec!["hold".into(), "play".into()],
            }],
            chances: vec![ChanceNode {
                id: "coin".into(),
                outcomes: vec!["heads".into(), "tails".into()],
                parents: vec![],
                cpt: vec![vec![0.5, 0.5]],
            }],
            utility: UtilityTable {
                parents: vec!["bet".into(), "coin".into()],
                values: vec![0.0, 0.0, 0.0, 0.0],
            },
            decision_order: vec!["bet".into()],
            observed_before: Default::default(),
        };
        let mut slots = BTreeMap::new();
        slots.insert(
            "coin_prior".into(),
            SlotTarget::CptRow {
                node: "coin".into(),
                row: 0,
            },
        );
        for (i, name) in [
            "u_hold_heads",
            "u_hold_tails",
            "u_play_heads",
            "u_play_tails",
        ]
        .iter()
        .enumerate()
        {
            slots.insert((*name).into(), SlotTarget::Utility { index: i });
        }
        TemplateModel {
            id: "coin".into(),
            skeleton,
            slots,
        }
    }

    fn bindings() -> BTreeMap<String, BindingValue> {
        let mut b = BTreeMap::new();
        b.insert("coin_prior".into(), BindingValue::Row(vec![0.6, 0.4]));
        b.insert("u_hold_heads".into(), BindingValue::Value(1.0));
        b.insert("u_hold_tails".into(), BindingValue::Value(1.0));
        b.insert("u_play_heads".into(), BindingValue::Value(3.0));
        b.insert("u_play_tails".into(), BindingValue::Value(-2.0));
        b
    }

    #[test]
    fn instantiation_applies_all_slots() {
        let t = coin_template();
        t.check().unwrap();
        let d = t.instantiate(&bindings()).unwrap();
        assert_eq!(d.chances[0].cpt[0], vec![0.6, 0.4]);
        assert_eq!(d.utility.values, vec![1.0, 1.0, 3.0, -2.0]);
    }

    #[test]
    fn missing_and_extra_bindings_are_rejected() {
        let t = coin_template();
        let mut b = bindings();
        b.remove("u_play_tails");
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::MissingBinding(_))
        ));
        let mut b = bindings();
        b.insert("stray".into(), BindingValue::Value(0.0));
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::UnknownBinding(_))
        ));
    }

    #[test]
    fn probability_row_binding_is_checked() {
        let t = coin_template();
        let mut b = bindings();
        b.insert("coin_prior".into(), BindingValue::Row(vec![0.6, 0.6]));
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::BadBinding { .. })
        ));
        let mut b = bindings();
        b.insert("coin_prior".into(), BindingValue::Row(vec![1.0]));
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::BadBinding { .. })
        ));
        let mut b = bindings();
        b.insert("coin_prior".into(), BindingValue::Value(0.5));
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::BadBinding { .. })
        ));
    }

    #[test]
    fn stray_slot_targets_error_instead_of_panicking() {
        let mut t = coin_template();
        t.slots.insert(
            "ghost".into(),
            SlotTarget::CptRow {
                node: "coin".into(),
                row: 9,
            },
        );
        assert!(t.check().is_err());
        let mut b = bindings();
        b.insert("ghost".into(), BindingValue::Row(vec![0.5, 0.5]));
        assert!(matches!(
            t.instantiate(&b),
            Err(PronounceError::BadBinding { .. })
        ));
    }

    #[test]
    fn required_bindings_lists_every_slot() {
        let t = coin_template();
        assert_eq!(t.required_bindings().len(), t.slots.len());
    }

    #[test]
    fn query_wire_names() {
        let q = Query {
            template_id: "coin".into(),
            bindings: bindings(),
            requester: "room_agent".into(),
        };
        let json = serde_json::to_string(&q).unwrap();
        assert!(json.contains("\"template\":\"coin\""));
        assert!(json.contains("\"requester\":\"room_agent\""));
        let back: Query = serde_json::from_str(&json).unwrap();
        assert_eq!(q, back);
    }
}
