//! Property tests for the decision evaluators.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use heatwise::decision::{
    enumerate_policies, evaluate_diagram, fold_back, validate_diagram, InfluenceDiagram,
};
use heatwise::pronouncer::{
    BindingValue, NormFilter, Pronouncer, Query, SlotTarget, TemplateModel,
};
use heatwise_testkit::{random_diagram, DiagramBounds};

fn diagram_from_seed(seed: u64) -> InfluenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_diagram(&mut rng, &DiagramBounds::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The fold-back evaluator and the policy-enumeration oracle agree on
    /// the best action exactly and on the expected utility to 1e-9.
    #[test]
    fn fold_back_matches_enumeration(seed in 0u64..10_000) {
        let diagram = diagram_from_seed(seed);
        prop_assert!(validate_diagram(&diagram).is_ok());
        let folded = evaluate_diagram(&diagram).unwrap();
        let enumerated = enumerate_policies(&diagram).unwrap();
        prop_assert_eq!(&folded.best_action, &enumerated.best_action);
        prop_assert!((folded.expected_utility - enumerated.expected_utility).abs() <= 1e-9,
            "fold {} vs enumerate {}", folded.expected_utility, enumerated.expected_utility);
        for (action, value) in &folded.action_values {
            let other = enumerated.action_values[action];
            prop_assert!((value - other).abs() <= 1e-9);
        }
    }

    /// Rescaling utilities by `a > 0` and shifting by `b` leaves the best
    /// action and policy unchanged and maps the expected utility affinely.
    #[test]
    fn argmax_is_affine_invariant(seed in 0u64..10_000, a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let diagram = diagram_from_seed(seed);
        let base = evaluate_diagram(&diagram).unwrap();
        let mut scaled = diagram.clone();
        for v in &mut scaled.utility.values {
            *v = a * *v + b;
        }
        let transformed = evaluate_diagram(&scaled).unwrap();
        prop_assert_eq!(&base.best_action, &transformed.best_action);
        prop_assert_eq!(&base.policy, &transformed.policy);
        let expected = a * base.expected_utility + b;
        prop_assert!((transformed.expected_utility - expected).abs() <= 1e-9,
            "{} vs {}", transformed.expected_utility, expected);
    }

    /// Evaluation is a pure function of the tree.
    #[test]
    fn fold_back_is_deterministic(seed in 0u64..10_000) {
        let diagram = diagram_from_seed(seed);
        let tree = heatwise::decision::compile_to_tree(&diagram).unwrap();
        prop_assert_eq!(fold_back(&tree).unwrap(), fold_back(&tree).unwrap());
    }
}

/// Tiny diagrams with an information arc: the second decision observes a
/// chance node (and, by accumulation, the first decision). Enumeration
/// stays cheap at these sizes and exercises the information-state logic
/// that the unobserved suite never touches.
fn observed_diagram_from_seed(seed: u64) -> InfluenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = DiagramBounds {
        max_decisions: 2,
        max_alternatives: 2,
        max_chances: 2,
        max_outcomes: 2,
    };
    let mut diagram = random_diagram(&mut rng, &bounds);
    if diagram.decisions.len() == 2 && !diagram.chances.is_empty() {
        let last = diagram.decisions[1].id.clone();
        let observed = diagram.chances[0].id.clone();
        // Observing a descendant of a decision is unorderable; only attach
        // the arc when the chance node is decision-free upstream.
        if diagram.chances[0].parents.is_empty() {
            diagram.observed_before.insert(last, vec![observed]);
        }
    }
    diagram
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The evaluators also agree when a decision observes a chance node.
    #[test]
    fn fold_back_matches_enumeration_with_observations(seed in 0u64..10_000) {
        let diagram = observed_diagram_from_seed(seed);
        prop_assert!(validate_diagram(&diagram).is_ok());
        let folded = evaluate_diagram(&diagram).unwrap();
        let enumerated = enumerate_policies(&diagram).unwrap();
        prop_assert_eq!(&folded.best_action, &enumerated.best_action);
        prop_assert!((folded.expected_utility - enumerated.expected_utility).abs() <= 1e-9,
            "fold {} vs enumerate {}", folded.expected_utility, enumerated.expected_utility);
    }
}

/// A two-alternative-per-decision template whose utilities are all slots,
/// used to drive the filter properties with arbitrary numbers.
fn slot_template() -> TemplateModel {
    let diagram = diagram_from_seed(4242);
    let mut slots = BTreeMap::new();
    for i in 0..diagram.utility.values.len() {
        slots.insert(format!("u{i}"), SlotTarget::Utility { index: i });
    }
    TemplateModel {
        id: "slotted".into(),
        skeleton: diagram,
        slots,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// An unfiltered pronouncement equals evaluating the bound diagram
    /// directly, and norm filtering never advises a forbidden action nor
    /// improves on the unfiltered expected utility.
    #[test]
    fn filtering_is_sound(values in proptest::collection::vec(-50.0f64..50.0, 24), forbid_first in any::<bool>()) {
        let template = slot_template();
        let n = template.skeleton.utility.values.len();
        let mut bindings = BTreeMap::new();
        for i in 0..n {
            bindings.insert(format!("u{i}"), BindingValue::Value(values[i % values.len()]));
        }
        let query = Query {
            template_id: "slotted".into(),
            bindings,
            requester: "prop".into(),
        };

        let plain = Pronouncer::new();
        plain.register_template(template.clone()).unwrap();
        let advice = plain.pronounce(&query).unwrap();
        let diagram = template.instantiate(&query.bindings).unwrap();
        let eval = evaluate_diagram(&diagram).unwrap();
        prop_assert_eq!(&advice.action, &eval.best_action);
        prop_assert!((advice.expected_utility - eval.expected_utility).abs() <= 1e-9);
        prop_assert!(advice.filtered_out.is_empty());

        // Forbid either the advised action or the first alternative.
        let first_decision = template.skeleton.first_decision().unwrap().clone();
        let target = if forbid_first {
            first_decision.alternatives[0].clone()
        } else {
            advice.action.clone()
        };
        let filtered = Pronouncer::new();
        filtered
            .register_template_with_filter(template, NormFilter::forbidding([target.clone()]))
            .unwrap();
        let constrained = filtered.pronounce(&query).unwrap();
        prop_assert_ne!(&constrained.action, &target);
        prop_assert_eq!(&constrained.filtered_out, &vec![target]);
        prop_assert!(constrained.expected_utility <= advice.expected_utility + 1e-9,
            "filtering must not improve the advised utility");
    }
}
