//! Seeded random inputs for the test suites.
//!
//! Not part of the public product surface; the property and acceptance
//! suites share these generators so they agree on what a "random valid
//! diagram" means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatwise::agents::ComfortProfile;
use heatwise::decision::{ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable};

/// Size limits for [`random_diagram`].
#[derive(Debug, Clone, Copy)]
pub struct DiagramBounds {
    pub max_decisions: usize,
    pub max_alternatives: usize,
    pub max_chances: usize,
    pub max_outcomes: usize,
}

impl Default for DiagramBounds {
    fn default() -> Self {
        Self {
            max_decisions: 2,
            max_alternatives: 4,
            max_chances: 3,
            max_outcomes: 4,
        }
    }
}

/// A random valid influence diagram: every CPT row sums to exactly 1, the
/// parent graph is acyclic by construction, and nothing is observed before
/// any decision.
pub fn random_diagram(rng: &mut ChaCha8Rng, bounds: &DiagramBounds) -> InfluenceDiagram {
    let n_decisions = rng.gen_range(1..=bounds.max_decisions);
    let n_chances = rng.gen_range(0..=bounds.max_chances);

    let decisions: Vec<DecisionNode> = (0..n_decisions)
        .map(|d| DecisionNode {
            id: format!("d{d}"),
            alternatives: (0..rng.gen_range(2..=bounds.max_alternatives))
                .map(|a| format!("a{a}"))
                .collect(),
        })
        .collect();

    let mut chances: Vec<ChanceNode> = Vec::with_capacity(n_chances);
    for c in 0..n_chances {
        let outcomes: Vec<String> = (0..rng.gen_range(2..=bounds.max_outcomes))
            .map(|o| format!("o{o}"))
            .collect();
        // Parents come from decisions and earlier chance nodes only, which
        // keeps the graph acyclic.
        let mut parents = Vec::new();
        let mut row_count = 1usize;
        for d in &decisions {
            if rng.gen_bool(0.5) && row_count * d.alternatives.len() <= 64 {
                parents.push(d.id.clone());
                row_count *= d.alternatives.len();
            }
        }
        for prev in chances.iter().take(c) {
            if rng.gen_bool(0.4) && row_count * prev.outcomes.len() <= 64 {
                parents.push(prev.id.clone());
                row_count *= prev.outcomes.len();
            }
        }
        let cpt = (0..row_count)
            .map(|_| random_row(rng, outcomes.len()))
            .collect();
        chances.push(ChanceNode {
            id: format!("c{c}"),
            outcomes,
            parents,
            cpt,
        });
    }

    // Utility parents: always the decisions, sometimes chance nodes too.
    // A decision outside the utility with no chance channel to it would be
    // value-irrelevant, and its argmax would then hang on floating-point
    // noise instead of the documented tie-break.
    let mut parents = Vec::new();
    let mut value_count = 1usize;
    for d in &decisions {
        parents.push(d.id.clone());
        value_count *= d.alternatives.len();
    }
    for c in &chances {
        if rng.gen_bool(0.6) && value_count * c.outcomes.len() <= 256 {
            parents.push(c.id.clone());
            value_count *= c.outcomes.len();
        }
    }
    let values = (0..value_count)
        .map(|_| rng.gen_range(-10.0..10.0))
        .collect();

    InfluenceDiagram {
        decisions: decisions.clone(),
        chances,
        utility: UtilityTable { parents, values },
        decision_order: decisions.iter().map(|d| d.id.clone()).collect(),
        observed_before: Default::default(),
    }
}

pub fn random_diagram_seeded(seed: u64) -> InfluenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_diagram(&mut rng, &DiagramBounds::default())
}

/// A probability row that sums to exactly 1: the last cell absorbs the
/// floating-point remainder.
pub fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let partial: f64 = row.iter().take(len - 1).sum();
    row[len - 1] = 1.0 - partial;
    row
}

/// A random set of 1..=6 comfort profiles with preferences in [15, 30] °C
/// and weights in (0, 5].
pub fn random_profiles(rng: &mut ChaCha8Rng) -> Vec<ComfortProfile> {
    let count = rng.gen_range(1..=6);
    (0..count)
        .map(|i| ComfortProfile {
            person: format!("p{i}"),
            preferred_c: rng.gen_range(15.0..30.0),
            weight: rng.gen_range(0.01..5.0),
        })
        .collect()
}
