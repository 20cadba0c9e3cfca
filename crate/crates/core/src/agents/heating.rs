//! The heating decision: context, template, and CPT generation.
//!
//! The room agent chooses between four actions — leave the radiators off,
//! run one or both, or ventilate — under an uncertain outside temperature.
//! The outside temperature enters as five ordered bins of the difference
//! `t_out - desired`, from strongly above the desired room temperature to
//! strongly below. The end-of-horizon room temperature classifies into
//! `higher` / `desired` / `lower` around the desired band, with the
//! conditional probabilities sampled from the thermal model itself.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision::{assignment_index, ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable};
use crate::pronouncer::{BindingValue, Query, SlotTarget, TemplateModel};
use crate::thermal::{analytic_temp, HeatInput, ThermalParams, J_PER_KWH};

use super::AgentError;

/// Rated power of one radiator, W.
pub const RADIATOR_W: f64 = 1000.0;

/// Registry id of the heating template.
pub const HEATING_TEMPLATE_ID: &str = "heating";

/// The four alternatives of the heating decision, in tie-break order.
pub const HEATING_ACTIONS: [&str; 4] = ["no_heat", "one_radiator", "both_radiators", "ventilate"];

/// Outcomes of the end-of-horizon room temperature.
pub const RESULT_OUTCOMES: [&str; 3] = ["higher", "desired", "lower"];

const DECISION_ID: &str = "heat_action";
const OUTSIDE_ID: &str = "outside_diff";
const RESULT_ID: &str = "temp_result";

/// One bin of `t_out - desired` with its prior probability. `lo`/`hi` are
/// the inclusive/exclusive bounds in °C relative to the desired setpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutsideBin {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub prior: f64,
}

/// Default bins spanning the ±40 °C seasonal swing, ordered from high
/// positive difference down to high negative, with a uniform prior.
pub fn default_outside_bins() -> Vec<OutsideBin> {
    let bins = [
        ("high_pos", 10.0, 40.0),
        ("mid_pos", 2.0, 10.0),
        ("near_zero", -2.0, 2.0),
        ("mid_neg", -10.0, -2.0),
        ("high_neg", -40.0, -10.0),
    ];
    bins.iter()
        .map(|(label, lo, hi)| OutsideBin {
            label: (*label).to_string(),
            lo: *lo,
            hi: *hi,
            prior: 0.2,
        })
        .collect()
}

/// Everything the room agent knows when it asks for heating advice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingContext {
    pub params: ThermalParams,
    pub current_temp_c: f64,
    pub desired_temp_c: f64,
    /// Planning horizon the actions run for, seconds.
    pub horizon_s: f64,
    pub outside_bins: Vec<OutsideBin>,
    /// Utility cost per kWh consumed by the action.
    pub energy_weight: f64,
    /// Utility penalty when the room ends warmer than desired.
    pub penalty_higher: f64,
    /// Utility penalty when the room ends colder than desired.
    pub penalty_lower: f64,
    /// Loss conductance the ventilate action adds, W/K.
    pub vent_conductance_w_per_k: f64,
    /// Half-width of the `desired` outcome band, °C.
    pub desired_band_c: f64,
}

impl HeatingContext {
    pub fn new(
        params: ThermalParams,
        current_temp_c: f64,
        desired_temp_c: f64,
        horizon_s: f64,
    ) -> Self {
        Self {
            params,
            current_temp_c,
            desired_temp_c,
            horizon_s,
            outside_bins: default_outside_bins(),
            energy_weight: 1.0,
            penalty_higher: 15.0,
            penalty_lower: 25.0,
            vent_conductance_w_per_k: 50.0,
            desired_band_c: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        self.params
            .validate()
            .map_err(|e| AgentError::InvalidContext(e.to_string()))?;
        let bad = |msg: &str| Err(AgentError::InvalidContext(msg.to_string()));
        if !self.horizon_s.is_finite() || self.horizon_s <= 0.0 {
            return bad("horizon must be positive");
        }
        if self.outside_bins.len() != 5 {
            return bad("exactly five outside bins are required");
        }
        let prior_sum: f64 = self.outside_bins.iter().map(|b| b.prior).sum();
        if (prior_sum - 1.0).abs() > crate::decision::PROB_TOL {
            return Err(AgentError::InvalidContext(format!(
                "bin priors sum to {prior_sum}, not 1"
            )));
        }
        for bin in &self.outside_bins {
            if bin.prior < 0.0 || bin.prior > 1.0 || bin.hi < bin.lo {
                return bad("bins need hi >= lo and priors in [0, 1]");
            }
        }
        // Bins are ordered high to low and tile the range without gaps.
        for pair in self.outside_bins.windows(2) {
            if (pair[0].lo - pair[1].hi).abs() > 1e-9 {
                return bad("bins must partition the range contiguously");
            }
        }
        if self.penalty_higher < 0.0 || self.penalty_lower < 0.0 || self.energy_weight < 0.0 {
            return bad("weights and penalties must be non-negative");
        }
        if self.desired_band_c <= 0.0 || self.vent_conductance_w_per_k < 0.0 {
            return bad("desired band must be positive and vent conductance non-negative");
        }
        Ok(())
    }

    /// What an action does to the room for this context.
    pub fn heat_input(&self, action: &str) -> HeatInput {
        match action {
            "no_heat" => HeatInput::off(),
            "one_radiator" => HeatInput::heating(RADIATOR_W),
            "both_radiators" => HeatInput::heating(2.0 * RADIATOR_W),
            "ventilate" => HeatInput::venting(self.vent_conductance_w_per_k),
            other => panic!("unknown heating action `{other}`"),
        }
    }

    /// Energy an action consumes over the horizon, kWh.
    pub fn action_energy_kwh(&self, action: &str) -> f64 {
        self.heat_input(action).power_w * self.horizon_s / J_PER_KWH
    }
}

fn prior_slot() -> String {
    "outside_prior".to_string()
}

fn result_slot(action: &str, bin: &str) -> String {
    format!("result/{action}/{bin}")
}

fn utility_slot(action: &str, outcome: &str) -> String {
    format!("util/{action}/{outcome}")
}

/// The pre-designed heating decision problem: a four-way decision, the
/// five-bin outside-temperature node, the three-outcome result node
/// conditioned on both, and a utility over (action, result). Every CPT row
/// and utility value is a slot; the skeleton carries neutral placeholders.
pub fn heating_template() -> TemplateModel {
    let bins = default_outside_bins();
    let bin_labels: Vec<String> = bins.iter().map(|b| b.label.clone()).collect();

    let skeleton = InfluenceDiagram {
        decisions: vec![DecisionNode {
            id: DECISION_ID.into(),
            alternatives: HEATING_ACTIONS.iter().map(|s| s.to_string()).collect(),
        }],
        chances: vec![
            ChanceNode {
                id: OUTSIDE_ID.into(),
                outcomes: bin_labels.clone(),
                parents: vec![],
                cpt: vec![vec![0.2; 5]],
            },
            ChanceNode {
                id: RESULT_ID.into(),
                outcomes: RESULT_OUTCOMES.iter().map(|s| s.to_string()).collect(),
                parents: vec![DECISION_ID.into(), OUTSIDE_ID.into()],
                cpt: vec![vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]; 20],
            },
        ],
        utility: UtilityTable {
            parents: vec![DECISION_ID.into(), RESULT_ID.into()],
            values: vec![0.0; 12],
        },
        decision_order: vec![DECISION_ID.into()],
        observed_before: Default::default(),
    };

    let mut slots = BTreeMap::new();
    slots.insert(
        prior_slot(),
        SlotTarget::CptRow {
            node: OUTSIDE_ID.into(),
            row: 0,
        },
    );
    for (a, action) in HEATING_ACTIONS.iter().enumerate() {
        for (b, bin) in bin_labels.iter().enumerate() {
            slots.insert(
                result_slot(action, bin),
                SlotTarget::CptRow {
                    node: RESULT_ID.into(),
                    row: assignment_index(&[4, 5], &[a, b]),
                },
            );
        }
        for (r, outcome) in RESULT_OUTCOMES.iter().enumerate() {
            slots.insert(
                utility_slot(action, outcome),
                SlotTarget::Utility {
                    index: assignment_index(&[4, 3], &[a, r]),
                },
            );
        }
    }

    TemplateModel {
        id: HEATING_TEMPLATE_ID.into(),
        skeleton,
        slots,
    }
}

/// Sample the result-node CPT from the thermal model.
///
/// For each (action, bin) pair, `samples` outside temperatures are drawn
/// uniformly from the bin under a fixed seed, the horizon is simulated
/// with the action's heat input, and the end temperature classifies into
/// `higher` / `desired` / `lower` around `desired ± band`. Heating actions
/// run against the setpoint thermostat the device agent applies — power
/// modulates off once the room reaches the desired temperature — so a
/// strong radiator on a mild day ends `desired`, not `higher`; only
/// weather that floats the room past the band can. Rows are empirical
/// frequencies whose last cell absorbs rounding, so each row sums to
/// exactly 1. Rows come back in (action, bin) order.
pub fn generate_cpt(
    actions: &[&str],
    ctx: &HeatingContext,
    samples: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    assert!(samples >= 1, "at least one sample per row");
    let bins = &ctx.outside_bins;
    let mut rows = Vec::with_capacity(actions.len() * bins.len());
    for (a, action) in actions.iter().enumerate() {
        let input = ctx.heat_input(action);
        let coast = HeatInput {
            power_w: 0.0,
            ..input
        };
        for (b, bin) in bins.iter().enumerate() {
            // One independent, replayable stream per (action, bin) pair:
            // growing `samples` extends the draw sequence in place.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((a * bins.len() + b) as u64);
            let mut counts = [0usize; 3];
            for _ in 0..samples {
                let u: f64 = rng.gen();
                let t_out = ctx.desired_temp_c + bin.lo + u * (bin.hi - bin.lo);
                let open = analytic_temp(
                    &ctx.params,
                    ctx.current_temp_c,
                    &input,
                    t_out,
                    ctx.horizon_s,
                );
                let end = if input.power_w > 0.0 && open > ctx.desired_temp_c {
                    // Thermostat: hold at the setpoint once reached, unless
                    // the weather alone floats the room higher.
                    let free = analytic_temp(
                        &ctx.params,
                        ctx.current_temp_c,
                        &coast,
                        t_out,
                        ctx.horizon_s,
                    );
                    free.max(ctx.desired_temp_c)
                } else {
                    open
                };
                let class = if end > ctx.desired_temp_c + ctx.desired_band_c {
                    0
                } else if end < ctx.desired_temp_c - ctx.desired_band_c {
                    2
                } else {
                    1
                };
                counts[class] += 1;
            }
            let first = counts[0] as f64 / samples as f64;
            let second = counts[1] as f64 / samples as f64;
            let partial = first + second;
            rows.push(vec![first, second, 1.0 - partial]);
        }
    }
    rows
}

/// Prior over the outside bins given the current outdoor reading.
///
/// Bins are weighted by a Gaussian kernel over the distance between each
/// bin interval and the observed `t_out - desired` difference, so the
/// forecast mass concentrates on the bins around today's weather while
/// neighbors keep some probability. `spread <= 0` returns the configured
/// priors untouched. The returned row sums to exactly 1.
pub fn forecast_prior(bins: &[OutsideBin], observed_diff: f64, spread: f64) -> Vec<f64> {
    if spread <= 0.0 {
        return bins.iter().map(|b| b.prior).collect();
    }
    let weights: Vec<f64> = bins
        .iter()
        .map(|b| {
            let d = if observed_diff < b.lo {
                b.lo - observed_diff
            } else if observed_diff > b.hi {
                observed_diff - b.hi
            } else {
                0.0
            };
            (-d * d / (2.0 * spread * spread)).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        // Reading so far outside every bin that the kernel underflowed.
        return bins.iter().map(|b| b.prior).collect();
    }
    let mut row: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let partial: f64 = row.iter().take(row.len() - 1).sum();
    *row.last_mut().expect("five bins") = 1.0 - partial;
    row
}

/// Build the full heating query for a context: the bin prior row, the
/// sampled result CPT, and utilities
/// `U(action, result) = -energy_weight * kWh(action) - penalty(result)`.
pub fn build_heating_query(
    ctx: &HeatingContext,
    samples: usize,
    seed: u64,
    requester: &str,
) -> Result<Query, AgentError> {
    ctx.validate()?;
    let mut bindings = BTreeMap::new();
    bindings.insert(
        prior_slot(),
        BindingValue::Row(ctx.outside_bins.iter().map(|b| b.prior).collect()),
    );
    let rows = generate_cpt(&HEATING_ACTIONS, ctx, samples, seed);
    for (a, action) in HEATING_ACTIONS.iter().enumerate() {
        for (b, bin) in ctx.outside_bins.iter().enumerate() {
            bindings.insert(
                result_slot(action, &bin.label),
                BindingValue::Row(rows[a * ctx.outside_bins.len() + b].clone()),
            );
        }
        let energy_cost = ctx.energy_weight * ctx.action_energy_kwh(action);
        for outcome in RESULT_OUTCOMES.iter() {
            let penalty = match *outcome {
                "higher" => ctx.penalty_higher,
                "lower" => ctx.penalty_lower,
                _ => 0.0,
            };
            bindings.insert(
                utility_slot(action, outcome),
                BindingValue::Value(-energy_cost - penalty),
            );
        }
    }
    Ok(Query {
        template_id: HEATING_TEMPLATE_ID.into(),
        bindings,
        requester: requester.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::enumerate_policies;
    use crate::pronouncer::Pronouncer;

    fn ctx() -> HeatingContext {
        HeatingContext::new(ThermalParams::default(), 16.0, 22.0, 3.0 * 3600.0)
    }

    #[test]
    fn template_registers_and_pronounces_default_context() {
        let p = Pronouncer::new();
        p.register_template(heating_template()).unwrap();
        let q = build_heating_query(&ctx(), 400, 42, "room").unwrap();
        let advice = p.pronounce(&q).unwrap();
        assert_eq!(advice.action_values.len(), 4);
        assert!(advice.filtered_out.is_empty());
        // Oracle equivalence on the bound diagram.
        let diagram = p
            .template(HEATING_TEMPLATE_ID)
            .unwrap()
            .instantiate(&q.bindings)
            .unwrap();
        let oracle = enumerate_policies(&diagram).unwrap();
        assert_eq!(advice.action, oracle.best_action);
        assert!((advice.expected_utility - oracle.expected_utility).abs() < 1e-9);
    }

    #[test]
    fn cpt_rows_sum_to_exactly_one() {
        let rows = generate_cpt(&HEATING_ACTIONS, &ctx(), 333, 7);
        assert_eq!(rows.len(), 20);
        for row in rows {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn cpt_is_reproducible_under_a_fixed_seed() {
        let a = generate_cpt(&HEATING_ACTIONS, &ctx(), 1000, 42);
        let b = generate_cpt(&HEATING_ACTIONS, &ctx(), 1000, 42);
        assert_eq!(a, b);
        let c = generate_cpt(&HEATING_ACTIONS, &ctx(), 1000, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_width_bin_with_deterministic_physics_gives_a_point_mass() {
        let mut context = ctx();
        // Collapse `near_zero` to exactly the desired temperature.
        context.outside_bins[2].lo = 0.0;
        context.outside_bins[2].hi = 0.0;
        context.outside_bins[1].lo = 0.0;
        context.outside_bins[3].hi = 0.0;
        let rows = generate_cpt(&["no_heat"], &context, 500, 1);
        let near_zero_row = &rows[2];
        assert!(near_zero_row.contains(&1.0));
        assert_eq!(near_zero_row.iter().filter(|p| **p == 0.0).count(), 2);
    }

    #[test]
    fn monte_carlo_frequencies_converge_with_sample_count() {
        // Compare a 10^4-sample row against a 10^6-sample reference for
        // one (action, bin) pair; every cell must agree within 0.05.
        let context = ctx();
        let coarse = generate_cpt(&["both_radiators"], &context, 10_000, 42);
        let reference = generate_cpt(&["both_radiators"], &context, 1_000_000, 42);
        for (row_c, row_r) in coarse.iter().zip(reference.iter()) {
            for (c, r) in row_c.iter().zip(row_r.iter()) {
                assert!((c - r).abs() <= 0.05, "{c} vs {r}");
            }
        }
    }

    #[test]
    fn point_mass_prior_and_certain_comfort_make_no_heat_best() {
        // Pin the outside temperature to the near-zero bin and hand-craft
        // a CPT where doing nothing certainly lands in `desired`.
        let p = Pronouncer::new();
        p.register_template(heating_template()).unwrap();
        let context = ctx();
        let mut q = build_heating_query(&context, 100, 5, "room").unwrap();
        q.bindings.insert(
            prior_slot(),
            BindingValue::Row(vec![0.0, 0.0, 1.0, 0.0, 0.0]),
        );
        for bin in &context.outside_bins {
            q.bindings.insert(
                result_slot("no_heat", &bin.label),
                BindingValue::Row(vec![0.0, 1.0, 0.0]),
            );
        }
        let advice = p.pronounce(&q).unwrap();
        assert_eq!(advice.action, "no_heat");
        let diagram = p
            .template(HEATING_TEMPLATE_ID)
            .unwrap()
            .instantiate(&q.bindings)
            .unwrap();
        let oracle = enumerate_policies(&diagram).unwrap();
        assert_eq!(oracle.best_action, "no_heat");
    }

    #[test]
    fn flat_utilities_fall_back_to_the_tie_break_action() {
        let p = Pronouncer::new();
        p.register_template(heating_template()).unwrap();
        let mut context = ctx();
        context.energy_weight = 0.0;
        context.penalty_higher = 0.0;
        context.penalty_lower = 0.0;
        let q = build_heating_query(&context, 200, 9, "room").unwrap();
        let advice = p.pronounce(&q).unwrap();
        assert_eq!(advice.action, HEATING_ACTIONS[0]);
    }

    #[test]
    fn context_validation_catches_bad_bins() {
        let mut context = ctx();
        context.outside_bins[0].prior = 0.5;
        assert!(matches!(
            context.validate(),
            Err(AgentError::InvalidContext(_))
        ));
        let mut context = ctx();
        context.outside_bins[1].hi = 3.0;
        assert!(matches!(
            context.validate(),
            Err(AgentError::InvalidContext(_))
        ));
        assert!(ctx().validate().is_ok());
    }

    #[test]
    fn cold_prior_with_comfort_weighting_advises_heating() {
        let p = Pronouncer::new();
        p.register_template(heating_template()).unwrap();
        let mut context = ctx();
        // Outside almost surely moderately below the setpoint: both
        // radiators reach it in time, one is too slow, doing nothing is
        // penalized.
        for (i, bin) in context.outside_bins.iter_mut().enumerate() {
            bin.prior = if i == 3 { 1.0 } else { 0.0 };
        }
        let q = build_heating_query(&context, 500, 11, "room").unwrap();
        let advice = p.pronounce(&q).unwrap();
        assert_eq!(advice.action, "both_radiators");
    }

    #[test]
    fn norm_filter_bumps_the_advice_to_the_second_best_action() {
        use crate::pronouncer::NormFilter;

        let context = ctx();
        let q = build_heating_query(&context, 500, 13, "room").unwrap();
        let template = heating_template();
        let diagram = template.instantiate(&q.bindings).unwrap();

        // Oracle ranking of the four actions on the bound diagram.
        let oracle = enumerate_policies(&diagram).unwrap();
        let mut ranked: Vec<(&String, f64)> =
            oracle.action_values.iter().map(|(a, v)| (a, *v)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let (best, second) = (ranked[0].0.clone(), ranked[1].0.clone());
        assert_ne!(best, second);

        let p = Pronouncer::new();
        p.register_template_with_filter(template, NormFilter::forbidding([best.clone()]))
            .unwrap();
        let advice = p.pronounce(&q).unwrap();
        assert_eq!(advice.action, second);
        assert_eq!(advice.filtered_out, vec![best]);
    }

    #[test]
    fn forecast_prior_concentrates_on_the_observed_bin() {
        let bins = default_outside_bins();
        let row = forecast_prior(&bins, -12.0, 4.0);
        assert_eq!(row.iter().sum::<f64>(), 1.0);
        // -12 sits in high_neg with mid_neg adjacent; together they carry
        // nearly all of the mass.
        assert!(row[4] > 0.4, "{row:?}");
        assert!(row[3] > 0.3, "{row:?}");
        assert!(row[0] + row[1] < 0.05, "{row:?}");
        // Disabled spread returns the configured priors.
        assert_eq!(forecast_prior(&bins, -12.0, 0.0), vec![0.2; 5]);
    }
}
