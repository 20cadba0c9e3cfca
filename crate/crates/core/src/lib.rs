//! Decision-analytic heating control for simulated buildings.
//!
//! The crate bundles four layers that build on each other:
//!
//! * [`decision`] — influence diagrams, decision trees, and two mutually
//!   checking evaluators (fold-back and exhaustive policy enumeration).
//! * [`pronouncer`] — a template registry that agents query with value
//!   bindings and that answers with the utility-maximizing action, plus a
//!   newline-delimited JSON message codec, an optional Unix-socket
//!   transport, and a set/evaluate micro-benchmark.
//! * [`thermal`] — a first-order lumped RC room model with both stepped
//!   and closed-form solutions.
//! * [`agents`] / [`sim`] — room, comfort, and device behavior (setpoint
//!   negotiation, preheat planning, CPT generation from the physics,
//!   overrides) and the deterministic whole-building simulation with
//!   energy and comfort accounting.

pub mod agents;
pub mod decision;
pub mod pronouncer;
pub mod sim;
pub mod thermal;
