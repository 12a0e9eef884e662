//! Deterministic minimal-group trust simulator and bias-audit toolkit.
//!
//! Agents carry a trust vector toward every peer and a group label
//! (`Kappa` or `Tilon`). Each turn one actor picks a social action toward a
//! randomly paired partner, and the engine applies the trust update rules.
//! The analysis side measures in-group bias, action homophily, trust-graph
//! assortativity and the reasoning-trace statistics, with the inference
//! kernels (Wilcoxon, Benjamini-Hochberg, McNemar, ...) alongside.

pub mod calibration;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod runio;
pub mod stats;
pub mod streams;
pub mod textscan;

pub use engine::{run_simulation, ContextView, EngineError};
pub use model::{
    group_of, validate_decision, ActionDecision, ActionType, AgentId, Condition, GroupLabel,
    RunLog, SimulationConfig, TrustMatrix, TurnRecord,
};
pub use policies::{Policy, ScriptedParams, ScriptedPolicy};
