//! Outcome measurements over trust matrices and run logs.
//!
//! Undefined quantities (empty strata, edgeless graphs) are `None`, never 0.

mod actions;
mod bias;
mod graph;

pub use actions::{
    action_counts, action_distribution_by_group, action_homophily, budget_attempt_bias,
    mean_adjacency, pooled_action_distribution, ActionDistribution, ActionShare, AdjacencyReport,
    BudgetAuditReport, HomophilyReport,
};
pub use bias::{bias_time_series, compute_bias, BiasReport};
pub use graph::{assortativity, build_trust_graph, TrustGraph};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Condition, RunLog};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("an agent has no peers in its own group or none in the other")]
    EmptyGroup,
    #[error("{labels} labels for {agents} agents")]
    LabelCount { labels: usize, agents: usize },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("no runs given")]
    NoRuns,
    #[error("runs have different agent counts")]
    Heterogeneous,
}

/// Headline per-run numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub condition: Condition,
    pub policy_label: String,
    pub mean_bias: f64,
    pub homophily: Option<f64>,
    pub assortativity: Option<f64>,
    pub n_edges: usize,
    pub n_enforced: usize,
    pub r_attempt: Option<f64>,
    pub policy_errors: usize,
}

pub fn run_metrics(log: &RunLog) -> Result<RunMetrics, MetricError> {
    let labels = log.config.labels();
    let bias = compute_bias(&log.final_trust, &labels)?;
    let graph = build_trust_graph(
        &log.final_trust,
        &labels,
        log.config.edge_threshold,
        log.config.edge_rule,
    );
    let audit = budget_attempt_bias(log);
    Ok(RunMetrics {
        seed: log.config.seed,
        condition: log.config.condition,
        policy_label: log.config.policy_label.clone(),
        mean_bias: bias.seed_mean_bias,
        homophily: action_homophily(log).h,
        assortativity: assortativity(&graph),
        n_edges: graph.edges.len(),
        n_enforced: audit.n_enforced,
        r_attempt: audit.r_attempt,
        policy_errors: log.records.iter().filter(|r| r.policy_error).count(),
    })
}
