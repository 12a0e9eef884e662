use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{group_of, AgentId, Condition, GroupLabel, SimulationConfig, TrustMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPresentation {
    HiddenInternalTag,
    Visible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEntry {
    pub peer: AgentId,
    pub peer_label: Option<GroupLabel>,
    /// Full precision; rounding happens only when rendering.
    pub trust: f64,
}

/// Everything an agent is shown on its turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextView {
    pub condition: Condition,
    pub actor: AgentId,
    pub personality: String,
    pub own_label: Option<GroupLabel>,
    pub own_label_presentation: LabelPresentation,
    pub target: AgentId,
    pub target_label: Option<GroupLabel>,
    pub trust_entries: Vec<TrustEntry>,
    pub memory_summary: String,
    pub budget_remaining: Option<u32>,
}

impl ContextView {
    pub fn n_agents(&self) -> usize {
        self.trust_entries.len() + 1
    }

    pub fn trust_in(&self, peer: AgentId) -> Option<f64> {
        self.trust_entries
            .iter()
            .find(|e| e.peer == peer)
            .map(|e| e.trust)
    }

    /// Group labels the actor can see: the header pair plus any labels in
    /// the trust list. The internal tag in Condition A is not counted.
    pub fn label_exposures(&self) -> usize {
        let own = usize::from(
            self.own_label.is_some() && self.own_label_presentation == LabelPresentation::Visible,
        );
        let target = usize::from(self.target_label.is_some());
        let listed = self
            .trust_entries
            .iter()
            .filter(|e| e.peer_label.is_some())
            .count();
        own + target + listed
    }

    /// True when the target shares the actor's group and both labels are visible.
    pub fn target_in_group(&self) -> Option<bool> {
        match (
            self.own_label,
            self.own_label_presentation,
            self.target_label,
        ) {
            (Some(own), LabelPresentation::Visible, Some(target)) => Some(own == target),
            _ => None,
        }
    }
}

/// Builds the per-turn view according to the condition's label rules.
pub fn assemble_context(
    trust: &TrustMatrix,
    config: &SimulationConfig,
    actor: AgentId,
    target: AgentId,
    personality: &str,
    memory_summary: &str,
    budget_remaining: u32,
) -> ContextView {
    debug_assert_ne!(actor, target);
    let condition = config.condition;
    let header = condition.header_labels_visible();
    let listed = condition.list_labels_visible();
    let trust_entries = (0..config.n_agents)
        .filter(|&j| j != actor.0)
        .map(|j| TrustEntry {
            peer: AgentId(j),
            peer_label: listed.then(|| group_of(AgentId(j))),
            trust: trust.get(actor.0, j),
        })
        .collect();
    ContextView {
        condition,
        actor,
        personality: personality.to_string(),
        own_label: Some(group_of(actor)),
        own_label_presentation: if header {
            LabelPresentation::Visible
        } else {
            LabelPresentation::HiddenInternalTag
        },
        target,
        target_label: header.then(|| group_of(target)),
        trust_entries,
        memory_summary: memory_summary.to_string(),
        budget_remaining: condition.has_budget().then_some(budget_remaining),
    }
}

/// Renders the per-turn user message.
pub fn render_user_message(view: &ContextView) -> String {
    let mut out = String::with_capacity(1024);
    let _ = writeln!(out, "You are {}.", view.actor);
    let _ = writeln!(out, "Personality: {}", view.personality);
    match (view.own_label, view.own_label_presentation) {
        (Some(label), LabelPresentation::Visible) => {
            let _ = writeln!(out, "Your group: {label}");
        }
        (Some(label), LabelPresentation::HiddenInternalTag) => {
            let _ = writeln!(out, "(Your internal group tag: {label})");
        }
        (None, _) => {}
    }
    if let Some(label) = view.target_label {
        let _ = writeln!(out, "Target's group: {label}");
    }
    if let Some(left) = view.budget_remaining {
        let _ = writeln!(
            out,
            "High-value actions (cooperate, alliance_offer) remaining in this budget period: {left}"
        );
    }
    let _ = writeln!(out, "Memory: {}", view.memory_summary);
    out.push('\n');
    out.push_str("Other agents and your current trust scores:\n");
    for e in &view.trust_entries {
        match e.peer_label {
            Some(label) => {
                let _ = writeln!(out, "  {} [{}] -- trust: {:.2}", e.peer, label, e.trust);
            }
            None => {
                let _ = writeln!(out, "  {} -- trust: {:.2}", e.peer, e.trust);
            }
        }
    }
    out.push('\n');
    let _ = writeln!(out, "You are now interacting with {}.", view.target);
    out.push_str("Produce your JSON action now.");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(condition: Condition) -> ContextView {
        let config = SimulationConfig::default().with_condition(condition);
        let trust = TrustMatrix::new(config.n_agents);
        assemble_context(
            &trust,
            &config,
            AgentId(18),
            AgentId(13),
            "diplomatic and fair",
            "[prior interactions summarized]",
            2,
        )
    }

    fn occurrences(text: &str) -> usize {
        text.matches("Kappa").count() + text.matches("Tilon").count()
    }

    #[test]
    fn condition_a_hides_labels() {
        let v = view(Condition::A);
        assert_eq!(v.target_label, None);
        assert_eq!(
            v.own_label_presentation,
            LabelPresentation::HiddenInternalTag
        );
        assert!(v.trust_entries.iter().all(|e| e.peer_label.is_none()));
        assert_eq!(v.label_exposures(), 0);
        assert_eq!(v.target_in_group(), None);
        let text = render_user_message(&v);
        assert!(text.contains("(Your internal group tag: Kappa)"));
        assert_eq!(occurrences(&text), 1);
    }

    #[test]
    fn condition_b_and_c_expose_21_labels() {
        for c in [Condition::B, Condition::C] {
            let v = view(c);
            assert_eq!(v.label_exposures(), 21);
            assert_eq!(occurrences(&render_user_message(&v)), 21);
            assert_eq!(v.target_in_group(), Some(false));
        }
    }

    #[test]
    fn condition_d_exposes_header_only() {
        let v = view(Condition::D);
        assert_eq!(v.label_exposures(), 2);
        assert!(v.trust_entries.iter().all(|e| e.peer_label.is_none()));
        assert_eq!(occurrences(&render_user_message(&v)), 2);
    }

    #[test]
    fn budget_shown_in_c_only() {
        assert_eq!(view(Condition::C).budget_remaining, Some(2));
        assert_eq!(view(Condition::B).budget_remaining, None);
    }

    #[test]
    fn rendering_matches_trace_layout() {
        let text = render_user_message(&view(Condition::B));
        let expected_head = "You are agent_18.\nPersonality: diplomatic and fair\nYour group: Kappa\nTarget's group: Tilon\nMemory: [prior interactions summarized]\n\nOther agents and your current trust scores:\n  agent_00 [Kappa] -- trust: 0.50\n  agent_01 [Tilon] -- trust: 0.50\n";
        assert!(text.starts_with(expected_head), "{text}");
        assert!(
            text.ends_with("You are now interacting with agent_13.\nProduce your JSON action now.")
        );
        assert!(!text.contains("agent_18 ["));
        assert_eq!(view(Condition::B).trust_entries.len(), 19);
    }

    #[test]
    fn trust_is_rounded_only_in_text() {
        let config = SimulationConfig::default();
        let mut trust = TrustMatrix::new(20);
        trust.set(0, 1, 0.654321).unwrap();
        let v = assemble_context(&trust, &config, AgentId(0), AgentId(1), "x", "m", 2);
        assert_eq!(v.trust_in(AgentId(1)), Some(0.654321));
        assert!(render_user_message(&v).contains("agent_01 [Tilon] -- trust: 0.65"));
    }
}
