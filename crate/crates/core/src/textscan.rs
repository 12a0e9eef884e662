//! Group-language detection in reasoning strings.
//!
//! Tier 1 matches the two label tokens as whole words. Tier 2 matches a
//! fixed list of group-referencing phrases. Both are case-insensitive.

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, RunLog, TurnRecord};
use crate::stats::{mcnemar, McNemarResult};

pub const TIER2_PHRASES: [&str; 13] = [
    "my group",
    "their group",
    "our group",
    "same group",
    "different group",
    "in-group",
    "out-group",
    "ingroup",
    "outgroup",
    "group member",
    "other group",
    "group identity",
    "group affiliation",
];

/// Largest gap in global turns between the two turns of a pair.
pub const PAIR_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Label tokens.
    Tier1,
    /// Group-language phrases.
    Tier2,
    /// Either tier.
    Any,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Tier1 => "tier1",
            Tier::Tier2 => "tier2",
            Tier::Any => "any",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TierPattern {
    tier1: Regex,
    tier2: Regex,
}

impl Default for TierPattern {
    fn default() -> Self {
        Self::new()
    }
}

impl TierPattern {
    pub fn new() -> Self {
        let phrases: Vec<String> = TIER2_PHRASES.iter().map(|p| regex::escape(p)).collect();
        TierPattern {
            tier1: Regex::new(r"(?i)\b(?:kappa|tilon)\b").expect("static pattern"),
            // Leading boundary only, so plurals ("group members") still match.
            tier2: Regex::new(&format!(r"(?i)\b(?:{})", phrases.join("|")))
                .expect("static pattern"),
        }
    }

    pub fn matches(&self, text: &str, tier: Tier) -> bool {
        match tier {
            Tier::Tier1 => self.tier1.is_match(text),
            Tier::Tier2 => self.tier2.is_match(text),
            Tier::Any => self.tier1.is_match(text) || self.tier2.is_match(text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MentionRate {
    pub n_turns: usize,
    pub n_matching: usize,
    /// `None` for an empty log.
    pub rate: Option<f64>,
}

pub fn mention_rate(log: &RunLog, pattern: &TierPattern, tier: Tier) -> MentionRate {
    rate_over(&log.records, pattern, tier)
}

fn rate_over(records: &[TurnRecord], pattern: &TierPattern, tier: Tier) -> MentionRate {
    let n_matching = records
        .iter()
        .filter(|r| pattern.matches(&r.reasoning, tier))
        .count();
    MentionRate {
        n_turns: records.len(),
        n_matching,
        rate: (!records.is_empty()).then(|| n_matching as f64 / records.len() as f64),
    }
}

/// Mention rate of each run keyed by seed. Later logs with a repeated seed
/// replace earlier ones.
pub fn mention_rates_by_seed<'a>(
    logs: impl IntoIterator<Item = &'a RunLog>,
    pattern: &TierPattern,
    tier: Tier,
) -> BTreeMap<u64, MentionRate> {
    logs.into_iter()
        .map(|l| (l.config.seed, mention_rate(l, pattern, tier)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastivePair {
    pub actor: AgentId,
    pub turn_ig: usize,
    pub turn_og: usize,
    pub mention_ig: bool,
    pub mention_og: bool,
}

/// Adjacent actor-turns of the same actor, one aimed in-group and one
/// out-group, at most `PAIR_WINDOW` global turns apart. A turn may belong to
/// two overlapping pairs. Mentions are tier-1 label mentions.
pub fn extract_contrastive_pairs(log: &RunLog) -> Vec<ContrastivePair> {
    extract_contrastive_pairs_with(log, &TierPattern::new(), Tier::Tier1)
}

pub fn extract_contrastive_pairs_with(
    log: &RunLog,
    pattern: &TierPattern,
    tier: Tier,
) -> Vec<ContrastivePair> {
    let mut last: BTreeMap<AgentId, &TurnRecord> = BTreeMap::new();
    let mut pairs = Vec::new();
    for rec in &log.records {
        if let Some(prev) = last.insert(rec.actor, rec) {
            if prev.is_in_group() != rec.is_in_group() && rec.turn - prev.turn <= PAIR_WINDOW {
                let (ig, og) = if prev.is_in_group() {
                    (prev, rec)
                } else {
                    (rec, prev)
                };
                pairs.push(ContrastivePair {
                    actor: rec.actor,
                    turn_ig: ig.turn,
                    turn_og: og.turn,
                    mention_ig: pattern.matches(&ig.reasoning, tier),
                    mention_og: pattern.matches(&og.reasoning, tier),
                });
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAsymmetry {
    pub n_pairs: usize,
    pub n_ig_only: u64,
    pub n_og_only: u64,
    /// Positive when labels appear more on in-group turns.
    pub asymmetry_pp: f64,
    /// `None` when no pair has an exclusive mention.
    pub test: Option<McNemarResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextscanError {
    #[error("no contrastive pairs")]
    NoPairs,
}

pub fn pair_asymmetry(pairs: &[ContrastivePair]) -> Result<PairAsymmetry, TextscanError> {
    if pairs.is_empty() {
        return Err(TextscanError::NoPairs);
    }
    let n_ig_only = pairs
        .iter()
        .filter(|p| p.mention_ig && !p.mention_og)
        .count() as u64;
    let n_og_only = pairs
        .iter()
        .filter(|p| p.mention_og && !p.mention_ig)
        .count() as u64;
    Ok(PairAsymmetry {
        n_pairs: pairs.len(),
        n_ig_only,
        n_og_only,
        asymmetry_pp: 100.0 * (n_ig_only as f64 - n_og_only as f64) / pairs.len() as f64,
        test: mcnemar(n_ig_only, n_og_only).ok(),
    })
}
