use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunIoError;
use crate::model::{ActionType, SimulationConfig};
use crate::policies::{
    ActionRates, BackendConfig, BackendPolicy, Policy, PromptTemplate, ScriptedParams,
    ScriptedPolicy,
};

/// Which policy drives a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Scripted(ScriptedParams),
    /// Uses the `[backend]` section.
    Backend,
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Scripted(ScriptedParams::default())
    }
}

/// A config file: `[simulation]`, `[policy]` and `[backend]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentFile {
    pub simulation: SimulationConfig,
    pub policy: PolicySpec,
    pub backend: BackendConfig,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, RunIoError> {
        let file: ExperimentFile =
            toml::from_str(text).map_err(|e| RunIoError::Config(e.to_string()))?;
        file.simulation
            .validate()
            .map_err(|e| RunIoError::Config(e.to_string()))?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, RunIoError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunIoError::io(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, RunIoError> {
    v.parse()
        .map_err(|_| RunIoError::PolicySpec(format!("`{key}` expects a number, got {v:?}")))
}

/// Parses `kind[:key=value,...]`, e.g. `scripted:delta=10` or
/// `scripted:cooperate=1`. Backend keys override `backend`.
pub fn parse_policy_spec(
    text: &str,
    backend: &mut BackendConfig,
) -> Result<PolicySpec, RunIoError> {
    let (kind, rest) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
    let pairs = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| RunIoError::PolicySpec(format!("expected key=value, got {kv:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match kind {
        "scripted" => {
            let mut params = ScriptedParams::default();
            let mut rates: Vec<(ActionType, f64)> = Vec::new();
            for (k, v) in pairs {
                match k {
                    "delta" | "delta_pp" => params.delta_pp = parse_f64(k, v)?,
                    "channel" => {
                        params.favored_channel = v
                            .parse()
                            .map_err(|_| RunIoError::PolicySpec(format!("unknown channel {v:?}")))?
                    }
                    "mention_in" => params.mention_rate_in_group = parse_f64(k, v)?,
                    "mention_out" => params.mention_rate_out_group = parse_f64(k, v)?,
                    other => match other.parse::<ActionType>() {
                        Ok(a) => rates.push((a, parse_f64(k, v)?)),
                        Err(_) => {
                            return Err(RunIoError::PolicySpec(format!("unknown key {other:?}")))
                        }
                    },
                }
            }
            if !rates.is_empty() {
                params.base_rates = ActionRates::from_pairs(&rates)
                    .map_err(|e| RunIoError::PolicySpec(e.to_string()))?;
            }
            params
                .group_rates()
                .map_err(|e| RunIoError::PolicySpec(e.to_string()))?;
            Ok(PolicySpec::Scripted(params))
        }
        "backend" => {
            for (k, v) in pairs {
                match k {
                    "model" => backend.model = v.to_string(),
                    "endpoint" => backend.endpoint = v.to_string(),
                    "retries" => {
                        backend.max_retries = v
                            .parse()
                            .map_err(|_| RunIoError::PolicySpec(format!("bad retries {v:?}")))?
                    }
                    "timeout_ms" => {
                        backend.timeout_ms = v
                            .parse()
                            .map_err(|_| RunIoError::PolicySpec(format!("bad timeout_ms {v:?}")))?
                    }
                    "prompt" => {
                        backend.prompt = match v {
                            "neutral" => PromptTemplate::Neutral,
                            "explicit" => PromptTemplate::Explicit,
                            _ => {
                                return Err(RunIoError::PolicySpec(format!("unknown prompt {v:?}")))
                            }
                        }
                    }
                    other => return Err(RunIoError::PolicySpec(format!("unknown key {other:?}"))),
                }
            }
            Ok(PolicySpec::Backend)
        }
        other => Err(RunIoError::PolicySpec(format!(
            "unknown policy kind {other:?}"
        ))),
    }
}

/// Short label stored in the config so logs record what produced them.
pub fn policy_label(spec: &PolicySpec, backend: &BackendConfig) -> String {
    match spec {
        PolicySpec::Scripted(p) => {
            let rates: Vec<String> = ActionType::ALL
                .iter()
                .filter(|a| p.base_rates.get(**a) > 0.0)
                .map(|a| format!("{}={}", a, p.base_rates.get(*a)))
                .collect();
            let mut label = format!(
                "scripted:delta={},channel={},{}",
                p.delta_pp,
                p.favored_channel,
                rates.join(",")
            );
            if p.mention_rate_in_group > 0.0 || p.mention_rate_out_group > 0.0 {
                label.push_str(&format!(
                    ",mention_in={},mention_out={}",
                    p.mention_rate_in_group, p.mention_rate_out_group
                ));
            }
            label
        }
        PolicySpec::Backend => format!(
            "backend:model={},prompt={:?}",
            backend.model, backend.prompt
        )
        .to_lowercase(),
    }
}

pub fn build_policy(
    spec: &PolicySpec,
    backend: &BackendConfig,
) -> Result<Box<dyn Policy>, RunIoError> {
    match spec {
        PolicySpec::Scripted(p) => Ok(Box::new(
            ScriptedPolicy::new(p.clone()).map_err(|e| RunIoError::PolicySpec(e.to_string()))?,
        )),
        PolicySpec::Backend => Ok(Box::new(
            BackendPolicy::http(backend.clone().with_env_override())
                .map_err(|e| RunIoError::PolicySpec(e.to_string()))?,
        )),
    }
}

/// SHA-256 over the canonical JSON of the config, hex encoded.
pub fn config_hash(config: &SimulationConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Hash over a set of hashes, order-independent.
pub fn combined_hash<'a>(hashes: impl IntoIterator<Item = &'a str>) -> String {
    let mut all: Vec<&str> = hashes.into_iter().collect();
    all.sort_unstable();
    let mut h = Sha256::new();
    for x in all {
        h.update(x.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Condition;

    #[test]
    fn parses_scripted_specs() {
        let mut b = BackendConfig::default();
        match parse_policy_spec("scripted:delta=10", &mut b).unwrap() {
            PolicySpec::Scripted(p) => assert_eq!(p.delta_pp, 10.0),
            _ => panic!(),
        }
        match parse_policy_spec("scripted:cooperate=1", &mut b).unwrap() {
            PolicySpec::Scripted(p) => {
                assert_eq!(p.base_rates, ActionRates::only(ActionType::Cooperate))
            }
            _ => panic!(),
        }
        assert!(parse_policy_spec("scripted:detla=10", &mut b).is_err());
        assert!(parse_policy_spec("scripted:compliment=0.7", &mut b).is_err());
        assert!(parse_policy_spec("oracle", &mut b).is_err());
    }

    #[test]
    fn backend_overrides() {
        let mut b = BackendConfig::default();
        assert_eq!(
            parse_policy_spec("backend:model=m7,prompt=explicit", &mut b).unwrap(),
            PolicySpec::Backend
        );
        assert_eq!(b.model, "m7");
        assert_eq!(b.prompt, PromptTemplate::Explicit);
    }

    #[test]
    fn experiment_file_round_trip() {
        let text = r#"
[simulation]
n_agents = 20
n_turns = 100
condition = "C"
seed = 4

[policy]
kind = "scripted"
delta_pp = 10.0
base_rates = { compliment = 0.5, neutral = 0.5 }

[backend]
model = "x"
"#;
        let f = ExperimentFile::parse(text).unwrap();
        assert_eq!(f.simulation.condition, Condition::C);
        assert_eq!(f.simulation.n_turns, 100);
        assert!(matches!(f.policy, PolicySpec::Scripted(ref p) if p.delta_pp == 10.0));
        assert_eq!(ExperimentFile::parse(&f.to_toml()).unwrap(), f);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "[simulation]\nn_agent = 20\n",
            "[simulaton]\nn_agents = 20\n",
            "[policy]\nkind = \"scripted\"\ndelta = 3.0\n",
            "[backend]\nmodle = \"x\"\n",
        ] {
            assert!(ExperimentFile::parse(text).is_err(), "{text}");
        }
        assert!(ExperimentFile::parse("[simulation]\nn_agents = 5\n").is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = SimulationConfig::default();
        let h = config_hash(&base);
        assert_eq!(h, config_hash(&base.clone()));
        assert_eq!(h.len(), 64);
        let variants = [
            base.clone().with_seed(1),
            base.clone().with_condition(Condition::A),
            SimulationConfig {
                edge_threshold: 0.61,
                ..base.clone()
            },
            SimulationConfig {
                target_side_updates: false,
                ..base.clone()
            },
            SimulationConfig {
                policy_label: "x".into(),
                ..base.clone()
            },
        ];
        for v in variants {
            assert_ne!(config_hash(&v), h);
        }
        let mut streams = base.clone();
        streams.streams.partner = "partner2".into();
        assert_ne!(config_hash(&streams), h);
    }
}
