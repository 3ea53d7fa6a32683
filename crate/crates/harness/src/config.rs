//! Flat `key = value` experiment configuration and the built-in presets.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `experiment` | `online` or `pfe` | `online` |
//! | `env` | `random`, `two-state`, `file`, `basic`, `full` | `random` |
//! | `states`, `actions`, `horizon`, `objectives` | random instance shape | 20, 5, 10, 15 |
//! | `transitions` | `stationary` or `per-step` (random only) | `stationary` |
//! | `env_seed` | seed of the generated environment | 0 |
//! | `env_file` | model path when `env = file` | |
//! | `leaves`, `eps`, `eps1` | hard-instance parameters | 4, 0.1, 0.25 |
//! | `dims` | objective counts to sweep; the base instance is built with the largest | |
//! | `agents` | `mo-ucbvi`, `mo-ucbvi-bernstein`, `best-in-hindsight`, `q-learning` | `mo-ucbvi` |
//! | `adversary` | `iid`, `fixed`, `cyclic`, `greedy`, `oracle` | `iid` |
//! | `preference` | weights for the `fixed` adversary | uniform |
//! | `resolution` | lattice resolution of `oracle` and of the PFE grid | 10 |
//! | `episodes` | K; a list for `pfe` | 5000 |
//! | `seeds` | distinct run seeds | 0 |
//! | `master_seed` | root of the per-cell seed derivation | 0 |
//! | `scale`, `delta` | bonus scale and confidence | 0.1, 0.1 |
//! | `out` | output directory | `results` |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown preset `{0}` (expected figure1, figure2, figure3 or pfe-scaling)")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Online,
    Pfe,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Random {
        states: usize,
        actions: usize,
        horizon: usize,
        objectives: usize,
        per_step: bool,
    },
    TwoState,
    File(PathBuf),
    Basic {
        objectives: usize,
        actions: usize,
        eps: f64,
    },
    Full {
        leaves: usize,
        objectives: Option<usize>,
        actions: usize,
        horizon: usize,
        eps: f64,
        eps1: f64,
    },
}

/// The agents a cell can run. The position in [`AgentKind::ALL`] is the agent
/// index used for seed derivation, so it never depends on the configured list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Ucbvi,
    Bernstein,
    Hindsight,
    QLearning,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Ucbvi, AgentKind::Bernstein, AgentKind::Hindsight, AgentKind::QLearning];

    pub fn index(self) -> u64 {
        AgentKind::ALL.iter().position(|&a| a == self).expect("listed") as u64
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ucbvi => "mo-ucbvi",
            AgentKind::Bernstein => "mo-ucbvi-bernstein",
            AgentKind::Hindsight => "best-in-hindsight",
            AgentKind::QLearning => "q-learning",
        }
    }
}

impl FromStr for AgentKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        AgentKind::ALL.into_iter().find(|a| a.name() == s).ok_or(())
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    Iid,
    Fixed(Option<Vec<f64>>),
    Cyclic,
    Greedy,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub env: EnvSpec,
    pub env_seed: u64,
    pub dims: Option<Vec<usize>>,
    pub agents: Vec<AgentKind>,
    pub adversary: AdversarySpec,
    pub resolution: usize,
    pub episodes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub scale: f64,
    pub delta: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Online,
            env: EnvSpec::Random {
                states: 20,
                actions: 5,
                horizon: 10,
                objectives: 15,
                per_step: false,
            },
            env_seed: 0,
            dims: None,
            agents: vec![AgentKind::Ucbvi],
            adversary: AdversarySpec::Iid,
            resolution: 10,
            episodes: vec![5000],
            seeds: vec![0],
            master_seed: 0,
            scale: 0.1,
            delta: 0.1,
            out: PathBuf::from("results"),
        }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "env",
    "states",
    "actions",
    "horizon",
    "objectives",
    "transitions",
    "env_seed",
    "env_file",
    "leaves",
    "eps",
    "eps1",
    "dims",
    "agents",
    "adversary",
    "preference",
    "resolution",
    "episodes",
    "seeds",
    "master_seed",
    "scale",
    "delta",
    "out",
];

/// Splits `key = value` lines into a map, rejecting duplicates and unknown keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(map)
}

fn value<V: FromStr>(map: &BTreeMap<String, String>, key: &str, default: V) -> Result<V, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
            key: key.into(),
            value: v.clone(),
        }),
    }
}

fn list<V: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<V>>, ConfigError> {
    let Some(v) = map.get(key) else { return Ok(None) };
    v.split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<V>, _>>()
        .map(Some)
        .map_err(|_| ConfigError::BadValue {
            key: key.into(),
            value: v.clone(),
        })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let d = ExperimentConfig::default();
        let bad = |key: &str| ConfigError::BadValue {
            key: key.into(),
            value: map[key].clone(),
        };
        let kind = match map.get("experiment").map(String::as_str) {
            None | Some("online") => ExperimentKind::Online,
            Some("pfe") => ExperimentKind::Pfe,
            Some(_) => return Err(bad("experiment")),
        };
        let objectives = value(map, "objectives", 15)?;
        let actions = value(map, "actions", 5)?;
        let horizon = value(map, "horizon", 10)?;
        let eps = value(map, "eps", 0.1)?;
        let env = match map.get("env").map(String::as_str) {
            None | Some("random") => EnvSpec::Random {
                states: value(map, "states", 20)?,
                actions,
                horizon,
                objectives,
                per_step: match map.get("transitions").map(String::as_str) {
                    None | Some("stationary") => false,
                    Some("per-step") => true,
                    Some(_) => return Err(bad("transitions")),
                },
            },
            Some("two-state") => EnvSpec::TwoState,
            Some("file") => EnvSpec::File(
                map.get("env_file")
                    .map(PathBuf::from)
                    .ok_or_else(|| ConfigError::Invalid("`env = file` needs `env_file`".into()))?,
            ),
            Some("basic") => EnvSpec::Basic { objectives, actions, eps },
            Some("full") => EnvSpec::Full {
                leaves: value(map, "leaves", 4)?,
                objectives: map.contains_key("objectives").then_some(objectives),
                actions,
                horizon,
                eps,
                eps1: value(map, "eps1", 0.25)?,
            },
            Some(_) => return Err(bad("env")),
        };
        let agents = match map.get("agents") {
            None => d.agents,
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<AgentKind>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("agents"))?,
        };
        let adversary = match map.get("adversary").map(String::as_str) {
            None | Some("iid") => AdversarySpec::Iid,
            Some("fixed") => AdversarySpec::Fixed(list(map, "preference")?),
            Some("cyclic") => AdversarySpec::Cyclic,
            Some("greedy") => AdversarySpec::Greedy,
            Some("oracle") => AdversarySpec::Oracle,
            Some(_) => return Err(bad("adversary")),
        };
        let cfg = Self {
            kind,
            env,
            env_seed: value(map, "env_seed", 0)?,
            dims: list(map, "dims")?,
            agents,
            adversary,
            resolution: value(map, "resolution", d.resolution)?,
            episodes: list(map, "episodes")?.unwrap_or(d.episodes),
            seeds: list(map, "seeds")?.unwrap_or(d.seeds),
            master_seed: value(map, "master_seed", 0)?,
            scale: value(map, "scale", d.scale)?,
            delta: value(map, "delta", d.delta)?,
            out: map.get("out").map(PathBuf::from).unwrap_or(d.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.seeds.is_empty() {
            return invalid("no seeds");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return invalid("seeds must be distinct");
        }
        if self.agents.is_empty() {
            return invalid("no agents");
        }
        if self.episodes.is_empty() || self.episodes.contains(&0) {
            return invalid("episodes must be positive");
        }
        if self.kind == ExperimentKind::Online && self.episodes.len() != 1 {
            return invalid("online experiments take a single `episodes` value");
        }
        if !(self.scale > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid("need scale > 0 and delta in (0, 1)");
        }
        if self.resolution == 0 {
            return invalid("resolution must be positive");
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() || dims.contains(&0) {
                return invalid("dims must be positive");
            }
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::parse(preset_text(name)?)
    }
}

/// The text of a built-in preset, in the same format as a config file.
pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    Ok(match name {
        "figure1" => FIGURE1,
        "figure2" => FIGURE2,
        "figure3" => FIGURE3,
        "pfe-scaling" => PFE_SCALING,
        _ => return Err(ConfigError::UnknownPreset(name.into())),
    })
}

const FIGURE1: &str = "\
env = random
states = 20
actions = 5
horizon = 10
objectives = 15
agents = mo-ucbvi, best-in-hindsight
adversary = iid
episodes = 5000
seeds = 0, 1, 2, 3, 4
scale = 0.1
out = results/figure1
";

const FIGURE2: &str = "\
env = random
states = 20
actions = 5
horizon = 10
objectives = 15
agents = mo-ucbvi, q-learning
adversary = iid
episodes = 5000
seeds = 0, 1, 2, 3, 4
scale = 0.1
out = results/figure2
";

const FIGURE3: &str = "\
env = random
states = 20
actions = 5
horizon = 10
objectives = 30
dims = 1, 5, 15, 20, 30
agents = mo-ucbvi
adversary = iid
episodes = 5000
seeds = 0, 1, 2, 3, 4
scale = 0.1
out = results/figure3
";

const PFE_SCALING: &str = "\
experiment = pfe
env = random
states = 6
actions = 3
horizon = 5
objectives = 3
resolution = 4
episodes = 5000, 20000
seeds = 0, 1, 2, 3, 4
scale = 0.1
out = results/pfe-scaling
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in ["figure1", "figure2", "figure3", "pfe-scaling"] {
            ExperimentConfig::preset(name).unwrap();
        }
        let f3 = ExperimentConfig::preset("figure3").unwrap();
        assert_eq!(f3.dims, Some(vec![1, 5, 15, 20, 30]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::parse("seeds = 1, 1"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("agents = sarsa"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("env"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(ExperimentConfig::parse("episodes = 10, 20").is_err());
    }

    #[test]
    fn comments_and_defaults() {
        let cfg = ExperimentConfig::parse("# smoke\nenv = two-state\n\nepisodes = 10\n").unwrap();
        assert_eq!(cfg.env, EnvSpec::TwoState);
        assert_eq!(cfg.episodes, vec![10]);
        assert_eq!(cfg.agents, vec![AgentKind::Ucbvi]);
    }
}
