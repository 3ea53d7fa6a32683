//! Building environments from a config and running its cells.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use morl::adversary::PreferenceSource;
use morl::agents::{run_best_in_hindsight, run_online, run_q_learning, EpisodeLog, QLearningParams, Variant};
use morl::format::load_momdp;
use morl::hard::{basic_instance, full_instance};
use morl::momdp::{random_momdp, random_momdp_per_step};
use morl::pfe::{explore, pac_error, PfeParams};
use morl::planning::BonusParams;
use morl::preference::vertices_and_lattice;
use morl::{fixtures, Momdp, Preference};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{AdversarySpec, AgentKind, EnvSpec, ExperimentConfig, ExperimentKind};
use crate::plot::{emit_plot_data, Series};
use crate::seeds::{agent_seed, exploration_seed, preference_seed};
use crate::HarnessError;

const JL_RETRIES: usize = 100;

/// Builds the environment of `cfg`. With a `dims` sweep, random instances are
/// generated with the largest requested objective count.
pub fn build_env(cfg: &ExperimentConfig) -> Result<Momdp<f64>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.env_seed);
    let max_dim = cfg.dims.as_ref().and_then(|d| d.iter().copied().max());
    Ok(match &cfg.env {
        &EnvSpec::Random {
            states,
            actions,
            horizon,
            objectives,
            per_step,
        } => {
            let d = max_dim.unwrap_or(objectives);
            if per_step {
                random_momdp_per_step(states, actions, horizon, d, cfg.env_seed)?
            } else {
                random_momdp(states, actions, horizon, d, cfg.env_seed)?
            }
        }
        EnvSpec::TwoState => fixtures::two_state(),
        EnvSpec::File(path) => load_momdp(path)?,
        &EnvSpec::Basic { objectives, actions, eps } => basic_instance(objectives, actions, eps, &mut rng)?.momdp,
        &EnvSpec::Full {
            leaves,
            objectives,
            actions,
            horizon,
            eps,
            eps1,
        } => full_instance(leaves, objectives, actions, horizon, eps, eps1, &mut rng, JL_RETRIES)?.momdp,
    })
}

/// The objective counts to run: the sweep, or the environment's own.
pub fn dims(cfg: &ExperimentConfig, env: &Momdp<f64>) -> Vec<usize> {
    cfg.dims.clone().unwrap_or_else(|| vec![env.num_objectives()])
}

pub fn preference_source(
    cfg: &ExperimentConfig,
    m: &Arc<Momdp<f64>>,
    seed: u64,
) -> Result<PreferenceSource<f64>, HarnessError> {
    let d = m.num_objectives();
    Ok(match &cfg.adversary {
        AdversarySpec::Iid => PreferenceSource::iid(d, preference_seed(cfg.master_seed, seed))?,
        AdversarySpec::Fixed(None) => PreferenceSource::fixed(Preference::uniform(d)),
        AdversarySpec::Fixed(Some(w)) => PreferenceSource::fixed(Preference::new(w.clone())?),
        AdversarySpec::Cyclic => PreferenceSource::cyclic_vertices(d)?,
        AdversarySpec::Greedy => PreferenceSource::greedy_vertices(m.clone())?,
        AdversarySpec::Oracle => PreferenceSource::oracle(m.clone(), cfg.resolution)?,
    })
}

/// One finished online cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineCell {
    pub agent: AgentKind,
    pub objectives: usize,
    pub seed: u64,
    pub log: EpisodeLog<f64>,
}

impl OnlineCell {
    /// `regret(K) / regret(K/2)`.
    pub fn growth_ratio(&self) -> f64 {
        let k = self.log.len();
        self.log.final_regret() / self.log.regret_at(k / 2)
    }

    pub fn file_name(&self) -> String {
        format!("{}_d{}_seed{}.csv", self.agent.name(), self.objectives, self.seed)
    }
}

pub fn run_cell(
    cfg: &ExperimentConfig,
    m: &Arc<Momdp<f64>>,
    agent: AgentKind,
    seed: u64,
) -> Result<EpisodeLog<f64>, HarnessError> {
    let k = cfg.episodes[0];
    let mut src = preference_source(cfg, m, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(agent_seed(cfg.master_seed, agent.index(), seed));
    let bonus = || {
        BonusParams::new(m.num_objectives(), m.num_states(), m.num_actions(), m.horizon(), k, cfg.delta)?
            .with_scale(cfg.scale)
    };
    let mut log = match agent {
        AgentKind::Ucbvi => run_online(m, &mut src, k, Variant::Hoeffding, &bonus()?, &mut rng)?,
        AgentKind::Bernstein => run_online(m, &mut src, k, Variant::Bernstein, &bonus()?, &mut rng)?,
        AgentKind::Hindsight => run_best_in_hindsight(m, &mut src, k)?,
        AgentKind::QLearning => {
            run_q_learning(m, &mut src, k, &QLearningParams::with_scale(cfg.scale, cfg.delta), &mut rng)?
        }
    };
    log.seed = seed;
    Ok(log)
}

/// Runs every `(objectives, agent, seed)` cell in parallel. Cells come back in
/// config order.
pub fn run_online_cells(cfg: &ExperimentConfig) -> Result<Vec<OnlineCell>, HarnessError> {
    let base = build_env(cfg)?;
    let sweep = cfg.dims.is_some();
    let mut jobs = Vec::new();
    for d in dims(cfg, &base) {
        let m = Arc::new(if d == base.num_objectives() { base.clone() } else { base.truncate_objectives(d)? });
        for &agent in &cfg.agents {
            for &seed in &cfg.seeds {
                jobs.push((m.clone(), agent, seed));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(m, agent, seed)| {
            let mut log = run_cell(cfg, &m, agent, seed)?;
            let d = m.num_objectives();
            if sweep {
                log.agent = format!("{}[d={d}]", agent.name());
            }
            Ok(OnlineCell {
                agent,
                objectives: d,
                seed,
                log,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfeCell {
    pub episodes: usize,
    pub seed: u64,
    pub pac_error: f64,
}

/// Explores for each configured `K` and seed, then evaluates the planner on the
/// simplex vertices plus the lattice of the configured resolution.
pub fn run_pfe_cells(cfg: &ExperimentConfig) -> Result<Vec<PfeCell>, HarnessError> {
    let m = build_env(cfg)?;
    let grid = vertices_and_lattice::<f64>(m.num_objectives(), cfg.resolution);
    let jobs: Vec<(usize, u64)> = cfg.episodes.iter().flat_map(|&k| cfg.seeds.iter().map(move |&s| (k, s))).collect();
    jobs.into_par_iter()
        .map(|(k, seed)| {
            let p = PfeParams::new(
                BonusParams::new(m.num_objectives(), m.num_states(), m.num_actions(), m.horizon(), k, cfg.delta)?
                    .with_scale(cfg.scale)?,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(exploration_seed(cfg.master_seed, seed));
            let e = explore(&m, k, &p, &mut rng)?;
            Ok(PfeCell {
                episodes: k,
                seed,
                pac_error: pac_error(&m, &e.history, &p, &grid)?,
            })
        })
        .collect()
}

/// Mean PAC error per `K`, in config order.
pub fn mean_pac_error(cells: &[PfeCell], k: usize) -> f64 {
    let errs: Vec<f64> = cells.iter().filter(|c| c.episodes == k).map(|c| c.pac_error).collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub logs: Vec<PathBuf>,
    pub summary: PathBuf,
    pub plot_data: Option<PathBuf>,
}

/// Runs `cfg` and writes its artifacts under `cfg.out`:
/// `logs/<agent>_d<d>_seed<s>.csv`, `plot_data.csv` and `summary.csv` for
/// online experiments, `pfe.csv` and `summary.csv` for PFE experiments.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts, HarnessError> {
    fs::create_dir_all(&cfg.out)?;
    match cfg.kind {
        ExperimentKind::Online => write_online(cfg, &run_online_cells(cfg)?),
        ExperimentKind::Pfe => write_pfe(cfg, &run_pfe_cells(cfg)?),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn write_online(cfg: &ExperimentConfig, cells: &[OnlineCell]) -> Result<Artifacts, HarnessError> {
    let dir = cfg.out.join("logs");
    fs::create_dir_all(&dir)?;
    let logs = cells
        .par_iter()
        .map(|c| {
            let path = dir.join(c.file_name());
            c.log.write_csv(BufWriter::new(File::create(&path)?))?;
            Ok(path)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let plot = cfg.out.join("plot_data.csv");
    let series: Vec<Series> = cells.iter().map(|c| Series::from(&c.log)).collect();
    emit_plot_data(&series, BufWriter::new(File::create(&plot)?))?;

    let summary = cfg.out.join("summary.csv");
    let mut w = writer(&summary)?;
    w.write_record(["agent", "objectives", "seed", "episodes", "final_regret", "half_regret", "growth_ratio"])?;
    for c in cells {
        w.write_record([
            c.agent.name().to_string(),
            c.objectives.to_string(),
            c.seed.to_string(),
            c.log.len().to_string(),
            c.log.final_regret().to_string(),
            c.log.regret_at(c.log.len() / 2).to_string(),
            c.growth_ratio().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(Artifacts {
        logs,
        summary,
        plot_data: Some(plot),
    })
}

fn write_pfe(cfg: &ExperimentConfig, cells: &[PfeCell]) -> Result<Artifacts, HarnessError> {
    let path = cfg.out.join("pfe.csv");
    let mut w = writer(&path)?;
    w.write_record(["episodes", "seed", "pac_error"])?;
    for c in cells {
        w.write_record([c.episodes.to_string(), c.seed.to_string(), c.pac_error.to_string()])?;
    }
    w.flush()?;

    let summary = cfg.out.join("summary.csv");
    let mut w = writer(&summary)?;
    w.write_record(["episodes", "seeds", "mean_pac_error"])?;
    for &k in &cfg.episodes {
        w.write_record([k.to_string(), cfg.seeds.len().to_string(), mean_pac_error(cells, k).to_string()])?;
    }
    w.flush()?;
    Ok(Artifacts {
        logs: vec![path],
        summary,
        plot_data: None,
    })
}
