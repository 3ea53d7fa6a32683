use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use morl::agents::read_log_csv;
use morl::dp::{mixture_value, optimal_value};
use morl::format::{load_momdp, save_momdp};
use morl::hard::{basic_instance, full_instance};
use morl::model::HistoryBuffer;
use morl::pfe::{explore, pac_error, plan, PfeParams};
use morl::planning::BonusParams;
use morl::preference::vertices_and_lattice;
use morl::{Momdp, Preference};
use morl_harness::experiment::build_env;
use morl_harness::plot::{emit_plot_data, series_from_rows};
use morl_harness::seeds::exploration_seed;
use morl_harness::{run_experiment, AgentKind, ExperimentConfig, ExperimentKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "morl", version, about = "Multi-objective reinforcement learning simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// figure1, figure2, figure3 or pfe-scaling.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bonus scale.
    #[arg(long)]
    scale: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(scale) = self.scale {
            cfg.scale = scale;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HardKind {
    Basic,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Online regret experiment; writes logs, plot data and a summary.
    Online {
        #[command(flatten)]
        common: Common,
        /// Comma-separated agent names, overriding the config.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Preference-free exploration; writes the history to `--out`.
    PfeExplore {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to the config's environment.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Plans from a history for one preference and reports its exact value.
    Plan {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        env: PathBuf,
        /// Comma-separated preference weights.
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Writes the mixture members as `member,h,state,action`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-case planning error over simplex vertices and a lattice.
    PacEval {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 4)]
        resolution: usize,
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Builds a lower-bound instance and writes it as a model file.
    HardInstance {
        #[arg(long, value_enum, default_value = "full")]
        kind: HardKind,
        #[arg(long, default_value_t = 4)]
        leaves: usize,
        /// Objective count of the basic instance, or override of the
        /// projection dimension of the full one.
        #[arg(long)]
        objectives: Option<usize>,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        /// Defaults to the shortest horizon that fits the tree.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        eps1: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        retries: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs a config or preset end to end.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Merges episode logs into long-format plot data.
    PlotData {
        /// Directory of episode-log CSVs.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Online { common, agents, episodes } => {
            let mut cfg = common.load()?;
            if cfg.kind != ExperimentKind::Online {
                bail!("config describes a pfe experiment; use `run`");
            }
            if !agents.is_empty() {
                cfg.agents = agents
                    .iter()
                    .map(|a| a.parse::<AgentKind>().map_err(|_| anyhow::anyhow!("unknown agent `{a}`")))
                    .collect::<Result<_>>()?;
            }
            if let Some(k) = episodes {
                cfg.episodes = vec![k];
            }
            cfg.validate()?;
            report(run_experiment(&cfg)?.summary)
        }
        Command::PfeExplore { common, env, episodes } => {
            let cfg = common.load()?;
            let m: Momdp<f64> = match env {
                Some(path) => load_momdp(path)?,
                None => build_env(&cfg)?,
            };
            let k = episodes.unwrap_or(cfg.episodes[0]);
            let p = pfe_params(&m, k, cfg.scale, cfg.delta)?;
            let mut rng = ChaCha8Rng::seed_from_u64(exploration_seed(cfg.master_seed, cfg.seeds[0]));
            let e = explore(&m, k, &p, &mut rng)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("history.csv"));
            e.history.save(&out)?;
            println!("explored {k} episodes; history written to {}", out.display());
            Ok(())
        }
        Command::Plan {
            history,
            env,
            w,
            scale,
            delta,
            out,
        } => {
            let m: Momdp<f64> = load_momdp(&env)?;
            let h = HistoryBuffer::<f64>::load(&history)?;
            let w = Preference::new(w)?;
            let mix = plan(&h, m.rewards(), &w, &pfe_params(&m, h.len(), scale, delta)?)?;
            let value = mixture_value(&m, &mix, &w)?;
            let best = optimal_value(&m, &w)?.0.root(m.initial_state());
            println!("members {}  value {value:.6}  optimal {best:.6}  gap {:.6}", mix.len(), best - value);
            if let Some(out) = out {
                let mut wr = csv::Writer::from_writer(BufWriter::new(File::create(&out)?));
                wr.write_record(["member", "h", "state", "action"])?;
                for (i, pi) in mix.members().iter().enumerate() {
                    for ((h, x), a) in pi.table().indexed_iter() {
                        wr.write_record([i.to_string(), h.to_string(), x.to_string(), a.to_string()])?;
                    }
                }
                wr.flush()?;
            }
            Ok(())
        }
        Command::PacEval {
            history,
            env,
            resolution,
            scale,
            delta,
        } => {
            let m: Momdp<f64> = load_momdp(&env)?;
            let h = HistoryBuffer::<f64>::load(&history)?;
            let grid = vertices_and_lattice::<f64>(m.num_objectives(), resolution);
            let err = pac_error(&m, &h, &pfe_params(&m, h.len(), scale, delta)?, &grid)?;
            println!("episodes {}  grid {}  pac_error {err:.6}", h.len(), grid.len());
            Ok(())
        }
        Command::HardInstance {
            kind,
            leaves,
            objectives,
            actions,
            horizon,
            eps,
            eps1,
            seed,
            retries,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m: Momdp<f64> = match kind {
                HardKind::Basic => {
                    let inst = basic_instance(objectives.unwrap_or(2), actions, eps, &mut rng)?;
                    println!("good action {}  boosted objective {}", inst.good_action, inst.boosted);
                    inst.momdp
                }
                HardKind::Full => {
                    let levels = leaves.next_power_of_two().trailing_zeros() as usize;
                    let h = horizon.unwrap_or(2 * (levels + 1));
                    let inst = full_instance(leaves, objectives, actions, h, eps, eps1, &mut rng, retries)?;
                    println!(
                        "projection dimension {}  achieved eps1 {:.4}  attempts {}",
                        inst.jl.a.nrows(),
                        inst.jl.achieved_eps,
                        inst.jl.attempts
                    );
                    inst.momdp
                }
            };
            save_momdp(&m, &out)?;
            println!(
                "states {}  actions {}  horizon {}  objectives {}  written to {}",
                m.num_states(),
                m.num_actions(),
                m.horizon(),
                m.num_objectives(),
                out.display()
            );
            Ok(())
        }
        Command::Run { common } => {
            let cfg = common.load()?;
            report(run_experiment(&cfg)?.summary)
        }
        Command::PlotData { logs, out } => {
            let mut paths: Vec<PathBuf> = fs::read_dir(&logs)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
            paths.sort();
            let mut rows = Vec::new();
            for p in &paths {
                rows.extend(read_log_csv(BufReader::new(File::open(p)?)).with_context(|| format!("reading {}", p.display()))?);
            }
            let series = series_from_rows(&rows)?;
            emit_plot_data(&series, BufWriter::new(File::create(&out)?))?;
            println!("{} curves from {} files written to {}", series.len(), paths.len(), out.display());
            Ok(())
        }
    }
}

fn pfe_params(m: &Momdp<f64>, k: usize, scale: f64, delta: f64) -> Result<PfeParams<f64>> {
    let b = BonusParams::new(m.num_objectives(), m.num_states(), m.num_actions(), m.horizon(), k.max(1), delta)?
        .with_scale(scale)?;
    Ok(PfeParams::new(b))
}

fn report(summary: PathBuf) -> Result<()> {
    print!("{}", fs::read_to_string(&summary)?);
    println!("summary written to {}", summary.display());
    Ok(())
}
