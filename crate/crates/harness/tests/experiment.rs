use std::fs;

use morl::agents::read_log_csv;
use morl_harness::config::ExperimentConfig;
use morl_harness::plot::PLOT_HEADER;
use morl_harness::{run_experiment, run_online_cells};

fn smoke(out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse("env = two-state\nagents = mo-ucbvi\nepisodes = 10\nseeds = 0\n").unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn minimal_config_emits_one_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let art = run_experiment(&smoke(dir.path())).unwrap();
    assert_eq!(art.logs.len(), 1);
    let rows = read_log_csv(fs::File::open(&art.logs[0]).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[9].episode, 10);
    let summary = fs::read_to_string(&art.summary).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.starts_with("agent,objectives,seed,episodes,final_regret"));
    let plot = fs::read_to_string(art.plot_data.unwrap()).unwrap();
    assert_eq!(plot.lines().next().unwrap(), PLOT_HEADER.join(","));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = ExperimentConfig::parse(
        "env = random\nstates = 4\nactions = 2\nhorizon = 3\nobjectives = 2\n\
         agents = mo-ucbvi, mo-ucbvi-bernstein, best-in-hindsight, q-learning\nepisodes = 50\nseeds = 0, 7\n",
    )
    .unwrap();
    cfg.out = a.path().to_path_buf();
    let first = run_experiment(&cfg).unwrap();
    cfg.out = b.path().to_path_buf();
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(first.logs.len(), 8);
    for (x, y) in first.logs.iter().zip(&second.logs) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(fs::read(&first.summary).unwrap(), fs::read(&second.summary).unwrap());
}

#[test]
fn adding_an_agent_keeps_other_cells() {
    let base = "env = random\nstates = 4\nactions = 2\nhorizon = 3\nobjectives = 2\nepisodes = 30\nseeds = 1\n";
    let one = run_online_cells(&ExperimentConfig::parse(&format!("{base}agents = q-learning\n")).unwrap()).unwrap();
    let two = run_online_cells(&ExperimentConfig::parse(&format!("{base}agents = mo-ucbvi, q-learning\n")).unwrap()).unwrap();
    assert_eq!(one[0].log, two[1].log);
}

#[test]
fn figure3_emits_one_series_per_dimension() {
    let mut cfg = ExperimentConfig::preset("figure3").unwrap();
    cfg.episodes = vec![20];
    cfg.seeds = vec![0];
    let cells = run_online_cells(&cfg).unwrap();
    let labels: Vec<&str> = cells.iter().map(|c| c.log.agent.as_str()).collect();
    assert_eq!(labels, ["mo-ucbvi[d=1]", "mo-ucbvi[d=5]", "mo-ucbvi[d=15]", "mo-ucbvi[d=20]", "mo-ucbvi[d=30]"]);
}

#[test]
fn adaptive_adversaries_run() {
    for adv in ["greedy", "oracle\nresolution = 4", "cyclic", "fixed\npreference = 0.25, 0.75"] {
        let cfg = ExperimentConfig::parse(&format!(
            "env = random\nstates = 3\nactions = 2\nhorizon = 2\nobjectives = 2\nepisodes = 15\nadversary = {adv}\n"
        ))
        .unwrap();
        let cells = run_online_cells(&cfg).unwrap();
        assert_eq!(cells[0].log.len(), 15);
    }
}
