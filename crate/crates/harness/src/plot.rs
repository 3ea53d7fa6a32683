//! Long-format regret curves for external plotting tools.

use std::collections::HashMap;
use std::io::Write;

use morl::agents::{EpisodeLog, LogRow};

use crate::HarnessError;

pub const PLOT_HEADER: [&str; 7] = ["episode", "agent", "seed", "regret_cum", "agent_mean", "agent_min", "agent_max"];

/// One cumulative-regret curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub agent: String,
    pub seed: u64,
    pub regret: Vec<f64>,
}

impl From<&EpisodeLog<f64>> for Series {
    fn from(log: &EpisodeLog<f64>) -> Self {
        Self {
            agent: log.agent.clone(),
            seed: log.seed,
            regret: log.records.iter().map(|r| r.regret_cum).collect(),
        }
    }
}

/// Groups parsed log rows into curves by `(agent, seed)`, in order of first
/// appearance. Rows of a curve must be consecutive episodes starting at 1.
pub fn series_from_rows(rows: &[LogRow]) -> Result<Vec<Series>, HarnessError> {
    let mut index: HashMap<(String, u64), usize> = HashMap::new();
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let i = *index.entry((r.agent.clone(), r.seed)).or_insert_with(|| {
            out.push(Series {
                agent: r.agent.clone(),
                seed: r.seed,
                regret: Vec::new(),
            });
            out.len() - 1
        });
        let s = &mut out[i];
        if r.episode != s.regret.len() + 1 {
            return Err(HarnessError::Mismatch(format!(
                "{} seed {}: episode {} follows {}",
                s.agent,
                s.seed,
                r.episode,
                s.regret.len()
            )));
        }
        s.regret.push(r.regret_cum);
    }
    Ok(out)
}

/// Writes every curve with the per-agent mean, minimum and maximum across
/// seeds at each episode. All curves must have the same length.
pub fn emit_plot_data<W: Write>(series: &[Series], out: W) -> Result<(), HarnessError> {
    let Some(first) = series.first() else {
        return Err(HarnessError::Mismatch("no logs".into()));
    };
    let k = first.regret.len();
    if let Some(s) = series.iter().find(|s| s.regret.len() != k) {
        return Err(HarnessError::Mismatch(format!(
            "{} seed {} has {} episodes, expected {k}",
            s.agent,
            s.seed,
            s.regret.len()
        )));
    }
    let mut agents: Vec<&str> = Vec::new();
    for s in series {
        if !agents.contains(&s.agent.as_str()) {
            agents.push(&s.agent);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for agent in agents {
        let group: Vec<&Series> = series.iter().filter(|s| s.agent == agent).collect();
        for e in 0..k {
            let vals = group.iter().map(|s| s.regret[e]);
            let mean = vals.clone().sum::<f64>() / group.len() as f64;
            let min = vals.clone().fold(f64::INFINITY, f64::min);
            let max = vals.fold(f64::NEG_INFINITY, f64::max);
            for s in &group {
                w.write_record([
                    (e + 1).to_string(),
                    agent.to_string(),
                    s.seed.to_string(),
                    s.regret[e].to_string(),
                    mean.to_string(),
                    min.to_string(),
                    max.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(agent: &str, seed: u64, regret: &[f64]) -> Series {
        Series {
            agent: agent.into(),
            seed,
            regret: regret.to_vec(),
        }
    }

    fn emit(s: &[Series]) -> Vec<Vec<String>> {
        let mut buf = Vec::new();
        emit_plot_data(s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
    }

    #[test]
    fn single_log_is_a_reshape() {
        let rows = emit(&[series("a", 3, &[0.5, 1.5])]);
        assert_eq!(rows, vec![vec!["1", "a", "3", "0.5", "0.5", "0.5", "0.5"], vec!["2", "a", "3", "1.5", "1.5", "1.5", "1.5"]]);
    }

    #[test]
    fn band_over_seeds() {
        let rows = emit(&[series("a", 0, &[1.0, 2.0]), series("a", 1, &[3.0, 6.0]), series("b", 0, &[0.0, 0.0])]);
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[2][4..], ["4", "2", "6"]);
        assert_eq!(rows[4][1], "b");
    }

    #[test]
    fn mismatched_lengths_fail() {
        assert!(emit_plot_data(&[series("a", 0, &[1.0]), series("a", 1, &[1.0, 2.0])], Vec::new()).is_err());
        assert!(emit_plot_data(&[], Vec::new()).is_err());
    }
}
