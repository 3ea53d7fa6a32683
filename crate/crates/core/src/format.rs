//! Plain-text formats for models and interaction histories.
//!
//! A model file:
//!
//! ```text
//! momdp 1
//! states 2
//! actions 2
//! horizon 2
//! objectives 2
//! initial 0
//! transitions stationary
//! 0 0 0 : 1 0
//! 0 0 1 : 0 1
//! 0 1 0 : 0 1
//! 0 1 1 : 0 1
//! rewards
//! 0 0 0 : 1 0
//! ...
//! ```
//!
//! Transition rows are `layer state action : p(0) .. p(S-1)` where `layer`
//! is always 0 for `stationary` and the step `h` for `per-step`. Reward rows
//! are `h state action : r_1 .. r_d`. All indices are 0-based, rows appear in
//! row-major order on output and in any order on input, blank lines and
//! lines starting with `#` are ignored. Numbers are printed with the
//! shortest representation that parses back to the same value.
//!
//! A history file starts with a header comment followed by one step per
//! line, with 1-based episode and step numbers:
//!
//! ```text
//! # morl-history states=2 actions=2 horizon=2 transitions=stationary
//! episode,h,x,a
//! 1,1,0,0
//! 1,2,0,0
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array4, Axis};

use crate::error::{MorlError, Result};
use crate::model::HistoryBuffer;
use crate::momdp::{Momdp, TransitionMode};
use crate::policy::Trajectory;
use crate::scalar::Scalar;

const HISTORY_TAG: &str = "# morl-history";

fn parse_err(line: usize, message: impl Into<String>) -> MorlError {
    MorlError::Parse {
        line,
        message: message.into(),
    }
}

fn write_numbers<T: Scalar, W: Write>(out: &mut W, values: impl Iterator<Item = T>) -> Result<()> {
    for v in values {
        write!(out, " {}", v.as_f64())?;
    }
    writeln!(out)?;
    Ok(())
}

/// One `i j k : values` line per lane along the last axis.
fn write_block<T: Scalar, W: Write>(out: &mut W, block: &Array4<T>) -> Result<()> {
    let (_, b, c, _) = block.dim();
    for (i, row) in block.lanes(Axis(3)).into_iter().enumerate() {
        write!(out, "{} {} {} :", i / (b * c), (i / c) % b, i % c)?;
        write_numbers(out, row.iter().copied())?;
    }
    Ok(())
}

pub fn write_momdp<T: Scalar, W: Write>(m: &Momdp<T>, mut out: W) -> Result<()> {
    writeln!(out, "momdp 1")?;
    writeln!(out, "states {}", m.num_states())?;
    writeln!(out, "actions {}", m.num_actions())?;
    writeln!(out, "horizon {}", m.horizon())?;
    writeln!(out, "objectives {}", m.num_objectives())?;
    writeln!(out, "initial {}", m.initial_state())?;
    writeln!(out, "transitions {}", m.mode())?;
    write_block(&mut out, m.transitions())?;
    writeln!(out, "rewards")?;
    write_block(&mut out, m.rewards().tensor())?;
    out.flush()?;
    Ok(())
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines<R: BufRead>(input: R) -> Result<Vec<(usize, String)>> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            lines.push((i + 1, trimmed.to_string()));
        }
    }
    Ok(lines)
}

fn header_value(lines: &[(usize, String)], pos: usize, key: &str) -> Result<String> {
    let (no, line) = lines
        .get(pos)
        .ok_or_else(|| parse_err(lines.last().map_or(0, |l| l.0), format!("missing `{key}` line")))?;
    match line.split_once(char::is_whitespace) {
        Some((k, v)) if k == key => Ok(v.trim().to_string()),
        _ => Err(parse_err(*no, format!("expected `{key} <value>`, found `{line}`"))),
    }
}

fn header_count(lines: &[(usize, String)], pos: usize, key: &str) -> Result<usize> {
    let v = header_value(lines, pos, key)?;
    v.parse()
        .map_err(|_| parse_err(lines[pos].0, format!("`{key}` must be a nonnegative integer, found `{v}`")))
}

/// Parses `i j k : v1 .. vn`, checking index bounds and the value count.
fn parse_row(no: usize, line: &str, bounds: [usize; 3], width: usize) -> Result<([usize; 3], Vec<f64>)> {
    let (head, tail) = line
        .split_once(':')
        .ok_or_else(|| parse_err(no, "expected `index index index : values`"))?;
    let idx: Vec<usize> = head
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(no, format!("bad index `{t}`"))))
        .collect::<Result<_>>()?;
    if idx.len() != 3 {
        return Err(parse_err(no, format!("expected 3 indices, found {}", idx.len())));
    }
    for (i, (&v, &b)) in idx.iter().zip(&bounds).enumerate() {
        if v >= b {
            return Err(parse_err(no, format!("index {} = {v} is out of range 0..{b}", i + 1)));
        }
    }
    let values: Vec<f64> = tail
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(no, format!("bad number `{t}`"))))
        .collect::<Result<_>>()?;
    if values.len() != width {
        return Err(parse_err(no, format!("expected {width} values, found {}", values.len())));
    }
    Ok(([idx[0], idx[1], idx[2]], values))
}

fn fill_block<T: Scalar>(
    lines: &[(usize, String)],
    target: &mut Array4<T>,
    what: &str,
) -> Result<()> {
    let (a, b, c, width) = target.dim();
    let mut seen = vec![false; a * b * c];
    for (no, line) in lines {
        let ([i, j, k], values) = parse_row(*no, line, [a, b, c], width)?;
        let flat = (i * b + j) * c + k;
        if std::mem::replace(&mut seen[flat], true) {
            return Err(parse_err(*no, format!("duplicate {what} row {i} {j} {k}")));
        }
        for (y, v) in values.into_iter().enumerate() {
            target[[i, j, k, y]] = T::of(v);
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(parse_err(
            lines.last().map_or(0, |l| l.0),
            format!("missing {what} row {} {} {}", missing / (b * c), (missing / c) % b, missing % c),
        ));
    }
    Ok(())
}

/// Reads a model and checks its invariants.
pub fn read_momdp<T: Scalar, R: BufRead>(input: R) -> Result<Momdp<T>> {
    let lines = content_lines(input)?;
    let version = header_value(&lines, 0, "momdp")?;
    if version != "1" {
        return Err(parse_err(lines[0].0, format!("unsupported format version `{version}`")));
    }
    let s = header_count(&lines, 1, "states")?;
    let a = header_count(&lines, 2, "actions")?;
    let h = header_count(&lines, 3, "horizon")?;
    let d = header_count(&lines, 4, "objectives")?;
    let initial = header_count(&lines, 5, "initial")?;
    let mode = match header_value(&lines, 6, "transitions")?.as_str() {
        "stationary" => TransitionMode::Stationary,
        "per-step" => TransitionMode::PerStep,
        other => return Err(parse_err(lines[6].0, format!("unknown transition mode `{other}`"))),
    };
    let split = lines
        .iter()
        .position(|(_, l)| l == "rewards")
        .ok_or_else(|| parse_err(lines.last().map_or(0, |l| l.0), "missing `rewards` section"))?;
    if split < 7 {
        return Err(parse_err(lines[split].0, "`rewards` before the header is complete"));
    }
    let mut p = Array4::zeros((mode.layers(h), s, a, s));
    fill_block(&lines[7..split], &mut p, "transition")?;
    let mut r = Array4::zeros((h, s, a, d));
    fill_block(&lines[split + 1..], &mut r, "reward")?;
    let m = match mode {
        TransitionMode::Stationary => Momdp::stationary(initial, p.index_axis_move(Axis(0), 0), r)?,
        TransitionMode::PerStep => Momdp::per_step(initial, p, r)?,
    };
    m.checked()
}

pub fn save_momdp<T: Scalar>(m: &Momdp<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_momdp(m, std::io::BufWriter::new(file))
}

pub fn load_momdp<T: Scalar>(path: impl AsRef<Path>) -> Result<Momdp<T>> {
    let file = std::fs::File::open(path)?;
    read_momdp(std::io::BufReader::new(file))
}

pub fn write_history<T: Scalar, W: Write>(hist: &HistoryBuffer<T>, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{HISTORY_TAG} states={} actions={} horizon={} transitions={}",
        hist.num_states(),
        hist.num_actions(),
        hist.horizon(),
        hist.mode()
    )?;
    writeln!(out, "episode,h,x,a")?;
    for (k, t) in hist.episodes().iter().enumerate() {
        for (h, (x, a)) in t.steps.iter().enumerate() {
            writeln!(out, "{},{},{x},{a}", k + 1, h + 1)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_history<T: Scalar, R: BufRead>(input: R) -> Result<HistoryBuffer<T>> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(parse_err(1, "empty history file")),
    };
    let fields = header
        .strip_prefix(HISTORY_TAG)
        .ok_or_else(|| parse_err(1, format!("expected `{HISTORY_TAG} ...` header")))?;
    let mut sizes = [None; 3];
    let mut mode = None;
    for field in fields.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("bad header field `{field}`")))?;
        let slot = match k {
            "states" => 0,
            "actions" => 1,
            "horizon" => 2,
            "transitions" => {
                mode = Some(match v {
                    "stationary" => TransitionMode::Stationary,
                    "per-step" => TransitionMode::PerStep,
                    _ => return Err(parse_err(1, format!("unknown transition mode `{v}`"))),
                });
                continue;
            }
            _ => return Err(parse_err(1, format!("unknown header field `{k}`"))),
        };
        sizes[slot] = Some(v.parse::<usize>().map_err(|_| parse_err(1, format!("bad value in `{field}`")))?);
    }
    let (Some(s), Some(a), Some(h), Some(mode)) = (sizes[0], sizes[1], sizes[2], mode) else {
        return Err(parse_err(1, "header must give states, actions, horizon and transitions"));
    };
    let mut hist = HistoryBuffer::new(mode, h, s, a);
    let mut current: Vec<(usize, usize)> = Vec::with_capacity(h);
    let flush = |steps: &mut Vec<(usize, usize)>, no: usize, hist: &mut HistoryBuffer<T>| -> Result<()> {
        let t = Trajectory {
            steps: std::mem::take(steps),
            scalar_return: T::zero(),
            preference: None,
        };
        hist.push(t).map_err(|e| parse_err(no, e.to_string()))
    };
    let mut last_no = 1;
    for (i, line) in lines {
        let line = line?;
        let no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "episode,h,x,a" {
            continue;
        }
        last_no = no;
        let nums: Vec<usize> = line
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| parse_err(no, format!("bad field `{t}`"))))
            .collect::<Result<_>>()?;
        let [episode, step, x, u] = nums[..] else {
            return Err(parse_err(no, "expected `episode,h,x,a`"));
        };
        if episode != hist.len() + 1 || step != current.len() + 1 {
            return Err(parse_err(
                no,
                format!("expected episode {} step {}, found {episode},{step}", hist.len() + 1, current.len() + 1),
            ));
        }
        current.push((x, u));
        if current.len() == h {
            flush(&mut current, no, &mut hist)?;
        }
    }
    if !current.is_empty() {
        return Err(parse_err(last_no, format!("episode {} is truncated", hist.len() + 1)));
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_state;
    use crate::momdp::{random_momdp, random_momdp_per_step};

    fn round_trip<T: Scalar>(m: &Momdp<T>) -> Momdp<T> {
        let mut buf = Vec::new();
        write_momdp(m, &mut buf).unwrap();
        read_momdp(buf.as_slice()).unwrap()
    }

    #[test]
    fn two_state_text() {
        let mut buf = Vec::new();
        write_momdp(&two_state::<f64>(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("momdp 1\nstates 2\nactions 2\nhorizon 2\nobjectives 2\ninitial 0\ntransitions stationary\n0 0 0 : 1 0\n"));
    }

    #[test]
    fn models_round_trip_exactly() {
        let m = random_momdp::<f64>(4, 3, 3, 2, 7).unwrap();
        assert_eq!(round_trip(&m), m);
        let m = random_momdp_per_step::<f64>(3, 2, 4, 3, 1).unwrap();
        assert_eq!(round_trip(&m), m);
        let m = random_momdp::<f32>(3, 2, 2, 2, 2).unwrap();
        assert_eq!(round_trip(&m), m);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let text = "momdp 1\nstates 1\nactions 1\nhorizon 1\nobjectives 1\ninitial 0\ntransitions stationary\n0 0 0 : 0.5\nrewards\n0 0 0 : 1\n";
        assert!(matches!(read_momdp::<f64, _>(text.as_bytes()), Err(MorlError::InvalidModel(_))));
        let missing = "momdp 1\nstates 1\nactions 1\nhorizon 1\nobjectives 1\ninitial 0\ntransitions stationary\nrewards\n0 0 0 : 1\n";
        assert!(matches!(read_momdp::<f64, _>(missing.as_bytes()), Err(MorlError::Parse { .. })));
        let range = "momdp 1\nstates 1\nactions 1\nhorizon 1\nobjectives 1\ninitial 0\ntransitions stationary\n0 1 0 : 1\nrewards\n0 0 0 : 1\n";
        assert!(matches!(read_momdp::<f64, _>(range.as_bytes()), Err(MorlError::Parse { line: 8, .. })));
    }

    #[test]
    fn truncated_history_is_rejected() {
        let text = "# morl-history states=2 actions=2 horizon=2 transitions=stationary\nepisode,h,x,a\n1,1,0,0\n";
        assert!(read_history::<f64, _>(text.as_bytes()).is_err());
        let ok = "# morl-history states=2 actions=2 horizon=2 transitions=stationary\nepisode,h,x,a\n1,1,0,0\n1,2,0,0\n";
        let hist = read_history::<f64, _>(ok.as_bytes()).unwrap();
        assert_eq!(hist.counts().n_sa(0, 0, 0), 2);
    }
}
