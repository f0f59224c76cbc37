//! Interactive play against the solver's strategies.

use std::io::{BufRead, Write};

use anyhow::{bail, Result};

use hetlogic::game::{build_arena_with, play_step, solve_game, tarski_test, NodeStatus, Player};
use hetlogic::{Assignment, Formula, Structure};

pub struct Outcome {
    pub verdict: String,
    /// `None` when the session was quit before the game ended.
    pub human_won: Option<bool>,
    pub transcript: Vec<String>,
}

fn side(p: Player) -> &'static str {
    match p {
        Player::Exists => "∃",
        Player::Forall => "∀",
    }
}

fn say(out: &mut impl Write, log: &mut Vec<String>, line: String) -> Result<()> {
    writeln!(out, "{line}")?;
    log.push(line);
    Ok(())
}

pub fn session(
    m: &Structure,
    f: &Formula,
    a: &Assignment,
    human: Player,
    max_positions: usize,
    input: &mut impl BufRead,
    out: &mut impl Write,
) -> Result<Outcome> {
    if !matches!(f, Formula::Het(_)) {
        bail!("play needs a heterogeneous formula");
    }
    let ar = build_arena_with(m, f, a, &tarski_test(m), max_positions)?;
    let g = solve_game(&ar);
    let engine = human.opponent();
    let winner = if g.exists_wins(ar.initial) { Player::Exists } else { Player::Forall };
    let mut log = Vec::new();
    say(out, &mut log, format!("you play {}, the engine plays {}", side(human), side(engine)))?;
    say(
        out,
        &mut log,
        if winner == engine {
            "opponent wins from initial position".to_string()
        } else {
            "you win from initial position".to_string()
        },
    )?;
    let mut step = play_step(&ar, &g, ar.initial, None, engine)?;
    if let Some(mv) = &step.engine_move {
        say(out, &mut log, format!("engine: ({})", ar.move_names(m, ar.initial, mv).join(", ")))?;
    }
    loop {
        if let Some(s) = step.monitor {
            say(out, &mut log, format!("monitor: {s:?}"))?;
        }
        if step.is_over() {
            let exists_won = step.status == NodeStatus::Won;
            let human_won = exists_won == (human == Player::Exists);
            let verdict = if human_won { "you win" } else { "engine wins" };
            say(out, &mut log, verdict.to_string())?;
            return Ok(Outcome { verdict: verdict.into(), human_won: Some(human_won), transcript: log });
        }
        let pos = step.position;
        let block = &ar.positions[pos].block;
        let vars: Vec<String> = block.iter().map(|v| v.to_string()).collect();
        write!(out, "your move [{}]> ", vars.join(", "))?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 || line.trim() == "quit" {
            say(out, &mut log, "quit".to_string())?;
            return Ok(Outcome { verdict: "quit".into(), human_won: None, transcript: log });
        }
        let words: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()).collect();
        if words.len() != block.len() {
            writeln!(out, "expected {} element(s)", block.len())?;
            continue;
        }
        let mv: Option<Vec<usize>> = block.iter().zip(&words).map(|(v, w)| m.elem(&v.sort, w)).collect();
        let Some(mv) = mv else {
            writeln!(out, "unknown element")?;
            continue;
        };
        match play_step(&ar, &g, pos, Some(&mv), engine) {
            Ok(next) => {
                log.push(format!("you: ({})", words.join(", ")));
                if let Some(e) = &next.engine_move {
                    let at = ar.edge(pos, &mv).map(|e| e.target).unwrap_or(pos);
                    say(out, &mut log, format!("engine: ({})", ar.move_names(m, at, e).join(", ")))?;
                }
                step = next;
            }
            Err(e) => writeln!(out, "{e}; try again")?,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetlogic::parse::{parse_formula_in, parse_signature, parse_structure};

    fn game() -> (Structure, Formula) {
        let sig = parse_signature("sort s;").unwrap();
        let m = parse_structure("carrier s = {a, b};", &sig).unwrap();
        let f = parse_formula_in(
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }",
            &sig,
            &[],
        )
        .unwrap();
        (m, f)
    }

    #[test]
    fn engine_mirrors() {
        let (m, f) = game();
        let mut input = "a\nb\nb\nquit\n".as_bytes();
        let mut out = Vec::new();
        let o = session(&m, &f, &Assignment::new(), Player::Forall, 10_000, &mut input, &mut out).unwrap();
        assert_eq!(o.human_won, None);
        let engine: Vec<&String> = o.transcript.iter().filter(|l| l.starts_with("engine:")).collect();
        assert_eq!(engine, ["engine: (a)", "engine: (b)", "engine: (b)"]);
        assert!(o.transcript.iter().filter(|l| l.starts_with("monitor")).all(|l| l.contains("Alive")));
    }

    #[test]
    fn losing_side_is_told() {
        let (m, _) = game();
        let f = parse_formula_in(
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, not(v0 = v1)] }",
            &m.signature,
            &[],
        )
        .unwrap();
        let mut input = "quit\n".as_bytes();
        let mut out = Vec::new();
        let o = session(&m, &f, &Assignment::new(), Player::Forall, 10_000, &mut input, &mut out).unwrap();
        assert!(o.transcript[1].contains("opponent wins from initial position"));
    }

    #[test]
    fn illegal_input_reprompts() {
        let (m, f) = game();
        let mut input = "zz\na b\nquit\n".as_bytes();
        let mut out = Vec::new();
        session(&m, &f, &Assignment::new(), Player::Forall, 10_000, &mut input, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("unknown element"));
        assert!(text.contains("expected 1 element(s)"));
    }
}
