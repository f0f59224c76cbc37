use crate::error::{Error, Result};
use crate::structure::Elem;

use super::arena::{Arena, NodeStatus, Player};
use super::monitor::MonitorStatus;
use super::solve::GameResult;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    /// Position after the human move and the engine reply.
    pub position: usize,
    pub engine_move: Option<Vec<Elem>>,
    pub status: NodeStatus,
    pub monitor: Option<MonitorStatus>,
}

impl StepReport {
    pub fn is_over(&self) -> bool {
        self.status != NodeStatus::Open
    }
}

/// The engine's choice at `p`: its positional strategy inside its winning
/// region, otherwise the first legal move.
pub fn engine_choice(ar: &Arena, g: &GameResult, p: usize) -> Option<usize> {
    let owner = ar.positions[p].owner;
    if ar.is_terminal(p) {
        return None;
    }
    g.strategy(owner)[p].or(if ar.edges[p].is_empty() {
        None
    } else {
        Some(0)
    })
}

/// Applies `mv` (when given) at `pos`, then lets the engine (playing
/// `engine`) reply if it owns the resulting position.
pub fn play_step(
    ar: &Arena,
    g: &GameResult,
    pos: usize,
    mv: Option<&[Elem]>,
    engine: Player,
) -> Result<StepReport> {
    if pos >= ar.len() {
        return Err(Error::eval(format!("no position {pos}")));
    }
    let mut cur = pos;
    if let Some(mv) = mv {
        if ar.is_terminal(cur) {
            return Err(Error::eval("the game is over"));
        }
        let e = ar
            .edge(cur, mv)
            .ok_or_else(|| Error::eval(format!("illegal move {mv:?}")))?;
        cur = e.target;
    }
    let mut engine_move = None;
    if !ar.is_terminal(cur) && ar.positions[cur].owner == engine {
        if let Some(i) = engine_choice(ar, g, cur) {
            engine_move = Some(ar.edges[cur][i].mv.clone());
            cur = ar.edges[cur][i].target;
        }
    }
    let monitor = match (&ar.monitor, ar.positions[cur].monitor) {
        (Some(mon), Some(s)) => Some(mon.status(s)),
        _ => None,
    };
    Ok(StepReport {
        position: cur,
        engine_move,
        status: ar.positions[cur].status,
        monitor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::solve_formula;
    use crate::parse::{parse_formula_in, parse_signature, parse_structure};
    use crate::structure::Assignment;

    #[test]
    fn engine_copies() {
        let sig = parse_signature("sort s;").unwrap();
        let m = parse_structure("carrier s = {0, 1};", &sig).unwrap();
        let f = parse_formula_in(
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }",
            &sig,
            &[],
        )
        .unwrap();
        let (ar, g) = solve_formula(&m, &f, &Assignment::new()).unwrap();
        let r = play_step(&ar, &g, ar.initial, Some(&[1]), Player::Exists).unwrap();
        assert_eq!(r.engine_move, Some(vec![1]));
        assert_eq!(r.monitor, Some(MonitorStatus::Alive));
        assert!(play_step(&ar, &g, ar.initial, Some(&[7]), Player::Exists).is_err());
    }
}
