use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::structure::{Assignment, Elem, Structure};
use crate::syntax::{lcm, Formula, HetBlock, Length, Payoff, Polarity, SortedVar, StageKind};

use super::monitor::{compile_monitor, Monitor, MonitorStatus};
use super::{tarski_test, StageTest, DEFAULT_MAX_POSITIONS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Exists,
    Forall,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Exists => Player::Forall,
            Player::Forall => Player::Exists,
        }
    }
}

/// Status of a position from the existential player's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Open,
    /// Terminal: the payoff was reached, or the universal player has no legal move.
    Won,
    /// Terminal: the payoff was violated, or the existential player has no legal move.
    Lost,
}

/// What the existential player must achieve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Never reach a `Lost` position.
    Safety,
    /// Reach a `Won` position.
    Reach,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Position {
    pub owner: Player,
    pub status: NodeStatus,
    /// Monitor state (ω-blocks) or `None` for game-tree nodes.
    pub monitor: Option<usize>,
    /// Local stage modulo the turn period (ω) or depth (finite).
    pub phase: usize,
    /// Variables moved from this position.
    pub block: Vec<SortedVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub mv: Vec<Elem>,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct Arena {
    pub positions: Vec<Position>,
    pub edges: Vec<Vec<Edge>>,
    pub initial: usize,
    pub objective: Objective,
    pub monitor: Option<Monitor>,
}

impl Arena {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_terminal(&self, p: usize) -> bool {
        self.positions[p].status != NodeStatus::Open
    }

    /// Renders a move using element names.
    pub fn move_names(&self, m: &Structure, p: usize, mv: &[Elem]) -> Vec<String> {
        self.positions[p]
            .block
            .iter()
            .zip(mv)
            .map(|(v, e)| m.elem_name(&v.sort, *e).to_string())
            .collect()
    }

    /// The edge from `p` playing `mv`, if legal.
    pub fn edge(&self, p: usize, mv: &[Elem]) -> Option<&Edge> {
        self.edges[p].iter().find(|e| e.mv == mv)
    }
}

fn het(f: &Formula) -> Result<&HetBlock> {
    match f {
        Formula::Het(h) => Ok(h),
        _ => Err(Error::IllFormed(format!(
            "not a heterogeneous formula: {f}"
        ))),
    }
}

fn owner(h: &HetBlock, local: usize) -> Player {
    if (local % 2 == 0) == (h.polarity == Polarity::AE) {
        Player::Forall
    } else {
        Player::Exists
    }
}

fn legal_moves(
    m: &Structure,
    h: &HetBlock,
    local: usize,
    outer: &Assignment,
    test: &StageTest<'_>,
) -> Result<Vec<Vec<Elem>>> {
    let block = &h.schedule[local % h.period()];
    let sorts: Vec<&str> = block.iter().map(|v| v.sort.as_str()).collect();
    let mut out = Vec::new();
    for mv in m.tuples(&sorts) {
        if let Some(b) = h.bound_at(local) {
            let mut a = outer.clone();
            a.extend(block.iter().map(|v| v.name.clone()).zip(mv.iter().copied()));
            if !test(b, &a)? {
                continue;
            }
        }
        out.push(mv);
    }
    Ok(out)
}

fn stuck_status(p: Player) -> NodeStatus {
    match p {
        Player::Exists => NodeStatus::Lost,
        Player::Forall => NodeStatus::Won,
    }
}

/// Arena for `f` under the classical stage test.
pub fn build_arena(m: &Structure, f: &Formula, outer: &Assignment) -> Result<Arena> {
    build_arena_with(m, f, outer, &tarski_test(m), DEFAULT_MAX_POSITIONS)
}

/// Arena for `f` whose stage templates, bounds and leaf bodies are decided by `test`.
pub fn build_arena_with(
    m: &Structure,
    f: &Formula,
    outer: &Assignment,
    test: &StageTest<'_>,
    max_positions: usize,
) -> Result<Arena> {
    let h = het(f)?;
    match (&h.length, &h.payoff) {
        (Length::Omega, Payoff::Stages(_)) => omega_arena(m, h, outer, test, max_positions),
        (Length::Finite(n), Payoff::Body(body)) => {
            tree_arena(m, h, *n, body, outer, test, max_positions)
        }
        _ => Err(Error::IllFormed(
            "payoff does not match block length".into(),
        )),
    }
}

fn omega_arena(
    m: &Structure,
    h: &HetBlock,
    outer: &Assignment,
    test: &StageTest<'_>,
    max_positions: usize,
) -> Result<Arena> {
    let mon = compile_monitor(m, h, outer, test, max_positions)?;
    let turn = lcm(h.period(), 2);
    let objective = match mon.kind {
        StageKind::Safety => Objective::Safety,
        StageKind::Reach => Objective::Reach,
    };
    // sinks are phase-independent
    let key = |s: usize, phase: usize| {
        if mon.status(s).is_sink() {
            (s, 0)
        } else {
            (s, phase)
        }
    };
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut keys = vec![key(mon.initial, 0)];
    index.insert(keys[0], 0);
    let mut positions = Vec::new();
    let mut edges = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let (s, phase) = keys[i];
        let who = owner(h, phase);
        let block = h.schedule[phase % h.period()].clone();
        let mut out = Vec::new();
        let status = match mon.status(s) {
            MonitorStatus::Dead => NodeStatus::Lost,
            MonitorStatus::Hit => NodeStatus::Won,
            _ => {
                let moves = legal_moves(m, h, phase, outer, test)?;
                for mv in moves {
                    let k = key(mon.step(s, &mv), (phase + 1) % turn);
                    let target = match index.get(&k) {
                        Some(t) => *t,
                        None => {
                            if keys.len() >= max_positions {
                                return Err(Error::TooLarge(format!(
                                    "arena exceeds {max_positions} positions"
                                )));
                            }
                            keys.push(k);
                            index.insert(k, keys.len() - 1);
                            keys.len() - 1
                        }
                    };
                    out.push(Edge { mv, target });
                }
                if out.is_empty() {
                    stuck_status(who)
                } else {
                    NodeStatus::Open
                }
            }
        };
        positions.push(Position {
            owner: who,
            status,
            monitor: Some(s),
            phase,
            block,
        });
        edges.push(out);
        i += 1;
    }
    Ok(Arena {
        positions,
        edges,
        initial: 0,
        objective,
        monitor: Some(mon),
    })
}

fn tree_arena(
    m: &Structure,
    h: &HetBlock,
    n: usize,
    body: &Formula,
    outer: &Assignment,
    test: &StageTest<'_>,
    max_positions: usize,
) -> Result<Arena> {
    let mut ar = Arena {
        positions: Vec::new(),
        edges: Vec::new(),
        initial: 0,
        objective: Objective::Reach,
        monitor: None,
    };
    let mut stack = vec![(0usize, outer.clone(), None::<(usize, Vec<Elem>)>)];
    // depth-first with explicit parent links so children keep carrier order
    while let Some((depth, a, parent)) = stack.pop() {
        if ar.positions.len() >= max_positions {
            return Err(Error::TooLarge(format!(
                "game tree exceeds {max_positions} positions"
            )));
        }
        let id = ar.positions.len();
        if let Some((p, mv)) = parent {
            ar.edges[p].push(Edge { mv, target: id });
        }
        let who = owner(h, depth);
        if depth == n {
            let status = if test(body, &a)? {
                NodeStatus::Won
            } else {
                NodeStatus::Lost
            };
            ar.positions.push(Position {
                owner: who,
                status,
                monitor: None,
                phase: depth,
                block: Vec::new(),
            });
            ar.edges.push(Vec::new());
            continue;
        }
        let block = h.schedule[depth].clone();
        let moves = legal_moves(m, h, depth, &a, test)?;
        let status = if moves.is_empty() {
            stuck_status(who)
        } else {
            NodeStatus::Open
        };
        ar.positions.push(Position {
            owner: who,
            status,
            monitor: None,
            phase: depth,
            block: block.clone(),
        });
        ar.edges.push(Vec::new());
        for mv in moves.into_iter().rev() {
            let mut inner = a.clone();
            inner.extend(block.iter().map(|v| v.name.clone()).zip(mv.iter().copied()));
            stack.push((depth + 1, inner, Some((id, mv))));
        }
    }
    Ok(ar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula_in, parse_signature, parse_structure};

    fn m(carrier: &str) -> Structure {
        let sig = parse_signature("sort s; const one : s; rel P(s);").unwrap();
        parse_structure(&format!("carrier s = {{{carrier}}}; const one = 1;"), &sig).unwrap()
    }

    fn f(src: &str, m: &Structure) -> Formula {
        parse_formula_in(src, &m.signature, &[]).unwrap()
    }

    const COPYCAT: &str =
        "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";

    #[test]
    fn copycat_arena_is_small() {
        let m = m("0, 1");
        let ar = build_arena(&m, &f(COPYCAT, &m), &Assignment::new()).unwrap();
        // direct count: start, two "∀ played a" positions, the dead sink
        assert_eq!(ar.len(), 4);
        assert!(ar.len() <= 8);
        assert_eq!(ar.positions[ar.initial].owner, Player::Forall);
    }

    #[test]
    fn singleton_has_forced_moves() {
        let m = m("1");
        let ar = build_arena(&m, &f(COPYCAT, &m), &Assignment::new()).unwrap();
        for p in 0..ar.len() {
            if !ar.is_terminal(p) {
                assert_eq!(ar.edges[p].len(), 1);
            }
        }
    }

    #[test]
    fn bound_restricts_even_stage() {
        let m = m("0, 1");
        let g = f("hetAE { len: omega; sched: [[x:s], [y:s]]; bounds: [x = one, true]; payoff: safety(1)[true] }", &m);
        let ar = build_arena(&m, &g, &Assignment::new()).unwrap();
        for p in 0..ar.len() {
            if ar.positions[p].phase % 2 == 0 && !ar.is_terminal(p) {
                assert_eq!(ar.edges[p].len(), 1);
                assert_eq!(ar.edges[p][0].mv, vec![1]);
            }
        }
    }

    #[test]
    fn tree_for_finite_block() {
        let m = m("0, 1");
        let g = f(
            "hetAE { len: 2; sched: [[x:s], [y:s]]; payoff: body x = y }",
            &m,
        );
        let ar = build_arena(&m, &g, &Assignment::new()).unwrap();
        assert_eq!(ar.len(), 7);
        assert_eq!(ar.edges[0].len(), 2);
    }
}
