//! Brute-force evaluators used to cross-check the solver.

use crate::error::{Error, Result};
use crate::structure::{eval_tarski, Assignment, Elem, Structure};
use crate::syntax::{
    lcm, parse_placeholder, Formula, HetBlock, Length, Payoff, Polarity, StageKind,
};

use super::arena::{build_arena, Arena, NodeStatus, Objective, Player};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Enumerate every positional strategy of the existential player.
    StrategyEnum,
    /// Covering-family semantics on the tree of finite plays.
    CoverSemantics,
}

const MAX_STRATEGIES: u64 = 1 << 20;
const MAX_COVER_NODES: usize = 4_000_000;

pub fn oracle_eval(m: &Structure, f: &Formula, a: &Assignment, mode: OracleMode) -> Result<bool> {
    match mode {
        OracleMode::StrategyEnum => strategy_enum(&build_arena(m, f, a)?),
        OracleMode::CoverSemantics => cover(m, f, a),
    }
}

fn strategy_enum(ar: &Arena) -> Result<bool> {
    let owned: Vec<usize> = (0..ar.len())
        .filter(|&p| !ar.is_terminal(p) && ar.positions[p].owner == Player::Exists)
        .collect();
    let mut total: u64 = 1;
    for &p in &owned {
        total = total.saturating_mul(ar.edges[p].len() as u64);
        if total > MAX_STRATEGIES {
            return Err(Error::TooLarge(format!(
                "more than {MAX_STRATEGIES} positional strategies"
            )));
        }
    }
    let mut choice = vec![0usize; ar.len()];
    for code in 0..total {
        let mut c = code;
        for &p in &owned {
            let d = ar.edges[p].len() as u64;
            choice[p] = (c % d) as usize;
            c /= d;
        }
        if strategy_wins(ar, &choice) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Checks one existential strategy against all counterplay.
fn strategy_wins(ar: &Arena, choice: &[usize]) -> bool {
    let succ = |p: usize| -> Vec<usize> {
        if ar.is_terminal(p) {
            Vec::new()
        } else if ar.positions[p].owner == Player::Exists {
            vec![ar.edges[p][choice[p]].target]
        } else {
            ar.edges[p].iter().map(|e| e.target).collect()
        }
    };
    // iterative DFS with colours: 0 unseen, 1 on stack, 2 done
    let mut colour = vec![0u8; ar.len()];
    let mut stack = vec![(ar.initial, 0usize)];
    colour[ar.initial] = 1;
    while let Some((p, i)) = stack.pop() {
        if ar.positions[p].status == NodeStatus::Lost {
            return false;
        }
        let next = succ(p);
        if i < next.len() {
            stack.push((p, i + 1));
            let t = next[i];
            match colour[t] {
                0 => {
                    colour[t] = 1;
                    stack.push((t, 0));
                }
                // a reachable cycle never reaches the target
                1 if ar.objective == Objective::Reach => return false,
                _ => {}
            }
        } else {
            colour[p] = 2;
        }
    }
    true
}

struct Cover<'a> {
    m: &'a Structure,
    h: &'a HetBlock,
    outer: &'a Assignment,
    depth: usize,
    nodes: usize,
}

fn bound_ok(c: &Cover<'_>, local: usize, mv: &[Elem]) -> Result<bool> {
    match c.h.bound_at(local) {
        None => Ok(true),
        Some(b) => {
            let mut a = c.outer.clone();
            let block = &c.h.schedule[local % c.h.period()];
            a.extend(block.iter().map(|v| v.name.clone()).zip(mv.iter().copied()));
            eval_tarski(c.m, b, &a)
        }
    }
}

fn universal(h: &HetBlock, local: usize) -> bool {
    (local % 2 == 0) == (h.polarity == Polarity::AE)
}

/// Stage condition at absolute stage `s = prefix.len() - 1`: `Some(v)` when
/// the play is decided with value `v`.
fn decided(c: &Cover<'_>, prefix: &[Vec<Elem>]) -> Result<Option<bool>> {
    let p = c.h.stage_payoff().expect("ω-block");
    let s = prefix.len() - 1;
    if s + 1 < p.window {
        return Ok(None);
    }
    let t = &p.templates[s % p.templates.len()];
    let mut a = c.outer.clone();
    for v in t.free_vars() {
        if let Some((i, j)) = parse_placeholder(&v) {
            a.insert(v, prefix[s + 1 - p.window + i][j]);
        }
    }
    let ok = eval_tarski(c.m, t, &a)?;
    Ok(match p.kind {
        StageKind::Safety if !ok => Some(false),
        StageKind::Reach if ok => Some(true),
        _ => None,
    })
}

fn moves(c: &Cover<'_>, local: usize) -> Result<Vec<Vec<Elem>>> {
    let block = &c.h.schedule[local % c.h.period()];
    let sorts: Vec<&str> = block.iter().map(|v| v.sort.as_str()).collect();
    let mut out = Vec::new();
    for mv in c.m.tuples(&sorts) {
        if bound_ok(c, local, &mv)? {
            out.push(mv);
        }
    }
    Ok(out)
}

/// A node is forced when the universal player's every move wins, or the
/// existential player has a nonempty family of moves all of which win.
fn combine(c: &Cover<'_>, local: usize, values: &[bool]) -> Result<bool> {
    if universal(c.h, local) {
        return Ok(values.iter().all(|v| *v));
    }
    let k = values.len();
    if k > 20 {
        return Err(Error::TooLarge(
            "too many moves for covering families".into(),
        ));
    }
    for family in 1u32..(1u32 << k) {
        if (0..k).filter(|i| family & (1 << i) != 0).all(|i| values[i]) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn omega_node(c: &mut Cover<'_>, prefix: &mut Vec<Vec<Elem>>, local: usize) -> Result<bool> {
    c.nodes += 1;
    if c.nodes > MAX_COVER_NODES {
        return Err(Error::TooLarge("cover-semantics tree too large".into()));
    }
    let kind = c.h.stage_payoff().expect("ω-block").kind;
    if local == c.depth {
        return Ok(kind == StageKind::Safety);
    }
    let ms = moves(c, local)?;
    if ms.is_empty() {
        return Ok(universal(c.h, local));
    }
    let mut values = Vec::with_capacity(ms.len());
    for mv in ms {
        prefix.push(mv);
        let v = match decided(c, prefix)? {
            Some(v) => v,
            None => omega_node(c, prefix, local + 1)?,
        };
        prefix.pop();
        values.push(v);
    }
    combine(c, local, &values)
}

fn finite_node(
    c: &mut Cover<'_>,
    body: &Formula,
    a: &mut Assignment,
    local: usize,
) -> Result<bool> {
    c.nodes += 1;
    if c.nodes > MAX_COVER_NODES {
        return Err(Error::TooLarge("cover-semantics tree too large".into()));
    }
    if local == c.depth {
        return eval_tarski(c.m, body, a);
    }
    let block = c.h.schedule[local].clone();
    let mut values = Vec::new();
    let sorts: Vec<&str> = block.iter().map(|v| v.sort.as_str()).collect();
    for mv in c.m.tuples(&sorts) {
        let saved: Vec<Option<Elem>> = block.iter().map(|v| a.get(&v.name).copied()).collect();
        a.extend(block.iter().map(|v| v.name.clone()).zip(mv.iter().copied()));
        let legal = match c.h.bound_at(local) {
            Some(b) => eval_tarski(c.m, b, a)?,
            None => true,
        };
        if legal {
            values.push(finite_node(c, body, a, local + 1)?);
        }
        for (v, old) in block.iter().zip(saved) {
            match old {
                Some(e) => a.insert(v.name.clone(), e),
                None => a.remove(&v.name),
            };
        }
    }
    if values.is_empty() {
        return Ok(universal(c.h, local));
    }
    combine(c, local, &values)
}

fn cover(m: &Structure, f: &Formula, outer: &Assignment) -> Result<bool> {
    let Formula::Het(h) = f else {
        return Err(Error::IllFormed(format!(
            "not a heterogeneous formula: {f}"
        )));
    };
    match (&h.length, &h.payoff) {
        (Length::Finite(n), Payoff::Body(body)) => {
            let mut c = Cover {
                m,
                h,
                outer,
                depth: *n,
                nodes: 0,
            };
            finite_node(&mut c, body, &mut outer.clone(), 0)
        }
        (Length::Omega, Payoff::Stages(p)) => {
            // the unfolded game has at most `turns * windows + 2` distinct
            // situations, so decisions stabilise within that many moves
            let turns = lcm(lcm(p.templates.len(), h.period()), 2);
            let alphabet = h
                .schedule
                .iter()
                .map(|b| b.iter().map(|v| m.size(&v.sort)).product::<usize>())
                .max()
                .unwrap_or(1);
            let windows: usize = (0..p.window).map(|k| alphabet.pow(k as u32)).sum();
            let depth = turns * windows + 2;
            let mut c = Cover {
                m,
                h,
                outer,
                depth,
                nodes: 0,
            };
            let mut prefix = Vec::new();
            for mv in &p.history {
                prefix.push(
                    mv.iter()
                        .map(|t| m.eval_term(t, outer))
                        .collect::<Result<Vec<_>>>()?,
                );
                if let Some(v) = decided(&c, &prefix)? {
                    return Ok(v);
                }
            }
            omega_node(&mut c, &mut prefix, 0)
        }
        _ => Err(Error::IllFormed(
            "payoff does not match block length".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::eval_het;
    use crate::parse::{parse_formula_in, parse_signature, parse_structure};

    fn m2() -> Structure {
        let sig = parse_signature("sort s; const one : s;").unwrap();
        parse_structure("carrier s = {0, 1}; const one = 1;", &sig).unwrap()
    }

    const COPYCAT: &str =
        "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";
    const DUAL: &str =
        "hetEA { len: omega; sched: [[x:s], [y:s]]; payoff: reach(2)[not(true), not(v0 = v1)] }";

    #[test]
    fn copycat_both_modes() {
        let m = m2();
        let f = parse_formula_in(COPYCAT, &m.signature, &[]).unwrap();
        for mode in [OracleMode::StrategyEnum, OracleMode::CoverSemantics] {
            assert!(oracle_eval(&m, &f, &Assignment::new(), mode).unwrap());
        }
    }

    #[test]
    fn dual_copycat_false() {
        let m = m2();
        let f = parse_formula_in(DUAL, &m.signature, &[]).unwrap();
        for mode in [OracleMode::StrategyEnum, OracleMode::CoverSemantics] {
            assert!(!oracle_eval(&m, &f, &Assignment::new(), mode).unwrap());
        }
        assert!(!eval_het(&m, &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn finite_block_cover() {
        let m = m2();
        let f = parse_formula_in(
            "hetAE { len: 2; sched: [[x:s], [y:s]]; payoff: body x = y }",
            &m.signature,
            &[],
        )
        .unwrap();
        assert!(oracle_eval(&m, &f, &Assignment::new(), OracleMode::CoverSemantics).unwrap());
        let g = parse_formula_in(
            "hetEA { len: 2; sched: [[x:s], [y:s]]; payoff: body x = y }",
            &m.signature,
            &[],
        )
        .unwrap();
        assert!(!oracle_eval(&m, &g, &Assignment::new(), OracleMode::CoverSemantics).unwrap());
    }
}
