//! Determinacy and preservation checks, and the well-determinedness verdict.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::{Assignment, Structure};
use crate::syntax::{
    alpha_eq, well_formed, Formula, HetBlock, Length, Payoff, PayoffClass, Polarity, SortedVar,
    Theory,
};

use super::arena::{Arena, NodeStatus, Objective};
use super::eval::solve_formula;
use super::solve::GameResult;

/// An infinite play presented as a stem followed by a repeated cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lasso {
    pub stem: Vec<Vec<String>>,
    pub cycle: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preservation {
    Pass,
    Fail(Lasso),
}

impl Preservation {
    pub fn passed(&self) -> bool {
        matches!(self, Preservation::Pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GameReport {
    pub id: usize,
    pub formula: String,
    pub polarity: String,
    pub params: String,
    pub positions: usize,
    pub monitor_states: usize,
    pub w_exists: usize,
    pub w_forall: usize,
    pub value: bool,
    pub determined: bool,
    /// Preservation for the block itself (first schema) and for its dual (second schema).
    pub preservation: Option<Preservation>,
    pub dual_preservation: Option<Preservation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub games: Vec<GameReport>,
    pub determinacy: bool,
    pub preservation: bool,
    pub well_determined: bool,
}

impl CertifyReport {
    /// First failing lasso, if any.
    pub fn witness(&self) -> Option<&Lasso> {
        self.games.iter().find_map(|g| {
            [&g.preservation, &g.dual_preservation]
                .into_iter()
                .find_map(|p| match p {
                    Some(Preservation::Fail(l)) => Some(l),
                    _ => None,
                })
        })
    }
}

fn moves_named(m: &Structure, ar: &Arena, path: &[(usize, usize)]) -> Vec<Vec<String>> {
    path.iter()
        .map(|&(p, e)| ar.move_names(m, p, &ar.edges[p][e].mv))
        .collect()
}

/// BFS path (as `(position, edge)` pairs) from `from` to the first node
/// satisfying `goal`, moving only through nodes accepted by `through`.
fn bfs_path(
    ar: &Arena,
    from: usize,
    through: &dyn Fn(usize) -> bool,
    goal: &dyn Fn(usize) -> bool,
    skip_start: bool,
) -> Option<Vec<(usize, usize)>> {
    let n = ar.len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    if !skip_start && goal(from) {
        return Some(Vec::new());
    }
    seen[from] = !skip_start;
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        for (i, e) in ar.edges[p].iter().enumerate() {
            let t = e.target;
            if seen[t] || !through(t) {
                continue;
            }
            seen[t] = true;
            parent[t] = Some((p, i));
            if goal(t) {
                let mut path = vec![(p, i)];
                let mut cur = p;
                while cur != from {
                    let (q, j) = parent[cur].expect("BFS parent");
                    path.push((q, j));
                    cur = q;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(t);
        }
    }
    None
}

/// Lasso search inside the existential winning region. With `any_stem` the
/// stem may follow arbitrary moves, which covers every tail of the game.
fn lasso_search(m: &Structure, ar: &Arena, r: &GameResult, any_stem: bool) -> Result<Preservation> {
    if ar.monitor.is_none() {
        return Ok(Preservation::Pass);
    }
    if ar.objective == Objective::Safety {
        if (0..ar.len()).any(|p| r.w_exists[p] && ar.positions[p].status == NodeStatus::Lost) {
            return Err(Error::eval("winning region contains a violating position"));
        }
        return Ok(Preservation::Pass);
    }
    let allowed = |p: usize| r.w_exists[p] && ar.positions[p].status != NodeStatus::Won;
    if !any_stem && !allowed(ar.initial) {
        return Ok(Preservation::Pass);
    }
    // BFS order of candidate cycle entries
    let mut order = Vec::new();
    let mut seen = vec![false; ar.len()];
    let mut queue = VecDeque::from([ar.initial]);
    seen[ar.initial] = true;
    while let Some(p) = queue.pop_front() {
        order.push(p);
        for e in &ar.edges[p] {
            if !seen[e.target] && (any_stem || allowed(e.target)) {
                seen[e.target] = true;
                queue.push_back(e.target);
            }
        }
    }
    for &c in &order {
        if !allowed(c) {
            continue;
        }
        if let Some(cycle) = bfs_path(ar, c, &allowed, &|t| t == c, true) {
            let stem = if any_stem {
                bfs_path(ar, ar.initial, &|_| true, &|t| t == c, false).unwrap_or_default()
            } else {
                bfs_path(ar, ar.initial, &allowed, &|t| t == c, false).unwrap_or_default()
            };
            return Ok(Preservation::Fail(Lasso {
                stem: moves_named(m, ar, &stem),
                cycle: moves_named(m, ar, &cycle),
            }));
        }
    }
    Ok(Preservation::Pass)
}

/// Preservation for plays from the initial position of `f`: every infinite
/// play whose prefixes all stay in the existential winning region must win.
pub fn check_preservation(m: &Structure, f: &Formula, a: &Assignment) -> Result<Preservation> {
    match f {
        Formula::Het(h) if h.length == Length::Omega => {}
        _ => {
            return Err(Error::IllFormed(
                "preservation is checked on ω-blocks".into(),
            ))
        }
    }
    let (ar, r) = solve_formula(m, f, a)?;
    lasso_search(m, &ar, &r, false)
}

/// Preservation over every tail of `f` (stems may use arbitrary moves).
pub fn check_preservation_with(m: &Structure, ar: &Arena, r: &GameResult) -> Result<Preservation> {
    lasso_search(m, ar, r, true)
}

fn format_assignment(m: &Structure, params: &[SortedVar], a: &Assignment) -> String {
    params
        .iter()
        .map(|v| format!("{}={}", v.name, m.elem_name(&v.sort, a[&v.name])))
        .collect::<Vec<_>>()
        .join(", ")
}

fn dual_formula(f: &Formula) -> Formula {
    match f {
        Formula::Het(h) => Formula::het(HetBlock::dual(h)),
        _ => f.clone(),
    }
}

fn run(
    m: &Structure,
    games: &[(Formula, Vec<SortedVar>)],
    preservation: bool,
) -> Result<CertifyReport> {
    let mut reports = Vec::new();
    for (f, params) in games {
        let Formula::Het(h) = f else {
            return Err(Error::IllFormed(format!(
                "not a heterogeneous formula: {f}"
            )));
        };
        let dual = dual_formula(f);
        for a in m.assignments(params) {
            let (ar, r) = solve_formula(m, f, &a)?;
            let (dar, dr) = solve_formula(m, &dual, &a)?;
            let value = r.exists_wins(ar.initial);
            let determined =
                r.is_partition() && dr.is_partition() && value != dr.exists_wins(dar.initial);
            let (pres, dpres) = if preservation && h.length == Length::Omega {
                (
                    Some(check_preservation_with(m, &ar, &r)?),
                    Some(check_preservation_with(m, &dar, &dr)?),
                )
            } else {
                (None, None)
            };
            let (we, wf) = r.sizes();
            reports.push(GameReport {
                id: reports.len(),
                formula: f.to_string(),
                polarity: match h.polarity {
                    Polarity::AE => "AE".into(),
                    Polarity::EA => "EA".into(),
                },
                params: format_assignment(m, params, &a),
                positions: ar.len(),
                monitor_states: ar.monitor.as_ref().map_or(0, |mon| mon.num_states()),
                w_exists: we,
                w_forall: wf,
                value,
                determined,
                preservation: pres,
                dual_preservation: dpres,
            });
        }
    }
    let determinacy = reports.iter().all(|g| g.determined);
    let pres_ok = reports.iter().all(|g| {
        g.preservation.as_ref().map_or(true, Preservation::passed)
            && g.dual_preservation
                .as_ref()
                .map_or(true, Preservation::passed)
    });
    Ok(CertifyReport {
        games: reports,
        determinacy,
        preservation: pres_ok,
        well_determined: determinacy && pres_ok,
    })
}

/// Determinacy of every game at every parameter tuple.
pub fn check_determinacy(
    m: &Structure,
    games: &[(Formula, Vec<SortedVar>)],
) -> Result<CertifyReport> {
    let mut rep = run(m, games, false)?;
    rep.well_determined = false;
    Ok(rep)
}

/// Determinacy plus both preservation schemata for every game.
pub fn check_well_determined(
    m: &Structure,
    games: &[(Formula, Vec<SortedVar>)],
) -> Result<CertifyReport> {
    run(m, games, true)
}

/// The ω-games a theory instantiates: its heterogeneous subformulas, any
/// extra games, and explicit class specs placed on the schedules in use
/// (or on one-variable schedules when none occur).
pub fn class_games(
    th: &Theory,
    extra: &[(Formula, Vec<SortedVar>)],
) -> Vec<(Formula, Vec<SortedVar>)> {
    let mut out: Vec<(Formula, Vec<SortedVar>)> = Vec::new();
    let push = |f: Formula, vs: Vec<SortedVar>, out: &mut Vec<(Formula, Vec<SortedVar>)>| {
        if matches!(&f, Formula::Het(h) if h.length == Length::Omega)
            && !out.iter().any(|(g, _)| alpha_eq(g, &f))
        {
            out.push((f, vs));
        }
    };
    for (f, vs) in th.het_subformulas() {
        push(f, vs, &mut out);
    }
    for (f, vs) in extra {
        push(f.clone(), vs.clone(), &mut out);
    }
    if let PayoffClass::Explicit(specs) = &th.class {
        let mut schedules: Vec<Vec<Vec<SortedVar>>> = Vec::new();
        for (f, _) in &out {
            if let Formula::Het(h) = f {
                if !schedules.contains(&h.schedule) {
                    schedules.push(h.schedule.clone());
                }
            }
        }
        if schedules.is_empty() {
            schedules = th
                .signature
                .sorts
                .iter()
                .map(|s| vec![vec![SortedVar::new("x", s.clone())]])
                .collect();
        }
        for spec in specs {
            for sched in &schedules {
                for pol in [Polarity::AE, Polarity::EA] {
                    let payoff = match pol {
                        Polarity::AE => spec.clone(),
                        Polarity::EA => spec.negate(),
                    };
                    let f = Formula::het(HetBlock {
                        polarity: pol,
                        length: Length::Omega,
                        schedule: sched.clone(),
                        bounds: None,
                        payoff: Payoff::Stages(payoff),
                    });
                    if well_formed(&f, &th.signature, &[]).is_empty() {
                        push(f, Vec::new(), &mut out);
                    }
                }
            }
        }
    }
    out
}
