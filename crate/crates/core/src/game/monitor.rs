//! Finite-state monitors for windowed periodic payoffs.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::structure::{Assignment, Elem, Structure};
use crate::syntax::{lcm, parse_placeholder, Formula, HetBlock, StageKind};

use super::StageTest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MonitorStatus {
    Alive,
    Dead,
    Pending,
    Hit,
}

impl MonitorStatus {
    pub fn is_sink(self) -> bool {
        matches!(self, MonitorStatus::Dead | MonitorStatus::Hit)
    }
}

/// A minimized deterministic monitor. Sink states (`Dead`, `Hit`) loop on
/// every input.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub kind: StageKind,
    pub initial: usize,
    status: Vec<MonitorStatus>,
    sorts: Vec<Vec<String>>,
    sizes: Vec<Vec<usize>>,
    trans: Vec<Vec<usize>>,
}

impl Monitor {
    pub fn num_states(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, s: usize) -> MonitorStatus {
        self.status[s]
    }

    /// Sorts of the move expected in state `s` (empty for sinks).
    pub fn alphabet(&self, s: usize) -> &[String] {
        &self.sorts[s]
    }

    pub fn step(&self, s: usize, mv: &[Elem]) -> usize {
        if self.status[s].is_sink() {
            return s;
        }
        self.trans[s][tuple_index(&self.sizes[s], mv)]
    }

    /// Status after feeding a sequence of moves from the initial state.
    pub fn run(&self, moves: &[Vec<Elem>]) -> MonitorStatus {
        let mut s = self.initial;
        for mv in moves {
            s = self.step(s, mv);
        }
        self.status[s]
    }
}

fn tuple_index(sizes: &[usize], mv: &[Elem]) -> usize {
    mv.iter().zip(sizes).fold(0, |acc, (e, n)| acc * n + e)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Raw {
    Sink,
    Live {
        phase: usize,
        window: Vec<Vec<Elem>>,
    },
}

/// Evaluates stage template `t` on a full window.
pub(crate) fn stage_holds(
    t: &Formula,
    window: &[&[Elem]],
    outer: &Assignment,
    test: &StageTest<'_>,
) -> Result<bool> {
    let mut a = outer.clone();
    for v in t.free_vars() {
        if let Some((i, j)) = parse_placeholder(&v) {
            let e = window
                .get(i)
                .and_then(|mv| mv.get(j))
                .ok_or_else(|| Error::eval(format!("placeholder `{v}` outside the window")))?;
            a.insert(v, *e);
        }
    }
    test(t, &a)
}

/// Compiles the payoff of an ω-block under an outer assignment. History
/// terms are evaluated first and fed to the monitor, so the initial state
/// reflects the consumed prefix.
pub fn compile_monitor(
    m: &Structure,
    h: &HetBlock,
    outer: &Assignment,
    test: &StageTest<'_>,
    max_states: usize,
) -> Result<Monitor> {
    let p = h
        .stage_payoff()
        .ok_or_else(|| Error::IllFormed("monitors need a safety/reach payoff".into()))?;
    let (w, tl) = (p.window, p.templates.len());
    if w == 0 || tl == 0 {
        return Err(Error::IllFormed("empty window or template list".into()));
    }
    let big_l = lcm(tl, h.period());
    let sink_status = match p.kind {
        StageKind::Safety => MonitorStatus::Dead,
        StageKind::Reach => MonitorStatus::Hit,
    };
    let live_status = match p.kind {
        StageKind::Safety => MonitorStatus::Alive,
        StageKind::Reach => MonitorStatus::Pending,
    };
    let block_sorts = |stage: usize| -> Vec<String> {
        h.abs_block(stage).iter().map(|v| v.sort.clone()).collect()
    };

    // one step of the unminimized monitor at absolute stage `phase` (mod L)
    let mut cache: HashMap<(usize, Vec<Vec<Elem>>), bool> = HashMap::new();
    let mut raw_step = |raw: &Raw, mv: &[Elem]| -> Result<Raw> {
        let Raw::Live { phase, window } = raw else {
            return Ok(Raw::Sink);
        };
        let mut full: Vec<Vec<Elem>> = window.clone();
        full.push(mv.to_vec());
        if full.len() == w {
            let k = phase % tl;
            let key = (k, full.clone());
            let ok = match cache.get(&key) {
                Some(b) => *b,
                None => {
                    let refs: Vec<&[Elem]> = full.iter().map(Vec::as_slice).collect();
                    let b = stage_holds(&p.templates[k], &refs, outer, test)?;
                    cache.insert(key, b);
                    b
                }
            };
            let fires = match p.kind {
                StageKind::Safety => !ok,
                StageKind::Reach => ok,
            };
            if fires {
                return Ok(Raw::Sink);
            }
        }
        if full.len() == w {
            full.remove(0);
        }
        Ok(Raw::Live {
            phase: (phase + 1) % big_l,
            window: full,
        })
    };

    let mut start = Raw::Live {
        phase: 0,
        window: Vec::new(),
    };
    for mv in &p.history {
        let vals = mv
            .iter()
            .map(|t| m.eval_term(t, outer))
            .collect::<Result<Vec<_>>>()?;
        start = raw_step(&start, &vals)?;
    }

    // explore
    let mut index: HashMap<Raw, usize> = HashMap::new();
    let mut raws = vec![start.clone()];
    index.insert(start, 0);
    let mut raw_trans: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < raws.len() {
        let r = raws[i].clone();
        let mut row = Vec::new();
        if let Raw::Live { phase, .. } = &r {
            let sorts = block_sorts(*phase);
            let refs: Vec<&str> = sorts.iter().map(String::as_str).collect();
            for mv in m.tuples(&refs) {
                let next = raw_step(&r, &mv)?;
                let id = match index.get(&next) {
                    Some(id) => *id,
                    None => {
                        if raws.len() >= max_states {
                            return Err(Error::TooLarge(format!(
                                "monitor exceeds {max_states} states"
                            )));
                        }
                        raws.push(next.clone());
                        index.insert(next, raws.len() - 1);
                        raws.len() - 1
                    }
                };
                row.push(id);
            }
        }
        raw_trans.push(row);
        i += 1;
    }

    // Moore partition refinement keyed on status and alphabet
    let raw_sorts: Vec<Vec<String>> = raws
        .iter()
        .map(|r| match r {
            Raw::Sink => Vec::new(),
            Raw::Live { phase, .. } => block_sorts(*phase),
        })
        .collect();
    let raw_status: Vec<MonitorStatus> = raws
        .iter()
        .map(|r| {
            if *r == Raw::Sink {
                sink_status
            } else {
                live_status
            }
        })
        .collect();
    let mut class: Vec<usize> = renumber(
        &(0..raws.len())
            .map(|i| (raw_status[i], raw_sorts[i].clone()))
            .collect::<Vec<_>>(),
    );
    loop {
        let sig: Vec<(usize, Vec<usize>)> = (0..raws.len())
            .map(|i| (class[i], raw_trans[i].iter().map(|&t| class[t]).collect()))
            .collect();
        let next = renumber(&sig);
        let stable = next.iter().max() == class.iter().max();
        class = next;
        if stable {
            break;
        }
    }
    let n = class.iter().max().map_or(0, |c| c + 1);
    let mut status = vec![live_status; n];
    let mut sorts = vec![Vec::new(); n];
    let mut trans = vec![Vec::new(); n];
    for i in 0..raws.len() {
        let c = class[i];
        status[c] = raw_status[i];
        sorts[c] = raw_sorts[i].clone();
        trans[c] = raw_trans[i].iter().map(|&t| class[t]).collect();
    }
    let sizes = sorts
        .iter()
        .map(|ss: &Vec<String>| ss.iter().map(|s| m.size(s)).collect())
        .collect();
    Ok(Monitor {
        kind: p.kind,
        initial: class[0],
        status,
        sorts,
        sizes,
        trans,
    })
}

/// Numbers distinct keys in order of first occurrence.
fn renumber<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut ids: BTreeMap<K, usize> = BTreeMap::new();
    keys.iter()
        .map(|k| {
            let n = ids.len();
            *ids.entry(k.clone()).or_insert(n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::tarski_test;
    use crate::parse::{parse_formula_in, parse_signature, parse_structure};
    use crate::syntax::{StagePayoff, Term};

    fn m2() -> Structure {
        let sig = parse_signature("sort s; const one : s;").unwrap();
        parse_structure("carrier s = {0, 1}; const one = 1;", &sig).unwrap()
    }

    fn block(src: &str, m: &Structure) -> HetBlock {
        match parse_formula_in(src, &m.signature, &[]).unwrap() {
            Formula::Het(h) => *h,
            f => panic!("{f}"),
        }
    }

    // independent prefix evaluation of the payoff
    fn prefix_status(h: &HetBlock, m: &Structure, prefix: &[Vec<Elem>]) -> bool {
        let p = h.stage_payoff().unwrap();
        let mut fired = false;
        for n in 0..prefix.len() {
            if n + 1 < p.window {
                continue;
            }
            let window: Vec<&[Elem]> = prefix[n + 1 - p.window..=n]
                .iter()
                .map(Vec::as_slice)
                .collect();
            let t = &p.templates[n % p.templates.len()];
            let ok = stage_holds(t, &window, &Assignment::new(), &|f, a| {
                crate::structure::eval_tarski(m, f, a)
            })
            .unwrap();
            fired |= match p.kind {
                StageKind::Safety => !ok,
                StageKind::Reach => ok,
            };
        }
        fired
    }

    fn all_prefixes(len: usize) -> Vec<Vec<Vec<Elem>>> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for p in &layer {
                for e in 0..2 {
                    let mut q: Vec<Vec<Elem>> = p.clone();
                    q.push(vec![e]);
                    next.push(q);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn check_against_prefixes(h: &HetBlock, m: &Structure, mon: &Monitor) {
        for pre in all_prefixes(6) {
            assert_eq!(
                mon.run(&pre).is_sink(),
                prefix_status(h, m, &pre),
                "prefix {pre:?}"
            );
        }
    }

    #[test]
    fn copycat_monitor() {
        let m = m2();
        let h = block(
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }",
            &m,
        );
        let mon = compile_monitor(&m, &h, &Assignment::new(), &tarski_test(&m), 1000).unwrap();
        assert_eq!(mon.num_states(), 4);
        check_against_prefixes(&h, &m, &mon);
    }

    #[test]
    fn reach_one() {
        let m = m2();
        let h = block(
            "hetAE { len: omega; sched: [[x:s]]; payoff: reach(1)[v0 = one] }",
            &m,
        );
        let mon = compile_monitor(&m, &h, &Assignment::new(), &tarski_test(&m), 1000).unwrap();
        assert_eq!(mon.num_states(), 2);
        let hit = (0..2)
            .find(|&s| mon.status(s) == MonitorStatus::Hit)
            .unwrap();
        assert_eq!(mon.step(hit, &[0]), hit);
        check_against_prefixes(&h, &m, &mon);
    }

    #[test]
    fn trivial_safety_has_one_state() {
        let m = m2();
        let h = block(
            "hetAE { len: omega; sched: [[x:s]]; payoff: safety(2)[true] }",
            &m,
        );
        let mon = compile_monitor(&m, &h, &Assignment::new(), &tarski_test(&m), 1000).unwrap();
        assert_eq!(mon.num_states(), 1);
        assert_eq!(mon.status(0), MonitorStatus::Alive);
    }

    #[test]
    fn history_is_replayed() {
        let m = m2();
        let mut h = block(
            "hetAE { len: omega; sched: [[x:s]]; payoff: safety(1)[v0 = one] }",
            &m,
        );
        if let crate::syntax::Payoff::Stages(StagePayoff { history, .. }) = &mut h.payoff {
            history.push(vec![Term::var("z")]);
        }
        let a: Assignment = [("z".to_string(), 0)].into();
        let mon = compile_monitor(&m, &h, &a, &tarski_test(&m), 1000).unwrap();
        assert_eq!(mon.status(mon.initial), MonitorStatus::Dead);
    }
}
