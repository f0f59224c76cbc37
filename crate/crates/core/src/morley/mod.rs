//! Morleyization: C/D relation symbols for the subformulas of a theory.

mod back;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::{check_well_determined, class_games};
use crate::proof::formula_in_class;
use crate::structure::{eval_tarski, Structure};
use crate::syntax::{
    canonical, collect_with_context, desugar_finite_block, stage_variables, tail_block, Axiom,
    Formula, HetBlock, Length, Mode, Polarity, Sequent, SortedVar, Term, Theory,
};

pub use back::back_translate_proof;

/// Number of tail steps added to S below each ω-block of the theory.
pub const TAIL_DEPTH: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dir {
    /// The clause as written, left to right.
    Forward,
    Backward,
}

/// Which item of the Morleyized axiom list an axiom instantiates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clause {
    Disjoint,
    Cover,
    Atom(Dir),
    Axiom(String),
    ConjAx(usize),
    DisjAx(usize),
    AndD(Dir),
    OrC(Dir),
    ImpC(Dir),
    ExistsC(Dir),
    ForallD(Dir),
    HetD(Dir),
    HetC(Dir),
}

/// A member of S together with its relation symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub formula: Formula,
    /// Free variables in argument order (sorted by name).
    pub vars: Vec<SortedVar>,
    pub c: String,
    pub d: String,
}

#[derive(Clone, Debug)]
pub struct MorleyizedTheory {
    pub theory: Theory,
    pub source: Theory,
    pub entries: Vec<Entry>,
    /// Axiom name to (clause, index of the S member it is about).
    pub clauses: BTreeMap<String, (Clause, Option<usize>)>,
    index: BTreeMap<String, usize>,
}

fn key(f: &Formula, vars: &[SortedVar]) -> String {
    let sorts: Vec<&str> = vars.iter().map(|v| v.sort.as_str()).collect();
    format!("{} | {}", canonical(f), sorts.join(","))
}

fn map_finite(f: &Formula) -> Result<Formula> {
    let rec = |g: &Formula| map_finite(g);
    Ok(match f {
        Formula::Het(h) if h.length != Length::Omega => map_finite(&desugar_finite_block(f)?)?,
        Formula::And(l) => Formula::And(l.iter().map(rec).collect::<Result<_>>()?),
        Formula::Or(l) => Formula::Or(l.iter().map(rec).collect::<Result<_>>()?),
        Formula::Implies(a, b) => Formula::implies(rec(a)?, rec(b)?),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(rec(b)?)),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(rec(b)?)),
        _ => f.clone(),
    })
}

impl MorleyizedTheory {
    pub fn entry(&self, f: &Formula, vars: &[SortedVar]) -> Option<&Entry> {
        self.index.get(&key(f, vars)).map(|&i| &self.entries[i])
    }

    fn entry_in(&self, f: &Formula, ctx: &[SortedVar]) -> Option<&Entry> {
        self.entry(f, &restrict(f, ctx))
    }

    /// The symbol named `name`: its S member and whether it is a `C` symbol.
    pub fn symbol(&self, name: &str) -> Option<(&Entry, bool)> {
        self.entries.iter().find_map(|e| {
            if e.c == name {
                Some((e, true))
            } else if e.d == name {
                Some((e, false))
            } else {
                None
            }
        })
    }

    /// Sidecar table: symbol name to the formula it stands for.
    pub fn sidecar(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let vars: Vec<String> = e.vars.iter().map(|v| v.to_string()).collect();
            out.insert(e.c.clone(), format!("{} [{}]", e.formula, vars.join(", ")));
            out.insert(e.d.clone(), format!("not({}) [{}]", e.formula, vars.join(", ")));
        }
        out
    }

    fn add(&mut self, f: &Formula, ctx: &[SortedVar]) -> Result<usize> {
        let vars = restrict(f, ctx);
        let k = key(f, &vars);
        if let Some(&i) = self.index.get(&k) {
            return Ok(i);
        }
        let digest = hex(&Sha256::digest(k.as_bytes()));
        let mut len = 8;
        while self.theory.signature.relations.contains_key(&format!("C#{}", &digest[..len])) {
            len += 4;
        }
        let (c, d) = (format!("C#{}", &digest[..len]), format!("D#{}", &digest[..len]));
        let sorts: Vec<String> = vars.iter().map(|v| v.sort.clone()).collect();
        self.theory.signature.add_relation(&c, sorts.clone())?;
        self.theory.signature.add_relation(&d, sorts)?;
        self.entries.push(Entry { formula: f.clone(), vars, c, d });
        self.index.insert(k, self.entries.len() - 1);
        Ok(self.entries.len() - 1)
    }

    fn atom(&self, i: usize, positive: bool) -> Formula {
        let e = &self.entries[i];
        let args = e.vars.iter().map(|v| Term::var(&v.name)).collect();
        Formula::atom(if positive { &e.c } else { &e.d }, args)
    }

    fn push(&mut self, name: String, clause: Clause, about: Option<usize>, s: Sequent) {
        self.theory.axioms.push(Axiom { name: name.clone(), sequent: s });
        self.clauses.insert(name, (clause, about));
    }

    fn both(&mut self, name: &str, i: usize, clause: fn(Dir) -> Clause, l: Formula, r: Formula) {
        let ctx = self.entries[i].vars.clone();
        self.push(format!("{name}{i}_l"), clause(Dir::Forward), Some(i), Sequent::new(l.clone(), r.clone(), ctx.clone()));
        self.push(format!("{name}{i}_r"), clause(Dir::Backward), Some(i), Sequent::new(r, l, ctx));
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn restrict(f: &Formula, ctx: &[SortedVar]) -> Vec<SortedVar> {
    let fv = f.free_vars();
    let mut vars: Vec<SortedVar> = ctx.iter().filter(|v| fv.contains(&v.name)).cloned().collect();
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    vars.dedup_by(|a, b| a.name == b.name);
    vars
}

fn omega(f: &Formula) -> Option<&HetBlock> {
    match f {
        Formula::Het(h) if h.length == Length::Omega => Some(h),
        _ => None,
    }
}

/// The subformula set S: subformulas of every axiom side plus tails of the
/// ω-blocks, each with the context it occurs in.
fn subformulas(th: &Theory) -> Result<Vec<(Formula, Vec<SortedVar>)>> {
    let mut out: Vec<(Formula, Vec<SortedVar>)> = Vec::new();
    for ax in &th.axioms {
        for side in [&ax.sequent.antecedent, &ax.sequent.succedent] {
            let mut err = None;
            collect_with_context(side, &ax.sequent.context, &mut |f, ctx| {
                if let Some(h) = omega(f) {
                    if h.bounds.is_some() {
                        err = Some(Error::Semantic(format!("bounded ω-blocks are not Morleyized: {f}")));
                    }
                }
                out.push((f.clone(), ctx.to_vec()));
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    let mut tails = Vec::new();
    for (f, ctx) in &out {
        let Some(h) = omega(f) else { continue };
        let mut cur = f.clone();
        let mut ctx = ctx.clone();
        for _ in 0..TAIL_DEPTH {
            let Formula::Het(ch) = &cur else { break };
            let (x0, _) = stage_variables(&cur, ch, 1);
            ctx.extend(x0.into_iter().flatten());
            cur = tail_block(&cur, 1)?;
            tails.push((cur.clone(), ctx.clone()));
        }
        let _ = h;
    }
    out.extend(tails);
    Ok(out)
}

fn morleyize(th: &Theory, intuitionistic: bool) -> Result<MorleyizedTheory> {
    let mut src = th.clone();
    for ax in &mut src.axioms {
        ax.sequent.antecedent = map_finite(&ax.sequent.antecedent)?;
        ax.sequent.succedent = map_finite(&ax.sequent.succedent)?;
    }
    let mut mt = MorleyizedTheory {
        theory: Theory { signature: th.signature.clone(), axioms: Vec::new(), class: th.class.clone(), mode: th.mode },
        source: src.clone(),
        entries: Vec::new(),
        clauses: BTreeMap::new(),
        index: BTreeMap::new(),
    };
    let set = subformulas(&src)?;
    let mut ids = Vec::new();
    for (f, ctx) in &set {
        ids.push(mt.add(f, ctx)?);
    }
    let mut done = vec![false; mt.entries.len()];
    for (n, (f, ctx)) in set.iter().enumerate() {
        let i = ids[n];
        if done[i] {
            continue;
        }
        done[i] = true;
        let vars = mt.entries[i].vars.clone();
        let (c, d) = (mt.atom(i, true), mt.atom(i, false));
        if !intuitionistic || omega(f).is_some() {
            mt.push(format!("disjoint{i}"), Clause::Disjoint, Some(i), Sequent::new(Formula::And(vec![c.clone(), d.clone()]), Formula::Bottom, vars.clone()));
            mt.push(format!("cover{i}"), Clause::Cover, Some(i), Sequent::new(Formula::Top, Formula::Or(vec![c.clone(), d.clone()]), vars.clone()));
        }
        let sub = |g: &Formula, inner: &[SortedVar], mt: &MorleyizedTheory| {
            let e = mt.entry_in(g, inner).expect("subformula in S");
            mt.index[&key(&e.formula, &e.vars)]
        };
        match f {
            Formula::Atom(..) | Formula::Eq(..) => mt.both("atom", i, Clause::Atom, c, f.clone()),
            Formula::Top => mt.both("and", i, Clause::AndD, d, Formula::Bottom),
            Formula::Bottom => mt.both("or", i, Clause::OrC, c, Formula::Bottom),
            Formula::And(l) => {
                let js: Vec<usize> = l.iter().map(|g| sub(g, ctx, &mt)).collect();
                for (k, &j) in js.iter().enumerate() {
                    let s = Sequent::new(c.clone(), mt.atom(j, true), vars.clone());
                    mt.push(format!("conj{i}_{k}"), Clause::ConjAx(k), Some(i), s);
                }
                let ds = Formula::Or(js.iter().map(|&j| mt.atom(j, false)).collect());
                mt.both("and", i, Clause::AndD, d, ds);
            }
            Formula::Or(l) => {
                let js: Vec<usize> = l.iter().map(|g| sub(g, ctx, &mt)).collect();
                for (k, &j) in js.iter().enumerate() {
                    let s = Sequent::new(mt.atom(j, true), c.clone(), vars.clone());
                    mt.push(format!("disj{i}_{k}"), Clause::DisjAx(k), Some(i), s);
                }
                let cs = Formula::Or(js.iter().map(|&j| mt.atom(j, true)).collect());
                mt.both("or", i, Clause::OrC, c, cs);
            }
            Formula::Implies(a, b) if !intuitionistic => {
                let (ja, jb) = (sub(a, ctx, &mt), sub(b, ctx, &mt));
                let r = Formula::Or(vec![mt.atom(ja, false), mt.atom(jb, true)]);
                mt.both("imp", i, Clause::ImpC, c, r);
            }
            Formula::Exists(ys, b) => {
                let inner = crate::syntax::extend_context(ctx, ys);
                let j = sub(b, &inner, &mt);
                let r = Formula::Exists(ys.clone(), Box::new(mt.atom(j, true)));
                mt.both("ex", i, Clause::ExistsC, c, r);
            }
            Formula::Forall(ys, b) if !intuitionistic => {
                let inner = crate::syntax::extend_context(ctx, ys);
                let j = sub(b, &inner, &mt);
                let r = Formula::Exists(ys.clone(), Box::new(mt.atom(j, false)));
                mt.both("all", i, Clause::ForallD, d, r);
            }
            Formula::Het(h) if h.length == Length::Omega => {
                if !formula_in_class(f, &th.class) {
                    return Err(Error::Semantic(format!("heterogeneous formula outside classC: {f}")));
                }
                let (x0, _) = stage_variables(f, h, 1);
                let x0 = x0.into_iter().flatten().collect::<Vec<_>>();
                let tail = tail_block(f, 1)?;
                let inner = crate::syntax::extend_context(ctx, &x0);
                if let Some(e) = mt.entry_in(&tail, &inner) {
                    let j = mt.index[&key(&e.formula, &e.vars)];
                    if h.polarity == Polarity::AE {
                        let r = Formula::Exists(x0, Box::new(mt.atom(j, false)));
                        mt.both("het", i, Clause::HetD, d, r);
                    } else {
                        let r = Formula::Exists(x0, Box::new(mt.atom(j, true)));
                        mt.both("het", i, Clause::HetC, c, r);
                    }
                }
            }
            _ => {}
        }
    }
    for ax in &src.axioms {
        let s = &ax.sequent;
        let a = mt.entry_in(&s.antecedent, &s.context).map(|e| mt.index[&key(&e.formula, &e.vars)]);
        let b = mt.entry_in(&s.succedent, &s.context).map(|e| mt.index[&key(&e.formula, &e.vars)]);
        let (Some(a), Some(b)) = (a, b) else { unreachable!("axiom sides are in S") };
        let seq = Sequent::new(mt.atom(a, true), mt.atom(b, true), s.context.clone());
        mt.push(format!("axiom_{}", ax.name), Clause::Axiom(ax.name.clone()), None, seq);
    }
    Ok(mt)
}

/// Classical Morleyization: partition, atomic, axiom and connective clauses
/// for every member of S.
pub fn morleyize_classical(th: &Theory) -> Result<MorleyizedTheory> {
    if th.mode != Mode::Classical {
        return Err(Error::Semantic("classical Morleyization needs a classical theory".into()));
    }
    morleyize(th, false)
}

/// Intuitionistic Morleyization: partition clauses only for heterogeneous
/// members and no clauses for implication or universal quantification.
pub fn morleyize_intuitionistic(th: &Theory) -> Result<MorleyizedTheory> {
    if th.mode != Mode::Intuitionistic {
        return Err(Error::Semantic("intuitionistic Morleyization needs an intuitionistic theory".into()));
    }
    morleyize(th, true)
}

/// Formulas built from atoms, ⊤, ⊥, ∧, ∨ and ∃ only.
pub fn is_coherent(f: &Formula) -> bool {
    match f {
        Formula::Atom(..) | Formula::Eq(..) | Formula::Top | Formula::Bottom => true,
        Formula::And(l) | Formula::Or(l) => l.iter().all(is_coherent),
        Formula::Exists(_, b) => is_coherent(b),
        _ => false,
    }
}

/// Interprets `C_φ` as φ and `D_φ` as its complement, after checking that
/// `m` is well-determined for the source class; then checks every axiom.
pub fn expand_model(m: &Structure, mt: &MorleyizedTheory) -> Result<Structure> {
    let games = class_games(&mt.source, &[]);
    let rep = check_well_determined(m, &games)?;
    if !(rep.determinacy && rep.preservation) {
        let what = if rep.determinacy { "preservation" } else { "determinacy" };
        return Err(Error::Semantic(format!("structure is not well-determined: {what} fails")));
    }
    let mut out = Structure::new(mt.theory.signature.clone(), m.carriers().clone())?;
    for (r, _) in &m.signature.relations {
        out.set_relation(r, m.relation(r).cloned().unwrap_or_default())?;
    }
    for (g, _) in &m.signature.functions {
        out.set_function(g, m.function(g).cloned().unwrap_or_default())?;
    }
    for e in &mt.entries {
        let mut yes = std::collections::BTreeSet::new();
        let mut no = std::collections::BTreeSet::new();
        for a in m.assignments(&e.vars) {
            let row: Vec<usize> = e.vars.iter().map(|v| a[&v.name]).collect();
            if eval_tarski(m, &e.formula, &a)? {
                yes.insert(row);
            } else {
                no.insert(row);
            }
        }
        out.set_relation(&e.c, yes)?;
        out.set_relation(&e.d, no)?;
    }
    for ax in &mt.theory.axioms {
        let s = &ax.sequent;
        for a in out.assignments(&s.context) {
            if eval_tarski(&out, &s.antecedent, &a)? && !eval_tarski(&out, &s.succedent, &a)? {
                return Err(Error::Semantic(format!("axiom `{}` fails in the expanded model", ax.name)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_structure, parse_theory};

    fn names_of(mt: &MorleyizedTheory, clause: &Clause) -> Vec<String> {
        mt.clauses.iter().filter(|(_, (c, _))| c == clause).map(|(n, _)| n.clone()).collect()
    }

    #[test]
    fn nullary_atoms() {
        let th = parse_theory("rel p; rel q; axiom ax: p |- q;", None).unwrap();
        let mt = morleyize_classical(&th).unwrap();
        assert_eq!(mt.entries.len(), 2);
        let p = mt.entry(&Formula::atom("p", vec![]), &[]).unwrap().clone();
        let q = mt.entry(&Formula::atom("q", vec![]), &[]).unwrap().clone();
        let (cp, dp) = (Formula::atom(&p.c, vec![]), Formula::atom(&p.d, vec![]));
        let has = |a: &Formula, b: &Formula| {
            mt.theory.axioms.iter().any(|x| &x.sequent.antecedent == a && &x.sequent.succedent == b)
        };
        assert!(has(&Formula::And(vec![cp.clone(), dp.clone()]), &Formula::Bottom));
        assert!(has(&Formula::Top, &Formula::Or(vec![cp.clone(), dp])));
        assert!(has(&cp, &Formula::atom("p", vec![])));
        assert!(has(&Formula::atom("p", vec![]), &cp));
        assert!(has(&cp, &Formula::atom(&q.c, vec![])));
        assert!(p.c.starts_with("C#") && p.c.len() == 10);
    }

    #[test]
    fn conjunction_and_forall_clauses() {
        let th = parse_theory("sort s; rel a; rel b; rel P(s); axiom x: and(a, b) |- forall [y:s] P(y);", None).unwrap();
        let mt = morleyize_classical(&th).unwrap();
        let and = mt.entry(&Formula::And(vec![Formula::atom("a", vec![]), Formula::atom("b", vec![])]), &[]).unwrap();
        let want = Formula::Or(vec![
            Formula::atom(&mt.entry(&Formula::atom("a", vec![]), &[]).unwrap().d, vec![]),
            Formula::atom(&mt.entry(&Formula::atom("b", vec![]), &[]).unwrap().d, vec![]),
        ]);
        assert!(mt.theory.axioms.iter().any(|x| x.sequent.antecedent == Formula::atom(&and.d, vec![]) && x.sequent.succedent == want));
        assert_eq!(names_of(&mt, &Clause::ForallD(Dir::Forward)).len(), 1);
        assert!(mt.theory.axioms.iter().all(|x| is_coherent(&x.sequent.antecedent) && is_coherent(&x.sequent.succedent)));
    }

    #[test]
    fn intuitionistic_list() {
        let src = "sort s; rel p; rel q;
            axiom h: p |- hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] };
            axiom i: implies(p, q) |- q; mode intuitionistic;";
        let th = parse_theory(src, None).unwrap();
        let mt = morleyize_intuitionistic(&th).unwrap();
        let disjoint: Vec<usize> = mt
            .clauses
            .values()
            .filter(|(c, _)| *c == Clause::Disjoint)
            .map(|(_, i)| i.unwrap())
            .collect();
        assert!(!disjoint.is_empty());
        assert!(disjoint.iter().all(|&i| omega(&mt.entries[i].formula).is_some()));
        assert!(names_of(&mt, &Clause::ImpC(Dir::Forward)).is_empty());
        assert_eq!(names_of(&mt, &Clause::HetD(Dir::Forward)).len(), 1);
        assert_eq!(names_of(&mt, &Clause::HetC(Dir::Forward)).len(), 1);
    }

    #[test]
    fn expansion_round_trip() {
        let th = parse_theory(
            "sort s; rel p; rel P(s); axiom a: p |- exists [x:s] P(x);
             axiom h: p |- hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] };",
            None,
        )
        .unwrap();
        let mt = morleyize_classical(&th).unwrap();
        let m = parse_structure("carrier s = {0, 1}; table p = {()}; table P = {(1)};", &th.signature).unwrap();
        let x = expand_model(&m, &mt).unwrap();
        for e in &mt.entries {
            let c = x.relation(&e.c).unwrap();
            let d = x.relation(&e.d).unwrap();
            assert!(c.is_disjoint(d));
            assert_eq!(c.len() + d.len(), m.assignments(&e.vars).len());
        }
        let p = mt.entry(&Formula::atom("p", vec![]), &[]).unwrap();
        assert_eq!(x.relation(&p.c).unwrap().len(), 1);
        assert!(x.relation(&p.d).unwrap().is_empty());
    }

    #[test]
    fn reach_class_rejected() {
        let th = parse_theory(
            "sort s; const one : s; rel p; classC clopen;
             axiom h: p |- hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: reach(1)[v0 = one] };",
            None,
        )
        .unwrap();
        let mt = morleyize_classical(&th).unwrap();
        let m = parse_structure("carrier s = {0, 1}; const one = 1; table p = {()};", &th.signature).unwrap();
        let e = expand_model(&m, &mt).unwrap_err();
        assert!(e.to_string().contains("well-determined"), "{e}");
    }
}
