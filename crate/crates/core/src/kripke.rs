//! Kripke models and the forcing relation, heterogeneous clauses included.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::game::{check_well_determined, class_games, eval_het_with, CertifyReport};
use crate::parse::KripkeSource;
use crate::structure::{eval_tarski, Assignment, Elem, Structure};
use crate::syntax::{
    desugar_finite_block, extend_context, parse_placeholder, Formula, Length, Payoff, Signature,
    SortedVar, Theory,
};

/// Per-sort element maps of a transition homomorphism.
pub type Hom = BTreeMap<String, Vec<Elem>>;

#[derive(Clone, Debug)]
pub struct KripkeModel {
    pub signature: Signature,
    pub nodes: Vec<String>,
    pub structures: Vec<Structure>,
    leq: Vec<Vec<bool>>,
    maps: BTreeMap<(usize, usize), Hom>,
    /// Pairs whose maps disagree along different paths.
    conflicts: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct KripkeReport {
    pub violations: Vec<String>,
    pub nodes: Vec<(String, CertifyReport)>,
}

impl KripkeReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

fn identity(m: &Structure) -> Hom {
    m.signature.sorts.iter().map(|s| (s.clone(), (0..m.size(s)).collect())).collect()
}

fn compose(f: &Hom, g: &Hom) -> Hom {
    f.iter().map(|(s, v)| (s.clone(), v.iter().map(|&e| g[s][e]).collect())).collect()
}

impl KripkeModel {
    /// Assembles a model: reflexive-transitive order, declared maps, and
    /// composites along chains. An order pair without a declared map uses
    /// the inclusion by element name.
    pub fn from_source(src: KripkeSource, sig: &Signature) -> Result<Self> {
        let n = src.nodes.len();
        let idx = |name: &str| {
            src.nodes
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::Semantic(format!("unknown node `{name}`")))
        };
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        let mut direct = Vec::new();
        for (a, b) in &src.order {
            let (i, j) = (idx(a)?, idx(b)?);
            leq[i][j] = true;
            direct.push((i, j));
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if leq[i][k] && leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(Error::Semantic(format!(
                        "order is not antisymmetric: `{}` and `{}` lie below each other",
                        src.nodes[i], src.nodes[j]
                    )));
                }
            }
        }
        let structures: Vec<Structure> = src.nodes.iter().map(|x| src.structures[x].clone()).collect();
        let mut maps: BTreeMap<(usize, usize), Hom> = BTreeMap::new();
        let mut declared: BTreeMap<(usize, usize), BTreeMap<String, BTreeMap<Elem, Elem>>> = BTreeMap::new();
        for d in &src.maps {
            let (i, j) = (idx(&d.from)?, idx(&d.to)?);
            if !leq[i][j] {
                return Err(Error::Semantic(format!("map {}->{} is not along the order", d.from, d.to)));
            }
            let (mp, mq) = (&structures[i], &structures[j]);
            let entry = declared.entry((i, j)).or_default();
            for (a, b) in &d.pairs {
                let sorts: Vec<&String> = match &d.sort {
                    Some(s) => vec![s],
                    None => sig.sorts.iter().filter(|s| mp.elem(s, a).is_some()).collect(),
                };
                if sorts.is_empty() {
                    return Err(Error::Semantic(format!("`{a}` is not an element of node `{}`", d.from)));
                }
                for s in sorts {
                    let (Some(x), Some(y)) = (mp.elem(s, a), mq.elem(s, b)) else {
                        return Err(Error::Semantic(format!(
                            "map {}->{}: `{a}` or `{b}` is not an element of sort {s}",
                            d.from, d.to
                        )));
                    };
                    if entry.entry(s.clone()).or_default().insert(x, y).is_some_and(|old| old != y) {
                        return Err(Error::Semantic(format!("map {}->{} sends `{a}` twice", d.from, d.to)));
                    }
                }
            }
        }
        for (&(i, j), per) in &declared {
            let mut h = Hom::new();
            for s in &sig.sorts {
                let table = per.get(s);
                let mut v = Vec::new();
                for e in 0..structures[i].size(s) {
                    let img = match table {
                        Some(t) => t.get(&e).copied(),
                        None => structures[j].elem(s, structures[i].elem_name(s, e)),
                    };
                    let img = img.ok_or_else(|| {
                        Error::Semantic(format!(
                            "map {}->{} is not total on sort {s}",
                            src.nodes[i], src.nodes[j]
                        ))
                    })?;
                    v.push(img);
                }
                h.insert(s.clone(), v);
            }
            maps.insert((i, j), h);
        }
        for &(i, j) in &direct {
            if !maps.contains_key(&(i, j)) {
                let mut h = Hom::new();
                for s in &sig.sorts {
                    let v = (0..structures[i].size(s))
                        .map(|e| structures[j].elem(s, structures[i].elem_name(s, e)))
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| {
                            Error::Semantic(format!(
                                "no map {}->{} and the carriers of sort {s} are not included by name",
                                src.nodes[i], src.nodes[j]
                            ))
                        })?;
                    h.insert(s.clone(), v);
                }
                maps.insert((i, j), h);
            }
        }
        let mut conflicts = Vec::new();
        for (i, m) in structures.iter().enumerate() {
            match maps.get(&(i, i)) {
                Some(h) if *h != identity(m) => {
                    conflicts.push(format!("map {0}->{0} is not the identity", src.nodes[i]))
                }
                _ => {
                    maps.insert((i, i), identity(m));
                }
            }
        }
        loop {
            let mut changed = false;
            let known: Vec<((usize, usize), Hom)> = maps.iter().map(|(k, v)| (*k, v.clone())).collect();
            for ((i, j), f) in &known {
                for ((j2, k), g) in &known {
                    if j != j2 || i == j || j == k {
                        continue;
                    }
                    let c = compose(f, g);
                    match maps.get(&(*i, *k)) {
                        Some(h) if *h != c => {
                            let msg = format!(
                                "maps do not commute: {0}->{1}->{2} differs from {0}->{2}",
                                src.nodes[*i], src.nodes[*j], src.nodes[*k]
                            );
                            if !conflicts.contains(&msg) {
                                conflicts.push(msg);
                            }
                        }
                        Some(_) => {}
                        None => {
                            maps.insert((*i, *k), c);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(KripkeModel { signature: sig.clone(), nodes: src.nodes, structures, leq, maps, conflicts })
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|x| x == name)
    }

    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.leq[p][q]
    }

    /// Nodes `q ≥ p`.
    pub fn above(&self, p: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&q| self.leq[p][q]).collect()
    }

    pub fn map(&self, p: usize, q: usize) -> Option<&Hom> {
        self.maps.get(&(p, q))
    }

    /// Moves an assignment at `p` along `h_pq`.
    pub fn transport(&self, p: usize, q: usize, ctx: &[SortedVar], a: &Assignment) -> Assignment {
        let h = &self.maps[&(p, q)];
        let mut out = a.clone();
        for v in ctx {
            if let Some(e) = a.get(&v.name) {
                out.insert(v.name.clone(), h[&v.sort][*e]);
            }
        }
        out
    }

    fn homomorphism_violations(&self, p: usize, q: usize) -> Vec<String> {
        let (mp, mq) = (&self.structures[p], &self.structures[q]);
        let h = &self.maps[&(p, q)];
        let name = format!("{}->{}", self.nodes[p], self.nodes[q]);
        let mut out = Vec::new();
        for (r, sorts) in &self.signature.relations {
            for t in mp.relation(r).into_iter().flatten() {
                let img: Vec<Elem> = t.iter().zip(sorts).map(|(&e, s)| h[s][e]).collect();
                if !mq.relation(r).is_some_and(|rel| rel.contains(&img)) {
                    out.push(format!("map {name} does not preserve `{r}`"));
                    break;
                }
            }
        }
        for (g, (args, res)) in &self.signature.functions {
            let (Some(fp), Some(fq)) = (mp.function(g), mq.function(g)) else { continue };
            let bad = fp.iter().any(|(xs, y)| {
                let img: Vec<Elem> = xs.iter().zip(args).map(|(&e, s)| h[s][e]).collect();
                fq.get(&img) != Some(&h[res][*y])
            });
            if bad {
                out.push(format!("map {name} does not commute with `{g}`"));
            }
        }
        out
    }
}

/// Checks functoriality, the homomorphism condition on every map, and that
/// every node structure is well-determined for the games of `th`.
pub fn check_kripke_model(k: &KripkeModel, th: &Theory) -> Result<KripkeReport> {
    let mut violations = k.conflicts.clone();
    for &(p, q) in k.maps.keys() {
        if p != q {
            violations.extend(k.homomorphism_violations(p, q));
        }
    }
    let games = class_games(th, &[]);
    let mut nodes = Vec::new();
    for (p, m) in k.structures.iter().enumerate() {
        let rep = check_well_determined(m, &games)?;
        if !rep.well_determined {
            let what = if rep.determinacy { "preservation" } else { "determinacy" };
            violations.push(format!("node `{}` is not well-determined: {what} fails", k.nodes[p]));
        }
        nodes.push((k.nodes[p].clone(), rep));
    }
    Ok(KripkeReport { violations, nodes })
}

fn check_assignment(m: &Structure, ctx: &[SortedVar], a: &Assignment) -> Result<()> {
    for v in ctx {
        match a.get(&v.name) {
            Some(&e) if e < m.size(&v.sort) => {}
            Some(_) => return Err(Error::Semantic(format!("`{}` is not an element of sort {}", v.name, v.sort))),
            None => return Err(Error::Semantic(format!("`{}` is unassigned", v.name))),
        }
    }
    Ok(())
}

/// `p ⊩ f[a]`, with `ctx` giving the sorts of the assigned variables.
pub fn force(k: &KripkeModel, p: usize, f: &Formula, ctx: &[SortedVar], a: &Assignment) -> Result<bool> {
    check_assignment(&k.structures[p], ctx, a)?;
    force_at(k, p, f, ctx, a)
}

fn force_at(k: &KripkeModel, p: usize, f: &Formula, ctx: &[SortedVar], a: &Assignment) -> Result<bool> {
    let m = &k.structures[p];
    Ok(match f {
        Formula::Atom(..) | Formula::Eq(..) | Formula::Top | Formula::Bottom => eval_tarski(m, f, a)?,
        Formula::And(l) => {
            for g in l {
                if !force_at(k, p, g, ctx, a)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(l) => {
            for g in l {
                if force_at(k, p, g, ctx, a)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(l, r) => {
            for q in k.above(p) {
                let b = k.transport(p, q, ctx, a);
                if force_at(k, q, l, ctx, &b)? && !force_at(k, q, r, ctx, &b)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Exists(ys, body) => {
            let inner = extend_context(ctx, ys);
            for b in m.assignments(ys) {
                let mut c = a.clone();
                c.extend(b);
                if force_at(k, p, body, &inner, &c)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Forall(ys, body) => {
            let inner = extend_context(ctx, ys);
            for q in k.above(p) {
                let moved = k.transport(p, q, ctx, a);
                for b in k.structures[q].assignments(ys) {
                    let mut c = moved.clone();
                    c.extend(b);
                    if !force_at(k, q, body, &inner, &c)? {
                        return Ok(false);
                    }
                }
            }
            true
        }
        Formula::Het(h) if h.length != Length::Omega => force_at(k, p, &desugar_finite_block(f)?, ctx, a)?,
        Formula::Het(h) => {
            // sorts of everything a stage test may see
            let mut base: BTreeMap<String, String> = ctx.iter().map(|v| (v.name.clone(), v.sort.clone())).collect();
            for v in h.schedule.iter().flatten() {
                base.insert(v.name.clone(), v.sort.clone());
            }
            let mut slots: Vec<(Formula, BTreeMap<String, String>)> = Vec::new();
            if let Payoff::Stages(sp) = &h.payoff {
                for (i, t) in sp.templates.iter().enumerate() {
                    let sorts = h.placeholder_sorts(i).map_err(Error::IllFormed)?;
                    let mut names = base.clone();
                    for v in t.free_vars() {
                        if let Some(ij) = parse_placeholder(&v) {
                            if let Some(s) = sorts.get(&ij) {
                                names.insert(v, s.clone());
                            }
                        }
                    }
                    slots.push((t.clone(), names));
                }
            }
            let test = |t: &Formula, b: &Assignment| -> Result<bool> {
                let names = slots.iter().find(|(u, _)| u == t).map_or(&base, |(_, n)| n);
                let ctx: Vec<SortedVar> = b
                    .keys()
                    .filter_map(|v| names.get(v).map(|s| SortedVar::new(v.clone(), s.clone())))
                    .collect();
                force_at(k, p, t, &ctx, b)
            };
            eval_het_with(m, f, a, &test)?
        }
    })
}

/// Node names with the order pairs `p < q` (reflexive pairs omitted).
pub fn order_pairs(k: &KripkeModel) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for p in 0..k.nodes.len() {
        for q in k.above(p) {
            if p != q {
                out.insert((k.nodes[p].clone(), k.nodes[q].clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::eval_het;
    use crate::parse::{parse_formula_in, parse_kripke, parse_theory};

    const SIG: &str = "sort s; rel p; rel P(s); const one : s;";
    const COPYCAT: &str = "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";

    fn model(text: &str) -> (Theory, KripkeModel) {
        let th = parse_theory(SIG, None).unwrap();
        let src = parse_kripke(text, &th.signature).unwrap();
        let k = KripkeModel::from_source(src, &th.signature).unwrap();
        (th, k)
    }

    fn f(th: &Theory, s: &str) -> Formula {
        parse_formula_in(s, &th.signature, &[]).unwrap()
    }

    const CHAIN: &str = "node r, t; order r < t;
        structure r { carrier s = {0, 1}; const one = 1; table p = {}; table P = {}; }
        structure t { carrier s = {0, 1}; const one = 1; table p = {()}; table P = {(1)}; }";

    #[test]
    fn excluded_middle_fails_at_root() {
        let (th, k) = model(CHAIN);
        assert!(check_kripke_model(&k, &th).unwrap().accepted());
        let em = f(&th, "or(p, not(p))");
        assert!(!force(&k, 0, &em, &[], &Assignment::new()).unwrap());
        assert!(force(&k, 1, &em, &[], &Assignment::new()).unwrap());
        assert!(force(&k, 0, &f(&th, "not(not(p))"), &[], &Assignment::new()).unwrap());
    }

    #[test]
    fn one_node_collapse() {
        let (th, k) = model("node a; structure a { carrier s = {0, 1}; const one = 1; table p = {()}; table P = {(0)}; }");
        for s in ["forall [x:s] P(x)", "exists [x:s] implies(P(x), p)", "or(p, not(p))"] {
            let g = f(&th, s);
            assert_eq!(force(&k, 0, &g, &[], &Assignment::new()).unwrap(), eval_tarski(&k.structures[0], &g, &Assignment::new()).unwrap(), "{s}");
        }
        let c = f(&th, COPYCAT);
        assert_eq!(force(&k, 0, &c, &[], &Assignment::new()).unwrap(), eval_het(&k.structures[0], &c, &Assignment::new()).unwrap());
    }

    #[test]
    fn copycat_forced_everywhere() {
        let (th, k) = model(CHAIN);
        let c = f(&th, COPYCAT);
        assert!(force(&k, 0, &c, &[], &Assignment::new()).unwrap());
        assert!(force(&k, 1, &c, &[], &Assignment::new()).unwrap());
    }

    #[test]
    fn non_commuting_maps() {
        let (th, k) = model(
            "node a, b, c; order a < b, b < c, a < c;
             structure a { carrier s = {0}; const one = 0; table p = {}; table P = {}; }
             structure b { carrier s = {0}; const one = 0; table p = {}; table P = {}; }
             structure c { carrier s = {0, 1}; const one = 0; table p = {}; table P = {}; }
             map a -> c : s = {0 -> 1};",
        );
        let rep = check_kripke_model(&k, &th).unwrap();
        assert!(rep.violations.iter().any(|v| v.contains("commute")), "{:?}", rep.violations);
    }

    #[test]
    fn homomorphism_required() {
        let (th, k) = model(
            "node a, b; order a < b;
             structure a { carrier s = {0}; const one = 0; table p = {()}; table P = {}; }
             structure b { carrier s = {0}; const one = 0; table p = {}; table P = {}; }",
        );
        let rep = check_kripke_model(&k, &th).unwrap();
        assert!(rep.violations.iter().any(|v| v.contains("preserve `p`")));
    }

    #[test]
    fn assignment_errors() {
        let (th, k) = model(CHAIN);
        let g = parse_formula_in("P(x)", &th.signature, &[SortedVar::new("x", "s")]).unwrap();
        let ctx = [SortedVar::new("x", "s")];
        assert!(force(&k, 0, &g, &ctx, &Assignment::new()).is_err());
        let a: Assignment = [("x".to_string(), 5)].into();
        assert!(force(&k, 0, &g, &ctx, &a).is_err());
    }

    #[test]
    fn reach_node_rejected() {
        let th = parse_theory(
            "sort s; rel p; rel P(s); const one : s; classC clopen;
             axiom h: p |- hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: reach(1)[v0 = one] };",
            None,
        )
        .unwrap();
        let src = parse_kripke(
            "node a; structure a { carrier s = {0, 1}; const one = 1; table p = {()}; table P = {}; }",
            &th.signature,
        )
        .unwrap();
        let k = KripkeModel::from_source(src, &th.signature).unwrap();
        let rep = check_kripke_model(&k, &th).unwrap();
        assert!(rep.violations.iter().any(|v| v.contains("not well-determined")), "{:?}", rep.violations);
    }
}
