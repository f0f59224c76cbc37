//! Free variables, capture-avoiding substitution and α-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use super::{parse_placeholder, Formula, HetBlock, Payoff, SortedVar, StagePayoff, Term};

pub type Subst = BTreeMap<String, Term>;

pub(super) fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fv_into(f, &mut out);
    out
}

fn fv_into(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Atom(_, args) => args.iter().for_each(|t| t.vars_into(out)),
        Formula::Eq(l, r) => {
            l.vars_into(out);
            r.vars_into(out);
        }
        Formula::Top | Formula::Bottom => {}
        Formula::And(l) | Formula::Or(l) => l.iter().for_each(|g| fv_into(g, out)),
        Formula::Implies(a, b) => {
            fv_into(a, out);
            fv_into(b, out);
        }
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let mut inner = free_vars(b);
            for v in vs {
                inner.remove(&v.name);
            }
            out.extend(inner);
        }
        Formula::Het(h) => out.extend(het_free_vars(h)),
    }
}

fn het_free_vars(h: &HetBlock) -> BTreeSet<String> {
    let bound = h.schedule_vars();
    let mut scoped = BTreeSet::new();
    for b in h.bounds.iter().flatten() {
        fv_into(b, &mut scoped);
    }
    let mut out = BTreeSet::new();
    match &h.payoff {
        Payoff::Body(body) => fv_into(body, &mut scoped),
        Payoff::Stages(p) => {
            for t in &p.templates {
                out.extend(
                    free_vars(t)
                        .into_iter()
                        .filter(|v| parse_placeholder(v).is_none()),
                );
            }
            for mv in &p.history {
                mv.iter().for_each(|t| t.vars_into(&mut out));
            }
        }
    }
    out.extend(scoped.into_iter().filter(|v| !bound.contains(v)));
    out
}

/// `name` primed until it avoids `taken`.
pub fn fresh_name(name: &str, taken: &BTreeSet<String>) -> String {
    let mut cand = format!("{name}'");
    while taken.contains(&cand) || parse_placeholder(&cand).is_some() {
        cand.push('\'');
    }
    cand
}

fn subst_term(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| subst_term(a, s)).collect()),
    }
}

/// Capture-avoiding substitution. Only variables free in `f` are replaced;
/// bound variables clashing with the images are renamed with primes.
pub fn substitute(f: &Formula, s: &Subst) -> Formula {
    let fv = free_vars(f);
    let s: Subst = s
        .iter()
        .filter(|(k, v)| fv.contains(*k) && **v != Term::Var((*k).clone()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if s.is_empty() {
        return f.clone();
    }
    subst_rec(f, &s)
}

fn image_vars(s: &Subst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    s.values().for_each(|t| t.vars_into(&mut out));
    out
}

/// Renames the binder block `vs` away from `avoid`, returning the new block and
/// the renaming to apply underneath.
fn rename_binders(
    vs: &[SortedVar],
    avoid: &BTreeSet<String>,
    taken: &BTreeSet<String>,
) -> (Vec<SortedVar>, Subst) {
    let mut taken = taken.clone();
    taken.extend(avoid.iter().cloned());
    taken.extend(vs.iter().map(|v| v.name.clone()));
    let mut ren = Subst::new();
    let mut out = Vec::with_capacity(vs.len());
    for v in vs {
        if avoid.contains(&v.name) {
            let n = fresh_name(&v.name, &taken);
            taken.insert(n.clone());
            ren.insert(v.name.clone(), Term::Var(n.clone()));
            out.push(SortedVar::new(n, v.sort.clone()));
        } else {
            out.push(v.clone());
        }
    }
    (out, ren)
}

fn subst_rec(f: &Formula, s: &Subst) -> Formula {
    match f {
        Formula::Atom(r, args) => {
            Formula::Atom(r.clone(), args.iter().map(|t| subst_term(t, s)).collect())
        }
        Formula::Eq(l, r) => Formula::Eq(subst_term(l, s), subst_term(r, s)),
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::And(l) => Formula::And(l.iter().map(|g| subst_rec(g, s)).collect()),
        Formula::Or(l) => Formula::Or(l.iter().map(|g| subst_rec(g, s)).collect()),
        Formula::Implies(a, b) => Formula::implies(subst_rec(a, s), subst_rec(b, s)),
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let (vs, body) = subst_under(vs, b, s);
            match f {
                Formula::Exists(..) => Formula::Exists(vs, Box::new(body)),
                _ => Formula::Forall(vs, Box::new(body)),
            }
        }
        Formula::Het(h) => Formula::het(subst_het(h, s)),
    }
}

fn subst_under(vs: &[SortedVar], body: &Formula, s: &Subst) -> (Vec<SortedVar>, Formula) {
    let mut inner = s.clone();
    for v in vs {
        inner.remove(&v.name);
    }
    let fv = free_vars(body);
    inner.retain(|k, _| fv.contains(k));
    if inner.is_empty() {
        return (vs.to_vec(), body.clone());
    }
    let images = image_vars(&inner);
    let avoid: BTreeSet<String> = images
        .iter()
        .filter(|n| vs.iter().any(|v| &v.name == *n))
        .cloned()
        .collect();
    let mut taken = fv.clone();
    taken.extend(images);
    let (vs2, ren) = rename_binders(vs, &avoid, &taken);
    let renamed = if ren.is_empty() {
        body.clone()
    } else {
        subst_rec(body, &ren)
    };
    (vs2, subst_rec(&renamed, &inner))
}

fn subst_het(h: &HetBlock, s: &Subst) -> HetBlock {
    let bound = h.schedule_vars();
    let mut inner = s.clone();
    inner.retain(|k, _| !bound.contains(k));
    let clash: BTreeSet<String> = image_vars(&inner)
        .into_iter()
        .filter(|n| bound.contains(n))
        .collect();
    let mut h = h.clone();
    if !clash.is_empty() {
        if let Payoff::Body(_) = h.payoff {
            let all = h.schedule.concat();
            let mut taken = het_free_vars(&h);
            taken.extend(image_vars(&inner));
            let (renamed, ren) = rename_binders(&all, &clash, &taken);
            let mut it = renamed.into_iter();
            for block in h.schedule.iter_mut() {
                for v in block.iter_mut() {
                    *v = it.next().unwrap();
                }
            }
            if let Some(bs) = h.bounds.as_mut() {
                bs.iter_mut().for_each(|b| *b = subst_rec(b, &ren));
            }
            if let Payoff::Body(b) = &mut h.payoff {
                *b = subst_rec(b, &ren);
            }
        }
    }
    match &mut h.payoff {
        Payoff::Body(b) => *b = substitute(b, &inner),
        Payoff::Stages(p) => {
            inner.retain(|k, _| parse_placeholder(k).is_none());
            p.templates = p.templates.iter().map(|t| substitute(t, &inner)).collect();
            for mv in p.history.iter_mut() {
                mv.iter_mut().for_each(|t| *t = subst_term(t, &inner));
            }
        }
    }
    if let Some(bs) = h.bounds.as_mut() {
        bs.iter_mut().for_each(|b| *b = substitute(b, &inner));
    }
    h
}

/// α-equivalence: equality up to renaming of bound variables (binder sorts must agree).
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    let mut env = Vec::new();
    aeq(a, b, &mut env)
}

type Env = Vec<(String, String)>;

fn lookup<'a>(env: &'a Env, name: &str, left: bool) -> Option<usize> {
    env.iter()
        .rposition(|(l, r)| if left { l == name } else { r == name })
}

fn term_aeq(a: &Term, b: &Term, env: &Env) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (lookup(env, x, true), lookup(env, y, false)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_aeq(x, y, env))
        }
        _ => false,
    }
}

fn binders_aeq(xs: &[SortedVar], ys: &[SortedVar]) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.sort == y.sort)
}

fn aeq(a: &Formula, b: &Formula, env: &mut Env) -> bool {
    match (a, b) {
        (Formula::Atom(r, xs), Formula::Atom(q, ys)) => {
            r == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_aeq(x, y, env))
        }
        (Formula::Eq(l1, r1), Formula::Eq(l2, r2)) => {
            term_aeq(l1, l2, env) && term_aeq(r1, r2, env)
        }
        (Formula::Top, Formula::Top) | (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(xs), Formula::And(ys)) | (Formula::Or(xs), Formula::Or(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| aeq(x, y, env))
        }
        (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            aeq(a1, a2, env) && aeq(b1, b2, env)
        }
        (Formula::Exists(xs, b1), Formula::Exists(ys, b2))
        | (Formula::Forall(xs, b1), Formula::Forall(ys, b2)) => {
            if !binders_aeq(xs, ys) {
                return false;
            }
            let n = env.len();
            env.extend(
                xs.iter()
                    .zip(ys)
                    .map(|(x, y)| (x.name.clone(), y.name.clone())),
            );
            let ok = aeq(b1, b2, env);
            env.truncate(n);
            ok
        }
        (Formula::Het(h1), Formula::Het(h2)) => het_aeq(h1, h2, env),
        _ => false,
    }
}

fn het_aeq(h1: &HetBlock, h2: &HetBlock, env: &mut Env) -> bool {
    if h1.polarity != h2.polarity
        || h1.length != h2.length
        || h1.schedule.len() != h2.schedule.len()
        || !h1
            .schedule
            .iter()
            .zip(&h2.schedule)
            .all(|(x, y)| binders_aeq(x, y))
        || h1.bounds.is_some() != h2.bounds.is_some()
    {
        return false;
    }
    // Payoff templates and history are outside the scope of the schedule binders.
    if let (Payoff::Stages(p1), Payoff::Stages(p2)) = (&h1.payoff, &h2.payoff) {
        if !stages_aeq(p1, p2, env) {
            return false;
        }
    }
    let n = env.len();
    env.extend(
        h1.schedule
            .concat()
            .into_iter()
            .zip(h2.schedule.concat())
            .map(|(x, y)| (x.name, y.name)),
    );
    let mut ok = match (&h1.bounds, &h2.bounds) {
        (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| aeq(x, y, env)),
        _ => true,
    };
    ok = ok
        && match (&h1.payoff, &h2.payoff) {
            (Payoff::Body(a), Payoff::Body(b)) => aeq(a, b, env),
            (Payoff::Stages(_), Payoff::Stages(_)) => true,
            _ => false,
        };
    env.truncate(n);
    ok
}

fn stages_aeq(p1: &StagePayoff, p2: &StagePayoff, env: &mut Env) -> bool {
    p1.kind == p2.kind
        && p1.window == p2.window
        && p1.templates.len() == p2.templates.len()
        && p1.history.len() == p2.history.len()
        && p1
            .templates
            .iter()
            .zip(&p2.templates)
            .all(|(a, b)| aeq(a, b, env))
        && p1
            .history
            .iter()
            .zip(&p2.history)
            .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| term_aeq(x, y, env)))
}

/// Renames every bound variable to a positional name, so α-equivalent
/// formulas become structurally equal.
pub fn canonical(f: &Formula) -> Formula {
    let mut counter = 0;
    canon(f, &mut counter)
}

fn canon_block(vs: &[SortedVar], counter: &mut usize) -> (Vec<SortedVar>, Subst) {
    let mut ren = Subst::new();
    let out = vs
        .iter()
        .map(|v| {
            let n = format!("%{}", *counter);
            *counter += 1;
            ren.insert(v.name.clone(), Term::Var(n.clone()));
            SortedVar::new(n, v.sort.clone())
        })
        .collect();
    (out, ren)
}

fn canon(f: &Formula, counter: &mut usize) -> Formula {
    match f {
        Formula::Atom(..) | Formula::Eq(..) | Formula::Top | Formula::Bottom => f.clone(),
        Formula::And(l) => Formula::And(l.iter().map(|g| canon(g, counter)).collect()),
        Formula::Or(l) => Formula::Or(l.iter().map(|g| canon(g, counter)).collect()),
        Formula::Implies(a, b) => Formula::implies(canon(a, counter), canon(b, counter)),
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let (vs2, ren) = canon_block(vs, counter);
            let body = canon(&subst_rec(b, &ren), counter);
            match f {
                Formula::Exists(..) => Formula::Exists(vs2, Box::new(body)),
                _ => Formula::Forall(vs2, Box::new(body)),
            }
        }
        Formula::Het(h) => {
            let mut h = (**h).clone();
            let (all, ren) = canon_block(&h.schedule.concat(), counter);
            let mut it = all.into_iter();
            for block in h.schedule.iter_mut() {
                for v in block.iter_mut() {
                    *v = it.next().unwrap();
                }
            }
            if let Some(bs) = h.bounds.as_mut() {
                bs.iter_mut()
                    .for_each(|b| *b = canon(&subst_rec(b, &ren), counter));
            }
            match &mut h.payoff {
                Payoff::Body(b) => *b = canon(&subst_rec(b, &ren), counter),
                Payoff::Stages(p) => {
                    p.templates = p.templates.iter().map(|t| canon(t, counter)).collect();
                }
            }
            Formula::het(h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn sv(n: &str) -> SortedVar {
        SortedVar::new(n, "s")
    }

    #[test]
    fn exists_binds() {
        let f = Formula::Exists(
            vec![sv("y")],
            Box::new(Formula::atom("E", vec![v("x"), v("y")])),
        );
        assert_eq!(free_vars(&f), ["x".to_string()].into());
    }

    #[test]
    fn plain_substitution() {
        let f = Formula::eq(v("x"), v("y"));
        let s: Subst = [("x".to_string(), Term::constant("c"))].into();
        assert_eq!(substitute(&f, &s), Formula::eq(Term::constant("c"), v("y")));
    }

    #[test]
    fn capture_avoidance_primes_binder() {
        let f = Formula::Exists(
            vec![sv("y")],
            Box::new(Formula::atom("E", vec![v("x"), v("y")])),
        );
        let s: Subst = [("x".to_string(), v("y"))].into();
        let expected = Formula::Exists(
            vec![sv("y'")],
            Box::new(Formula::atom("E", vec![v("y"), v("y'")])),
        );
        assert_eq!(substitute(&f, &s), expected);
    }

    #[test]
    fn identity_substitution_is_noop() {
        let f = Formula::Forall(
            vec![sv("y")],
            Box::new(Formula::atom("E", vec![v("x"), v("y")])),
        );
        let s: Subst = [("x".to_string(), v("x")), ("y".to_string(), v("y"))].into();
        assert_eq!(substitute(&f, &s), f);
    }

    #[test]
    fn alpha_equivalence() {
        let a = Formula::Exists(
            vec![sv("y")],
            Box::new(Formula::atom("E", vec![v("x"), v("y")])),
        );
        let b = Formula::Exists(
            vec![sv("z")],
            Box::new(Formula::atom("E", vec![v("x"), v("z")])),
        );
        let c = Formula::Exists(
            vec![sv("x")],
            Box::new(Formula::atom("E", vec![v("x"), v("x")])),
        );
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &c));
        assert_eq!(canonical(&a), canonical(&b));
        let d = Formula::Exists(
            vec![SortedVar::new("y", "t")],
            Box::new(Formula::atom("E", vec![v("x"), v("y")])),
        );
        assert!(!alpha_eq(&a, &d));
    }
}
