use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::parse::{parse_formula, resolve_constants, Parser, Value};
use crate::syntax::{
    alpha_eq, check_sequent, substitute, Formula, Mode, Sequent, Signature, SortedVar, Subst, Term,
    Theory,
};

use super::{axiom_instance, InstanceData, ProofTree, RuleTag};

/// Why a proof was rejected: the failing node's premise-index path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub path: Vec<usize>,
    pub rule: RuleTag,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {:?} ({}): {}", self.path, self.rule, self.reason)
    }
}

impl std::error::Error for Rejection {}

type Check = std::result::Result<(), String>;

fn fail<T>(msg: impl Into<String>) -> std::result::Result<T, String> {
    Err(msg.into())
}

fn names(ctx: &[SortedVar]) -> BTreeSet<String> {
    ctx.iter().map(|v| v.name.clone()).collect()
}

fn same_ctx(a: &[SortedVar], b: &[SortedVar]) -> bool {
    a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
}

fn expect(cond: bool, msg: &str) -> Check {
    if cond {
        Ok(())
    } else {
        fail(msg)
    }
}

fn premises(node: &ProofTree, n: usize) -> Check {
    if node.premises.len() == n {
        Ok(())
    } else {
        fail(format!(
            "expected {n} premise(s), found {}",
            node.premises.len()
        ))
    }
}

fn same_sequent(a: &Sequent, b: &Sequent) -> bool {
    alpha_eq(&a.antecedent, &b.antecedent)
        && alpha_eq(&a.succedent, &b.succedent)
        && same_ctx(&a.context, &b.context)
}

fn resolve_term(t: &Term, sig: &Signature, bound: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(v) if !bound.contains(v) && sig.is_constant(v) => Term::constant(v.clone()),
        Term::Var(_) => t.clone(),
        Term::App(g, args) => Term::App(
            g.clone(),
            args.iter().map(|a| resolve_term(a, sig, bound)).collect(),
        ),
    }
}

struct Params<'a> {
    node: &'a ProofTree,
    sig: &'a Signature,
    bound: BTreeSet<String>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.node.params.get(key)
    }

    fn text(v: &Value) -> std::result::Result<&str, String> {
        match v {
            Value::Str(s) | Value::Ident(s) => Ok(s),
            _ => fail("expected a string"),
        }
    }

    fn formula(&self, key: &str) -> std::result::Result<Option<Formula>, String> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        self.formula_of(v)
            .map(Some)
            .map_err(|e| format!("parameter `{key}`: {e}"))
    }

    fn formula_of(&self, v: &Value) -> std::result::Result<Formula, String> {
        let f = parse_formula(Self::text(v)?).map_err(|e| e.to_string())?;
        Ok(resolve_constants(&f, self.sig, &self.bound))
    }

    fn term_of(&self, v: &Value) -> std::result::Result<Term, String> {
        let mut p = Parser::new(Self::text(v)?).map_err(|e| e.to_string())?;
        let t = p.term().map_err(|e| e.to_string())?;
        p.finish().map_err(|e| e.to_string())?;
        Ok(resolve_term(&t, self.sig, &self.bound))
    }

    fn list(&self, key: &str) -> std::result::Result<Vec<Value>, String> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(Value::List(l)) => Ok(l.clone()),
            Some(_) => fail(format!("parameter `{key}` must be a list")),
        }
    }

    fn names(&self, key: &str) -> std::result::Result<Vec<String>, String> {
        self.list(key)?
            .iter()
            .map(|v| Self::text(v).map(str::to_string))
            .collect()
    }

    fn moves(&self, key: &str) -> std::result::Result<Vec<Vec<Term>>, String> {
        self.list(key)?
            .iter()
            .map(|mv| match mv {
                Value::List(ts) => ts.iter().map(|t| self.term_of(t)).collect(),
                t => Ok(vec![self.term_of(t)?]),
            })
            .collect()
    }
}

fn term_sort(t: &Term, ctx: &[SortedVar], sig: &Signature) -> Option<String> {
    match t {
        Term::Var(v) => ctx.iter().find(|w| &w.name == v).map(|w| w.sort.clone()),
        Term::App(g, _) => sig.functions.get(g).map(|(_, r)| r.clone()),
    }
}

fn substitution(node: &ProofTree, ps: &Params<'_>) -> Check {
    premises(node, 1)?;
    let (p, c) = (&node.premises[0].conclusion, &node.conclusion);
    let mut s = Subst::new();
    for entry in ps.list("subst")? {
        let Value::List(pair) = &entry else {
            return fail("`subst` entries are [variable, term] pairs");
        };
        let [x, t] = pair.as_slice() else {
            return fail("`subst` entries are [variable, term] pairs");
        };
        let x = Params::text(x)?.to_string();
        if p.sort_of(&x).is_none() {
            return fail(format!("`{x}` is not in the premise context"));
        }
        s.insert(x, ps.term_of(t)?);
    }
    for v in &p.context {
        let t = s
            .entry(v.name.clone())
            .or_insert_with(|| Term::var(&v.name))
            .clone();
        for u in t.vars() {
            if c.sort_of(&u).is_none() {
                return fail(format!(
                    "variable `{u}` of the substituted terms is missing from the context"
                ));
            }
        }
        if term_sort(&t, &c.context, ps.sig).as_deref() != Some(v.sort.as_str()) {
            return fail(format!(
                "term substituted for `{}` does not have sort {}",
                v.name, v.sort
            ));
        }
    }
    expect(
        alpha_eq(&c.antecedent, &substitute(&p.antecedent, &s)),
        "antecedent is not the substitution instance",
    )?;
    expect(
        alpha_eq(&c.succedent, &substitute(&p.succedent, &s)),
        "succedent is not the substitution instance",
    )
}

fn eq_subst(node: &ProofTree, ps: &Params<'_>) -> Check {
    let c = &node.conclusion;
    let phi = ps.formula("phi")?.ok_or("missing `phi`")?;
    let (w, x, y) = (ps.names("w")?, ps.names("x")?, ps.names("y")?);
    expect(
        w.len() == x.len() && x.len() == y.len(),
        "`w`, `x`, `y` must have the same length",
    )?;
    expect(
        w.iter().collect::<BTreeSet<_>>().len() == w.len(),
        "`w` must be distinct variables",
    )?;
    let mut sx = Subst::new();
    let mut sy = Subst::new();
    let mut eqs = Vec::new();
    for ((w, x), y) in w.iter().zip(&x).zip(&y) {
        let (Some(a), Some(b)) = (c.sort_of(x), c.sort_of(y)) else {
            return fail(format!("`{x}` and `{y}` must be in the context"));
        };
        expect(a == b, "`x` and `y` must have the same type")?;
        sx.insert(w.clone(), Term::var(x));
        sy.insert(w.clone(), Term::var(y));
        eqs.push(Formula::eq(Term::var(x), Term::var(y)));
    }
    eqs.push(substitute(&phi, &sx));
    expect(
        alpha_eq(&c.antecedent, &Formula::And(eqs)),
        "antecedent is not (x = y) ∧ φ[x/w]",
    )?;
    expect(
        alpha_eq(&c.succedent, &substitute(&phi, &sy)),
        "succedent is not φ[y/w]",
    )
}

/// Pairs every item with a distinct premise satisfying `ok`.
fn bijection<T>(items: &[T], node: &ProofTree, ok: impl Fn(&T, &Sequent) -> bool) -> Check {
    premises(node, items.len())?;
    let mut used = vec![false; items.len()];
    for (k, p) in node.premises.iter().enumerate() {
        let hit = (0..items.len()).find(|&i| !used[i] && ok(&items[i], &p.conclusion));
        match hit {
            Some(i) => used[i] = true,
            None => {
                return fail(format!(
                    "premise {k} matches no component of the conclusion"
                ))
            }
        }
    }
    Ok(())
}

fn quantifier(node: &ProofTree, exists: bool, downward: bool) -> Check {
    premises(node, 1)?;
    let (p, c) = (&node.premises[0].conclusion, &node.conclusion);
    // `narrow` has context x, `wide` has context x y
    let (narrow, wide) = if downward { (c, p) } else { (p, c) };
    let (quantified, other_n, other_w) = if exists {
        (&narrow.antecedent, &narrow.succedent, &wide.succedent)
    } else {
        (&narrow.succedent, &narrow.antecedent, &wide.antecedent)
    };
    let (ys, body) = match (quantified, exists) {
        (Formula::Exists(ys, b), true) | (Formula::Forall(ys, b), false) => (ys, b),
        _ => {
            return fail(if exists {
                "expected ∃y φ in the antecedent"
            } else {
                "expected ∀y ψ in the succedent"
            })
        }
    };
    let inner = if exists {
        &wide.antecedent
    } else {
        &wide.succedent
    };
    expect(alpha_eq(body, inner), "quantifier body does not match")?;
    expect(
        alpha_eq(other_n, other_w),
        "the side formula must be unchanged",
    )?;
    let xs = names(&narrow.context);
    expect(
        ys.iter().all(|y| !xs.contains(&y.name)),
        "quantified variables must not be in the context x",
    )?;
    let mut want = narrow.context.clone();
    want.extend(ys.iter().cloned());
    expect(
        same_ctx(&want, &wide.context),
        "context must be x extended by the quantified variables",
    )?;
    let fv = other_n.free_vars();
    if let Some(y) = ys.iter().find(|y| fv.contains(&y.name)) {
        let side = if exists { "ψ" } else { "φ" };
        return fail(format!("variable `{}` is free in {side}", y.name));
    }
    Ok(())
}

struct TtNode {
    vars: Vec<SortedVar>,
    phi: Formula,
}

fn sorted_var(text: &str) -> std::result::Result<SortedVar, String> {
    let (n, s) = text
        .split_once(':')
        .ok_or_else(|| format!("expected `name:sort`, found `{text}`"))?;
    Ok(SortedVar::new(n.trim(), s.trim()))
}

fn tt_rule(node: &ProofTree, ps: &Params<'_>) -> Check {
    let mut tree: BTreeMap<Vec<usize>, TtNode> = BTreeMap::new();
    for entry in ps.list("nodes")? {
        let Value::List(parts) = &entry else {
            return fail("`nodes` entries are [path, vars, formula]");
        };
        let [Value::List(path), Value::List(vars), phi] = parts.as_slice() else {
            return fail("`nodes` entries are [path, vars, formula]");
        };
        let path = path
            .iter()
            .map(|v| match v {
                Value::Num(n) => Ok(*n),
                _ => fail("paths are lists of numbers"),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let vars = vars
            .iter()
            .map(|v| sorted_var(Params::text(v)?))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let phi = ps.formula_of(phi)?;
        if tree.insert(path.clone(), TtNode { vars, phi }).is_some() {
            return fail(format!("duplicate node {path:?}"));
        }
    }
    let root = tree
        .get(&Vec::new())
        .ok_or("the tree needs a root node []")?;
    expect(root.vars.is_empty(), "the root binds no variables")?;
    let mut children: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (path, n) in &tree {
        let Some((last, parent)) = path.split_last() else {
            continue;
        };
        let up = tree
            .get(parent)
            .ok_or_else(|| format!("node {path:?} has no parent"))?;
        children.entry(parent.to_vec()).or_default().push(*last);
        let fv_up = up.phi.free_vars();
        let mut want = fv_up.clone();
        want.extend(n.vars.iter().map(|v| v.name.clone()));
        if n.phi.free_vars() != want {
            return fail(format!(
                "FV condition fails at {path:?}: FV(φ_f) must be FV(φ_parent) ∪ x_f"
            ));
        }
        if n.vars.iter().any(|v| fv_up.contains(&v.name)) {
            return fail(format!("x_f at {path:?} clashes with FV(φ_parent)"));
        }
    }
    let gamma = children.values().map(Vec::len).max().unwrap_or(0);
    for (path, ks) in &children {
        if *ks != (0..gamma).collect::<Vec<_>>() {
            return fail(format!("node {path:?} must have children 0..{gamma}"));
        }
    }
    let mut expected = Vec::new();
    for (path, ks) in &children {
        let f = &tree[path];
        let disj = ks
            .iter()
            .map(|k| {
                let mut q = path.clone();
                q.push(*k);
                let g = &tree[&q];
                Formula::exists(g.vars.clone(), g.phi.clone())
            })
            .collect();
        expected.push((f.phi.clone(), Formula::or_flat(disj)));
    }
    bijection(&expected, node, |(a, s), p| {
        alpha_eq(a, &p.antecedent)
            && alpha_eq(s, &p.succedent)
            && names(&p.context) == a.free_vars()
    })?;
    let mut bar = Vec::new();
    for path in tree.keys().filter(|p| !children.contains_key(*p)) {
        let mut vars = Vec::new();
        let mut conj = Vec::new();
        for d in 1..=path.len() {
            let n = &tree[&path[..d].to_vec()];
            vars.extend(n.vars.iter().cloned());
            conj.push(n.phi.clone());
        }
        bar.push(Formula::exists(vars, Formula::and_flat(conj)));
    }
    let c = &node.conclusion;
    expect(alpha_eq(&c.antecedent, &root.phi), "antecedent must be φ_∅")?;
    expect(
        names(&c.context) == root.phi.free_vars(),
        "context must be the canonical context of φ_∅",
    )?;
    expect(
        alpha_eq(&c.succedent, &Formula::or_flat(bar)),
        "succedent must be the disjunction over the bar",
    )
}

fn infer_block(tag: &RuleTag, c: &Sequent) -> Option<Formula> {
    let dual_of = |f: &Formula| match f {
        Formula::Het(h) => Some(Formula::het(h.dual())),
        _ => None,
    };
    match tag {
        RuleTag::DetAx => match &c.succedent {
            Formula::Or(l) => l.first().cloned(),
            _ => None,
        },
        RuleTag::HetAx1 | RuleTag::HetAx3 => Some(c.antecedent.clone()),
        RuleTag::HetAx2 | RuleTag::HetAx4 => dual_of(&c.antecedent),
        RuleTag::PresAx1 => match &c.antecedent {
            Formula::And(l) => l.first().cloned(),
            _ => None,
        },
        RuleTag::PresAx2 => match &c.antecedent {
            Formula::And(l) => l.first().and_then(dual_of),
            _ => None,
        },
        _ => None,
    }
}

fn schema(node: &ProofTree, ps: &Params<'_>, th: &Theory) -> Check {
    premises(node, 0)?;
    let c = &node.conclusion;
    let block = match ps.formula("block")? {
        Some(b) => Some(b),
        None => infer_block(&node.rule, c),
    };
    let data = InstanceData {
        block,
        stem: ps.moves("stem")?,
        cycle: ps.moves("cycle")?,
        phi: None,
    };
    let want = axiom_instance(&node.rule, &data, &c.context, th).map_err(|e| e.to_string())?;
    expect(
        alpha_eq(&c.antecedent, &want.antecedent),
        "antecedent differs from the schema instance",
    )?;
    expect(
        alpha_eq(&c.succedent, &want.succedent),
        "succedent differs from the schema instance",
    )
}

/// Checks one inference, assuming its premises are already accepted.
pub fn check_step(node: &ProofTree, th: &Theory) -> std::result::Result<(), String> {
    let c = &node.conclusion;
    let ds = check_sequent(c, &th.signature);
    if let Some(d) = ds.first() {
        return fail(format!("ill-formed conclusion: {}", d.message));
    }
    let ps = Params {
        node,
        sig: &th.signature,
        bound: names(&c.context),
    };
    let prem = |i: usize| &node.premises[i].conclusion;
    match &node.rule {
        RuleTag::Identity => {
            premises(node, 0)?;
            expect(
                alpha_eq(&c.antecedent, &c.succedent),
                "identity needs φ ⊢ φ",
            )
        }
        RuleTag::Substitution => substitution(node, &ps),
        RuleTag::Cut => {
            premises(node, 2)?;
            let (a, b) = (prem(0), prem(1));
            expect(
                same_ctx(&a.context, &c.context) && same_ctx(&b.context, &c.context),
                "contexts must agree",
            )?;
            expect(alpha_eq(&a.succedent, &b.antecedent), "cut formulas differ")?;
            expect(
                alpha_eq(&a.antecedent, &c.antecedent) && alpha_eq(&b.succedent, &c.succedent),
                "conclusion must be φ ⊢ θ",
            )
        }
        RuleTag::EqRefl => {
            premises(node, 0)?;
            let [x] = c.context.as_slice() else {
                return fail("context must be a single variable x");
            };
            let t = Term::var(&x.name);
            expect(
                c.antecedent == Formula::Top && c.succedent == Formula::eq(t.clone(), t),
                "expected ⊤ ⊢_x x = x",
            )
        }
        RuleTag::EqSubst => {
            premises(node, 0)?;
            eq_subst(node, &ps)
        }
        RuleTag::ConjAx => {
            premises(node, 0)?;
            let Formula::And(l) = &c.antecedent else {
                return fail("antecedent must be a conjunction");
            };
            expect(
                l.iter().any(|g| alpha_eq(g, &c.succedent)),
                "succedent is not a conjunct",
            )
        }
        RuleTag::DisjAx => {
            premises(node, 0)?;
            let Formula::Or(l) = &c.succedent else {
                return fail("succedent must be a disjunction");
            };
            expect(
                l.iter().any(|g| alpha_eq(g, &c.antecedent)),
                "antecedent is not a disjunct",
            )
        }
        RuleTag::ConjRule => {
            let items: &[Formula] = match &c.succedent {
                Formula::And(l) => l,
                Formula::Top => &[],
                _ => return fail("succedent must be a conjunction"),
            };
            bijection(items, node, |g, p| {
                alpha_eq(g, &p.succedent)
                    && alpha_eq(&c.antecedent, &p.antecedent)
                    && same_ctx(&p.context, &c.context)
            })
        }
        RuleTag::DisjRule => {
            let items: &[Formula] = match &c.antecedent {
                Formula::Or(l) => l,
                Formula::Bottom => &[],
                _ => return fail("antecedent must be a disjunction"),
            };
            bijection(items, node, |g, p| {
                alpha_eq(g, &p.antecedent)
                    && alpha_eq(&c.succedent, &p.succedent)
                    && same_ctx(&p.context, &c.context)
            })
        }
        RuleTag::ImplIntro | RuleTag::ImplElim => {
            premises(node, 1)?;
            let (top, bottom) = if node.rule == RuleTag::ImplIntro {
                (prem(0), c)
            } else {
                (c, prem(0))
            };
            expect(
                same_ctx(&top.context, &bottom.context),
                "contexts must agree",
            )?;
            let Formula::And(l) = &top.antecedent else {
                return fail("expected φ ∧ ψ ⊢ η");
            };
            let [phi, psi] = l.as_slice() else {
                return fail("expected φ ∧ ψ ⊢ η");
            };
            let Formula::Implies(a, b) = &bottom.succedent else {
                return fail("expected φ ⊢ ψ → η");
            };
            expect(alpha_eq(phi, &bottom.antecedent), "φ differs")?;
            expect(alpha_eq(psi, a), "ψ differs")?;
            expect(alpha_eq(&top.succedent, b), "η differs")
        }
        RuleTag::ExistsElim => quantifier(node, true, true),
        RuleTag::ExistsIntro => quantifier(node, true, false),
        RuleTag::ForallIntro => quantifier(node, false, true),
        RuleTag::ForallElim => quantifier(node, false, false),
        RuleTag::TTRule => tt_rule(node, &ps),
        RuleTag::ExcludedMiddle => {
            premises(node, 0)?;
            expect(
                th.mode == Mode::Classical,
                "excluded middle is only available in classical mode",
            )?;
            let Formula::Or(l) = &c.succedent else {
                return fail("expected ⊤ ⊢ φ ∨ ¬φ");
            };
            let [a, b] = l.as_slice() else {
                return fail("expected ⊤ ⊢ φ ∨ ¬φ");
            };
            expect(
                c.antecedent == Formula::Top && alpha_eq(b, &Formula::not(a.clone())),
                "expected ⊤ ⊢ φ ∨ ¬φ",
            )
        }
        RuleTag::TheoryAx(name) => {
            premises(node, 0)?;
            let ax = th
                .axiom(name)
                .ok_or_else(|| format!("no axiom `{name}` in the theory"))?;
            expect(
                same_sequent(&ax.sequent, c),
                "conclusion differs from the axiom",
            )
        }
        t if t.is_het_axiom() => schema(node, &ps, th),
        t => fail(format!("unsupported rule {t}")),
    }
}

/// Checks a whole tree bottom-up, premises left to right.
pub fn check_proof(p: &ProofTree, th: &Theory) -> std::result::Result<(), Rejection> {
    fn go(p: &ProofTree, th: &Theory, path: &mut Vec<usize>) -> std::result::Result<(), Rejection> {
        for (i, q) in p.premises.iter().enumerate() {
            path.push(i);
            go(q, th, path)?;
            path.pop();
        }
        check_step(p, th).map_err(|reason| Rejection {
            path: path.clone(),
            rule: p.rule.clone(),
            reason,
        })
    }
    go(p, th, &mut Vec::new())
}
