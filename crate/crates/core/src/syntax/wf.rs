//! Well-formedness: sorts and arities, binder hygiene, block invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    parse_placeholder, Formula, HetBlock, Length, Payoff, Sequent, Signature, SortedVar, Term,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    /// Pretty-printed offending subterm or subformula.
    pub at: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (in `{}`)", self.message, self.at)
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    diags: Vec<Diagnostic>,
}

/// Checks `f` against `sig` in context `ctx`; an empty result means well-formed.
pub fn well_formed(f: &Formula, sig: &Signature, ctx: &[SortedVar]) -> Vec<Diagnostic> {
    let mut c = Checker {
        sig,
        diags: Vec::new(),
    };
    let mut env: BTreeMap<String, String> = BTreeMap::new();
    for v in ctx {
        if !sig.has_sort(&v.sort) {
            c.report(format!("unknown sort `{}`", v.sort), v.to_string());
        }
        if parse_placeholder(&v.name).is_some() {
            c.report(
                format!("`{}` is reserved for payoff window slots", v.name),
                v.to_string(),
            );
        }
        if env.insert(v.name.clone(), v.sort.clone()).is_some() {
            c.report(
                format!("duplicate context variable `{}`", v.name),
                v.to_string(),
            );
        }
    }
    c.formula(f, &env);
    c.diags
}

/// Well-formedness of a sequent: both sides in its context.
pub fn check_sequent(s: &Sequent, sig: &Signature) -> Vec<Diagnostic> {
    let mut out = well_formed(&s.antecedent, sig, &s.context);
    let seen: BTreeSet<&Diagnostic> = out
        .iter()
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<BTreeSet<_>>();
    let more: Vec<Diagnostic> = well_formed(&s.succedent, sig, &s.context)
        .into_iter()
        .filter(|d| !seen.contains(d))
        .collect();
    out.extend(more);
    out
}

impl PartialOrd for Diagnostic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Diagnostic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.message, &self.at).cmp(&(&other.message, &other.at))
    }
}

impl<'a> Checker<'a> {
    fn report(&mut self, message: String, at: String) {
        self.diags.push(Diagnostic { message, at });
    }

    fn term(&mut self, t: &Term, env: &BTreeMap<String, String>) -> Option<String> {
        match t {
            Term::Var(v) => match env.get(v) {
                Some(s) => Some(s.clone()),
                None if self.sig.is_constant(v) => Some(self.sig.functions[v].1.clone()),
                None => {
                    self.report(format!("variable `{v}` not in context"), v.clone());
                    None
                }
            },
            Term::App(f, args) => {
                let Some((arg_sorts, res)) = self.sig.functions.get(f) else {
                    self.report(format!("unknown function `{f}`"), t.to_string());
                    return None;
                };
                if arg_sorts.len() != args.len() {
                    self.report(
                        format!(
                            "arity error: `{f}` takes {} arguments, got {}",
                            arg_sorts.len(),
                            args.len()
                        ),
                        t.to_string(),
                    );
                    return Some(res.clone());
                }
                for (a, s) in args.iter().zip(arg_sorts) {
                    if let Some(got) = self.term(a, env) {
                        if &got != s {
                            self.report(
                                format!("sort mismatch: expected `{s}`, found `{got}`"),
                                a.to_string(),
                            );
                        }
                    }
                }
                Some(res.clone())
            }
        }
    }

    fn binders(
        &mut self,
        vs: &[SortedVar],
        env: &BTreeMap<String, String>,
        at: &Formula,
    ) -> BTreeMap<String, String> {
        let mut inner = env.clone();
        let mut seen = BTreeSet::new();
        if vs.is_empty() {
            self.report("empty variable block".into(), at.to_string());
        }
        for v in vs {
            if !self.sig.has_sort(&v.sort) {
                self.report(format!("unknown sort `{}`", v.sort), at.to_string());
            }
            if !seen.insert(v.name.clone()) {
                self.report(
                    format!("binder `{}` repeated in one block", v.name),
                    at.to_string(),
                );
            }
            if parse_placeholder(&v.name).is_some() {
                self.report(
                    format!("`{}` is reserved for payoff window slots", v.name),
                    at.to_string(),
                );
            }
            inner.insert(v.name.clone(), v.sort.clone());
        }
        inner
    }

    fn formula(&mut self, f: &Formula, env: &BTreeMap<String, String>) {
        match f {
            Formula::Atom(r, args) => {
                let Some(sorts) = self.sig.relations.get(r) else {
                    self.report(format!("unknown relation `{r}`"), f.to_string());
                    return;
                };
                if sorts.len() != args.len() {
                    self.report(
                        format!(
                            "arity error: `{r}` takes {} arguments, got {}",
                            sorts.len(),
                            args.len()
                        ),
                        f.to_string(),
                    );
                    return;
                }
                for (a, s) in args.iter().zip(sorts.clone()) {
                    if let Some(got) = self.term(a, env) {
                        if got != s {
                            self.report(
                                format!("sort mismatch: expected `{s}`, found `{got}`"),
                                a.to_string(),
                            );
                        }
                    }
                }
            }
            Formula::Eq(l, r) => {
                let (a, b) = (self.term(l, env), self.term(r, env));
                if let (Some(a), Some(b)) = (a, b) {
                    if a != b {
                        self.report(
                            format!("equality between sorts `{a}` and `{b}`"),
                            f.to_string(),
                        );
                    }
                }
            }
            Formula::Top | Formula::Bottom => {}
            Formula::And(l) | Formula::Or(l) => {
                if l.is_empty() {
                    self.report(
                        "empty connective list (use true/false)".into(),
                        f.to_string(),
                    );
                }
                l.iter().for_each(|g| self.formula(g, env));
            }
            Formula::Implies(a, b) => {
                self.formula(a, env);
                self.formula(b, env);
            }
            Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
                let inner = self.binders(vs, env, f);
                self.formula(b, &inner);
            }
            Formula::Het(h) => self.het(h, f, env),
        }
    }

    fn het(&mut self, h: &HetBlock, f: &Formula, env: &BTreeMap<String, String>) {
        if h.schedule.is_empty() {
            self.report("empty schedule".into(), f.to_string());
            return;
        }
        let mut all = BTreeSet::new();
        let mut inner = env.clone();
        for block in &h.schedule {
            if block.is_empty() {
                self.report("empty variable block in schedule".into(), f.to_string());
            }
            for v in block {
                if !all.insert(v.name.clone()) {
                    self.report(
                        format!("schedule variable `{}` repeated", v.name),
                        f.to_string(),
                    );
                }
                if !self.sig.has_sort(&v.sort) {
                    self.report(format!("unknown sort `{}`", v.sort), f.to_string());
                }
                if parse_placeholder(&v.name).is_some() {
                    self.report(
                        format!("`{}` is reserved for payoff window slots", v.name),
                        f.to_string(),
                    );
                }
                inner.insert(v.name.clone(), v.sort.clone());
            }
        }
        if let Some(bs) = &h.bounds {
            if bs.len() != h.period() {
                self.report(
                    format!(
                        "{} bounds for a schedule of period {}",
                        bs.len(),
                        h.period()
                    ),
                    f.to_string(),
                );
            }
            for (b, block) in bs.iter().zip(&h.schedule) {
                let own: BTreeSet<String> = block.iter().map(|v| v.name.clone()).collect();
                let stray: Vec<String> = b
                    .free_vars()
                    .into_iter()
                    .filter(|v| !own.contains(v))
                    .collect();
                if !stray.is_empty() {
                    self.report(
                        format!(
                            "bound mentions variables outside its block: {}",
                            stray.join(", ")
                        ),
                        b.to_string(),
                    );
                }
                if !b.is_het_free() {
                    self.report(
                        "bounds must not contain heterogeneous blocks".into(),
                        b.to_string(),
                    );
                }
                let mut benv = env.clone();
                benv.extend(block.iter().map(|v| (v.name.clone(), v.sort.clone())));
                self.formula(b, &benv);
            }
        }
        match (&h.length, &h.payoff) {
            (Length::Omega, Payoff::Body(_)) => self.report(
                "ω-length requires safety/reach payoff".into(),
                f.to_string(),
            ),
            (Length::Finite(_), Payoff::Stages(_)) => self.report(
                "safety/reach payoffs require ω-length".into(),
                f.to_string(),
            ),
            (Length::Finite(n), Payoff::Body(body)) => {
                if *n != h.period() {
                    self.report(
                        format!(
                            "finite block of length {n} must list {n} variable blocks, found {}",
                            h.period()
                        ),
                        f.to_string(),
                    );
                }
                self.formula(body, &inner);
            }
            (Length::Omega, Payoff::Stages(p)) => {
                if p.window == 0 {
                    self.report("window must be at least 1".into(), f.to_string());
                    return;
                }
                if p.templates.is_empty() {
                    self.report("empty template list".into(), f.to_string());
                    return;
                }
                for (alpha, mv) in p.history.iter().enumerate() {
                    let block = h.abs_block(alpha);
                    if mv.len() != block.len() {
                        self.report(
                            format!("history move {alpha} has wrong length"),
                            f.to_string(),
                        );
                        continue;
                    }
                    for (t, v) in mv.iter().zip(block) {
                        if let Some(s) = self.term(t, env) {
                            if s != v.sort {
                                self.report(
                                    format!("history move {alpha}: sort mismatch"),
                                    t.to_string(),
                                );
                            }
                        }
                    }
                }
                for (k, t) in p.templates.iter().enumerate() {
                    if !t.is_het_free() {
                        self.report(
                            "payoff templates must not contain heterogeneous blocks".into(),
                            t.to_string(),
                        );
                        continue;
                    }
                    match h.placeholder_sorts(k) {
                        Ok(slots) => {
                            let mut tenv = env.clone();
                            for name in t.free_vars() {
                                if let Some((i, j)) = parse_placeholder(&name) {
                                    match slots.get(&(i, j)) {
                                        Some(s) => {
                                            tenv.insert(name, s.clone());
                                        }
                                        None => self.report(
                                            format!(
                                                "template window exceeds declared window: `{name}`"
                                            ),
                                            t.to_string(),
                                        ),
                                    }
                                }
                            }
                            self.formula(t, &tenv);
                        }
                        Err(msg) => self.report(msg, t.to_string()),
                    }
                }
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

impl HetBlock {
    /// Block moved at absolute stage `s` (stages before the history offset
    /// refer to the consumed prefix).
    pub fn abs_block(&self, s: usize) -> &[SortedVar] {
        let off = self.stage_payoff().map_or(0, |p| p.offset()) as i64;
        let p = self.period() as i64;
        &self.schedule[(s as i64 - off).rem_euclid(p) as usize]
    }

    /// Sorts of the window slots `(i, j)` of template `k`, consistent across
    /// every absolute stage the template applies to.
    pub fn placeholder_sorts(&self, k: usize) -> Result<BTreeMap<(usize, usize), String>, String> {
        let p = self.stage_payoff().ok_or("not an ω-block")?;
        let w = p.window;
        let span = lcm(p.templates.len(), self.period());
        let mut out: Option<BTreeMap<(usize, usize), String>> = None;
        for s in (w - 1)..(w - 1 + span) {
            if s % p.templates.len() != k {
                continue;
            }
            let mut here = BTreeMap::new();
            for i in 0..w {
                for (j, v) in self.abs_block(s + 1 + i - w).iter().enumerate() {
                    here.insert((i, j), v.sort.clone());
                }
            }
            match &out {
                None => out = Some(here),
                Some(prev) if *prev != here => {
                    return Err(format!(
                        "window slots of template {k} change sort between stages"
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(out.unwrap_or_default())
    }
}
