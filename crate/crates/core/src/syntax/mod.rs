//! Signatures, terms, formulas, sequents and theories.
//!
//! Heterogeneous blocks come in two flavours: finite blocks, which carry an
//! ordinary body formula and are sugar for nested quantifiers, and ω-blocks,
//! whose payoff is a windowed periodic family of stage conditions (a closed
//! set for `Safety`, an open set for `Reach`).

mod het;
mod subst;
mod wf;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use het::{desugar_finite_block, stage_variables, tail_block, tail_with_moves};
pub use subst::{alpha_eq, canonical, fresh_name, substitute, Subst};
pub(crate) use wf::lcm;
pub use wf::{check_sequent, well_formed, Diagnostic};

use crate::error::{Error, Result};

/// A variable together with its sort.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SortedVar {
    pub name: String,
    pub sort: String,
}

impl SortedVar {
    pub fn new(name: impl Into<String>, sort: impl Into<String>) -> Self {
        SortedVar {
            name: name.into(),
            sort: sort.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub relations: BTreeMap<String, Vec<String>>,
    /// Function symbols: argument sorts and result sort. Constants are nullary.
    pub functions: BTreeMap<String, (Vec<String>, String)>,
}

impl Signature {
    pub fn has_sort(&self, s: &str) -> bool {
        self.sorts.iter().any(|x| x == s)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        matches!(self.functions.get(name), Some((args, _)) if args.is_empty())
    }

    pub fn add_sort(&mut self, s: &str) -> Result<()> {
        if self.has_sort(s) {
            return Err(Error::Semantic(format!("duplicate sort `{s}`")));
        }
        self.sorts.push(s.to_string());
        Ok(())
    }

    pub fn add_relation(&mut self, name: &str, args: Vec<String>) -> Result<()> {
        if self.relations.contains_key(name) {
            return Err(Error::Semantic(format!("duplicate relation `{name}`")));
        }
        self.check_sorts(&args)?;
        self.relations.insert(name.to_string(), args);
        Ok(())
    }

    pub fn add_function(&mut self, name: &str, args: Vec<String>, result: String) -> Result<()> {
        if self.functions.contains_key(name) {
            return Err(Error::Semantic(format!("duplicate function `{name}`")));
        }
        self.check_sorts(&args)?;
        self.check_sorts(std::slice::from_ref(&result))?;
        self.functions.insert(name.to_string(), (args, result));
        Ok(())
    }

    fn check_sorts(&self, sorts: &[String]) -> Result<()> {
        match sorts.iter().find(|s| !self.has_sort(s)) {
            Some(s) => Err(Error::Semantic(format!("unknown sort `{s}`"))),
            None => Ok(()),
        }
    }

    /// Union of two signatures; shared symbols must agree.
    pub fn merge(&mut self, other: &Signature) -> Result<()> {
        for s in &other.sorts {
            if !self.has_sort(s) {
                self.sorts.push(s.clone());
            }
        }
        for (r, args) in &other.relations {
            match self.relations.get(r) {
                Some(a) if a != args => {
                    return Err(Error::Semantic(format!(
                        "conflicting declarations of `{r}`"
                    )))
                }
                Some(_) => {}
                None => {
                    self.relations.insert(r.clone(), args.clone());
                }
            }
        }
        for (f, ty) in &other.functions {
            match self.functions.get(f) {
                Some(t) if t != ty => {
                    return Err(Error::Semantic(format!(
                        "conflicting declarations of `{f}`"
                    )))
                }
                Some(_) => {}
                None => {
                    self.functions.insert(f.clone(), ty.clone());
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    /// Function application; constants are nullary applications.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|t| t.vars_into(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }
}

/// Which player moves at even (local) stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    /// `(∀∃)`: the universal player moves at even stages.
    AE,
    /// `(∃∀)`: the existential player moves at even stages.
    EA,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::AE => Polarity::EA,
            Polarity::EA => Polarity::AE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Length {
    Finite(usize),
    Omega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageKind {
    /// Every completed stage condition must hold (closed payoff).
    Safety,
    /// Some completed stage condition must hold (open payoff).
    Reach,
}

impl StageKind {
    pub fn dual(self) -> Self {
        match self {
            StageKind::Safety => StageKind::Reach,
            StageKind::Reach => StageKind::Safety,
        }
    }
}

/// A windowed periodic payoff for an ω-block.
///
/// The stage-`n` condition is `templates[n % templates.len()]` applied to the
/// moves of stages `n-w+1 ..= n`, bound to the placeholders `v0 .. v{w-1}`
/// oldest first. Stages whose window is not yet full impose no condition.
/// `history` holds moves already played: a tail of a block keeps the original
/// templates and records the consumed prefix here, so stage numbering is
/// always absolute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StagePayoff {
    pub kind: StageKind,
    pub window: usize,
    pub templates: Vec<Formula>,
    pub history: Vec<Vec<Term>>,
}

impl StagePayoff {
    pub fn new(kind: StageKind, window: usize, templates: Vec<Formula>) -> Self {
        StagePayoff {
            kind,
            window,
            templates,
            history: Vec::new(),
        }
    }

    /// Number of moves already consumed (the absolute stage of the next move).
    pub fn offset(&self) -> usize {
        self.history.len()
    }

    /// The complement payoff: safety and reach swap and every template is negated.
    pub fn negate(&self) -> StagePayoff {
        StagePayoff {
            kind: self.kind.dual(),
            window: self.window,
            templates: self.templates.iter().map(Formula::negate).collect(),
            history: self.history.clone(),
        }
    }

    /// The payoff with the consumed prefix forgotten.
    pub fn base(&self) -> StagePayoff {
        StagePayoff {
            history: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Payoff {
    Body(Formula),
    Stages(StagePayoff),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HetBlock {
    pub polarity: Polarity,
    pub length: Length,
    /// Periodic list of variable blocks. Finite blocks list every stage.
    pub schedule: Vec<Vec<SortedVar>>,
    /// Optional bound formulas, aligned with `schedule`.
    pub bounds: Option<Vec<Formula>>,
    pub payoff: Payoff,
}

impl HetBlock {
    pub fn period(&self) -> usize {
        self.schedule.len()
    }

    pub fn stage_payoff(&self) -> Option<&StagePayoff> {
        match &self.payoff {
            Payoff::Stages(p) => Some(p),
            Payoff::Body(_) => None,
        }
    }

    /// Variable block moved at local stage `m`.
    pub fn block_at(&self, m: usize) -> &[SortedVar] {
        &self.schedule[m % self.period()]
    }

    pub fn bound_at(&self, m: usize) -> Option<&Formula> {
        self.bounds.as_ref().map(|b| &b[m % b.len()])
    }

    /// All variables bound by the schedule.
    pub fn schedule_vars(&self) -> BTreeSet<String> {
        self.schedule
            .iter()
            .flatten()
            .map(|v| v.name.clone())
            .collect()
    }

    /// The dual block `(∃∀)¬φ` of `(∀∃)φ` (and vice versa) over the same schedule.
    pub fn dual(&self) -> HetBlock {
        let payoff = match &self.payoff {
            Payoff::Body(f) => Payoff::Body(f.negate()),
            Payoff::Stages(p) => Payoff::Stages(p.negate()),
        };
        HetBlock {
            polarity: self.polarity.flip(),
            payoff,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Top,
    Bottom,
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<SortedVar>, Box<Formula>),
    Forall(Vec<SortedVar>, Box<Formula>),
    Het(Box<HetBlock>),
}

impl Formula {
    pub fn atom(name: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(name.into(), args)
    }

    pub fn eq(l: Term, r: Term) -> Self {
        Formula::Eq(l, r)
    }

    /// Conjunction; the empty conjunction is `Top`.
    pub fn and(list: Vec<Formula>) -> Self {
        if list.is_empty() {
            Formula::Top
        } else {
            Formula::And(list)
        }
    }

    /// Disjunction; the empty disjunction is `Bottom`.
    pub fn or(list: Vec<Formula>) -> Self {
        if list.is_empty() {
            Formula::Bottom
        } else {
            Formula::Or(list)
        }
    }

    /// Conjunction that leaves a single conjunct unwrapped.
    pub fn and_flat(mut list: Vec<Formula>) -> Self {
        if list.len() == 1 {
            list.pop().unwrap()
        } else {
            Formula::and(list)
        }
    }

    /// Disjunction that leaves a single disjunct unwrapped.
    pub fn or_flat(mut list: Vec<Formula>) -> Self {
        if list.len() == 1 {
            list.pop().unwrap()
        } else {
            Formula::or(list)
        }
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    /// `¬φ`, i.e. `φ → ⊥`.
    pub fn not(f: Formula) -> Self {
        Formula::implies(f, Formula::Bottom)
    }

    /// Existential over a (possibly empty) block; the empty block is the body.
    pub fn exists(vars: Vec<SortedVar>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn forall(vars: Vec<SortedVar>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    pub fn het(block: HetBlock) -> Self {
        Formula::Het(Box::new(block))
    }

    /// Negation that cancels an outer negation instead of stacking one.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Implies(l, r) if **r == Formula::Bottom => (**l).clone(),
            f => Formula::not(f.clone()),
        }
    }

    pub fn as_negation(&self) -> Option<&Formula> {
        match self {
            Formula::Implies(l, r) if **r == Formula::Bottom => Some(l),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(..) | Formula::Eq(..))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        subst::free_vars(self)
    }

    /// Immediate subformulas, in order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(..) | Formula::Eq(..) | Formula::Top | Formula::Bottom => vec![],
            Formula::And(l) | Formula::Or(l) => l.iter().collect(),
            Formula::Implies(a, b) => vec![a, b],
            Formula::Exists(_, b) | Formula::Forall(_, b) => vec![b],
            Formula::Het(h) => {
                let mut out: Vec<&Formula> = h.bounds.iter().flatten().collect();
                match &h.payoff {
                    Payoff::Body(b) => out.push(b),
                    Payoff::Stages(p) => out.extend(p.templates.iter()),
                }
                out
            }
        }
    }

    /// True when no heterogeneous block occurs anywhere in the formula.
    pub fn is_het_free(&self) -> bool {
        !matches!(self, Formula::Het(_)) && self.children().iter().all(|c| c.is_het_free())
    }

    /// Visits every subformula (pre-order, including `self`).
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

/// `φ ⊢_x ψ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequent {
    pub antecedent: Formula,
    pub succedent: Formula,
    pub context: Vec<SortedVar>,
}

impl Sequent {
    pub fn new(antecedent: Formula, succedent: Formula, context: Vec<SortedVar>) -> Self {
        Sequent {
            antecedent,
            succedent,
            context,
        }
    }

    pub fn context_set(&self) -> BTreeSet<SortedVar> {
        self.context.iter().cloned().collect()
    }

    pub fn sort_of(&self, var: &str) -> Option<&str> {
        self.context
            .iter()
            .find(|v| v.name == var)
            .map(|v| v.sort.as_str())
    }
}

/// The admissible heterogeneous payoffs of a theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PayoffClass {
    SafetyOnly,
    /// Safety and reach payoffs.
    Clopen,
    Explicit(Vec<StagePayoff>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Classical,
    Intuitionistic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub name: String,
    pub sequent: Sequent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub signature: Signature,
    pub axioms: Vec<Axiom>,
    pub class: PayoffClass,
    pub mode: Mode,
}

impl Theory {
    pub fn new(signature: Signature) -> Self {
        Theory {
            signature,
            axioms: Vec::new(),
            class: PayoffClass::SafetyOnly,
            mode: Mode::Classical,
        }
    }

    pub fn axiom(&self, name: &str) -> Option<&Axiom> {
        self.axioms.iter().find(|a| a.name == name)
    }

    /// Heterogeneous subformulas of the axioms, each with the sorts of its free
    /// variables (resolved from the axiom context and enclosing binders).
    pub fn het_subformulas(&self) -> Vec<(Formula, Vec<SortedVar>)> {
        let mut out: Vec<(Formula, Vec<SortedVar>)> = Vec::new();
        for ax in &self.axioms {
            for side in [&ax.sequent.antecedent, &ax.sequent.succedent] {
                collect_with_context(side, &ax.sequent.context, &mut |f, ctx| {
                    if matches!(f, Formula::Het(_)) && !out.iter().any(|(g, _)| alpha_eq(g, f)) {
                        let fv = f.free_vars();
                        let vars = ctx
                            .iter()
                            .filter(|v| fv.contains(&v.name))
                            .cloned()
                            .collect();
                        out.push((f.clone(), vars));
                    }
                });
            }
        }
        out
    }
}

/// Visits subformulas together with the sorted variables in scope.
pub fn collect_with_context(
    f: &Formula,
    ctx: &[SortedVar],
    visit: &mut impl FnMut(&Formula, &[SortedVar]),
) {
    visit(f, ctx);
    match f {
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let inner = extend_context(ctx, vs);
            collect_with_context(b, &inner, visit);
        }
        Formula::Het(h) => {
            let inner = extend_context(ctx, &h.schedule.concat());
            for c in h.bounds.iter().flatten() {
                collect_with_context(c, &inner, visit);
            }
            if let Payoff::Body(b) = &h.payoff {
                collect_with_context(b, &inner, visit);
            }
        }
        _ => {
            for c in f.children() {
                collect_with_context(c, ctx, visit);
            }
        }
    }
}

/// `ctx` with `vars` added, shadowing earlier entries of the same name.
pub fn extend_context(ctx: &[SortedVar], vars: &[SortedVar]) -> Vec<SortedVar> {
    let mut out: Vec<SortedVar> = ctx
        .iter()
        .filter(|v| !vars.iter().any(|w| w.name == v.name))
        .cloned()
        .collect();
    out.extend(vars.iter().cloned());
    out
}

/// Names of the form `v<i>` or `v<i>_<j>` refer to window slots in payoff templates.
pub fn parse_placeholder(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('v')?;
    let (i, j) = match rest.split_once('_') {
        Some((i, j)) => (i, Some(j)),
        None => (rest, None),
    };
    if i.is_empty() || !i.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let j = match j {
        Some(j) if !j.is_empty() && j.bytes().all(|b| b.is_ascii_digit()) => j.parse().ok()?,
        Some(_) => return None,
        None => 0,
    };
    Some((i.parse().ok()?, j))
}

impl fmt::Display for SortedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.sort)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders() {
        assert_eq!(parse_placeholder("v0"), Some((0, 0)));
        assert_eq!(parse_placeholder("v12_3"), Some((12, 3)));
        assert_eq!(parse_placeholder("v"), None);
        assert_eq!(parse_placeholder("val"), None);
        assert_eq!(parse_placeholder("v1_"), None);
    }

    #[test]
    fn empty_connectives_normalize() {
        assert_eq!(Formula::and(vec![]), Formula::Top);
        assert_eq!(Formula::or(vec![]), Formula::Bottom);
    }

    #[test]
    fn negate_cancels() {
        let p = Formula::atom("p", vec![]);
        assert_eq!(p.negate().negate(), p);
    }

    #[test]
    fn signature_rejects_duplicates_and_unknown_sorts() {
        let mut sig = Signature::default();
        sig.add_sort("s").unwrap();
        assert!(sig.add_sort("s").is_err());
        assert!(sig.add_relation("E", vec!["t".into()]).is_err());
        sig.add_relation("E", vec!["s".into(), "s".into()]).unwrap();
        assert!(sig.add_relation("E", vec![]).is_err());
    }
}
