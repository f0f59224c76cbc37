//! Text frontend for signatures, theories, formulas, sequents, structures and
//! Kripke models.

mod lexer;

use std::collections::{BTreeMap, BTreeSet};

pub use lexer::{lex, Tok, Token};

use crate::error::{Error, Pos, Result};
use crate::structure::{Elem, Structure};
use crate::syntax::{
    check_sequent, well_formed, Axiom, Formula, HetBlock, Length, Mode, Payoff, PayoffClass,
    Polarity, Sequent, Signature, SortedVar, StageKind, StagePayoff, Term, Theory,
};

/// A literal value in a proof-script parameter record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Str(String),
    Num(usize),
    Ident(String),
    List(Vec<Value>),
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            i: 0,
        })
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::syntax(self.pos(), msg))
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn expect_kw(&mut self, k: &str) -> Result<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    pub(crate) fn number(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            t => self.err(format!("expected number, found {}", describe(&t))),
        }
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected string, found {}", describe(&t))),
        }
    }

    /// An element name: identifier or numeral.
    fn element(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Num(n) => {
                self.bump();
                Ok(n.to_string())
            }
            t => self.err(format!("expected element name, found {}", describe(&t))),
        }
    }

    /// `open item (sep item)* close`, allowing the empty list.
    pub(crate) fn list<T>(
        &mut self,
        open: &str,
        close: &str,
        mut item: impl FnMut(&mut Self) -> Result<T>,
    ) -> Result<Vec<T>> {
        self.expect_sym(open)?;
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term> {
        let name = self.ident()?;
        if self.is_sym("(") {
            let args = self.list("(", ")", Self::term)?;
            Ok(Term::App(name, args))
        } else {
            Ok(Term::Var(name))
        }
    }

    pub(crate) fn sorted_var(&mut self) -> Result<SortedVar> {
        let name = self.ident()?;
        self.expect_sym(":")?;
        let sort = self.ident()?;
        Ok(SortedVar::new(name, sort))
    }

    fn var_block(&mut self) -> Result<Vec<SortedVar>> {
        self.list("[", "]", Self::sorted_var)
    }

    pub(crate) fn formula(&mut self) -> Result<Formula> {
        let pos = self.pos();
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            t => return self.err(format!("expected formula, found {}", describe(&t))),
        };
        match name.as_str() {
            "true" => {
                self.bump();
                Ok(Formula::Top)
            }
            "false" => {
                self.bump();
                Ok(Formula::Bottom)
            }
            "and" | "or" if matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                let items = self.list("(", ")", Self::formula)?;
                Ok(if name == "and" {
                    Formula::and(items)
                } else {
                    Formula::or(items)
                })
            }
            "implies" if matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                self.expect_sym("(")?;
                let a = self.formula()?;
                self.expect_sym(",")?;
                let b = self.formula()?;
                self.expect_sym(")")?;
                Ok(Formula::implies(a, b))
            }
            "not" if matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                self.expect_sym("(")?;
                let a = self.formula()?;
                self.expect_sym(")")?;
                Ok(Formula::not(a))
            }
            "exists" | "forall" if matches!(self.peek_at(1), Tok::Sym("[")) => {
                self.bump();
                let vs = self.var_block()?;
                let body = self.formula()?;
                Ok(if name == "exists" {
                    Formula::exists(vs, body)
                } else {
                    Formula::forall(vs, body)
                })
            }
            "hetAE" | "hetEA" => {
                self.bump();
                let pol = if name == "hetAE" {
                    Polarity::AE
                } else {
                    Polarity::EA
                };
                self.het(pol, pos)
            }
            _ => {
                let t = self.term()?;
                if self.eat_sym("=") {
                    let r = self.term()?;
                    return Ok(Formula::Eq(t, r));
                }
                match t {
                    Term::Var(r) => Ok(Formula::Atom(r, Vec::new())),
                    Term::App(r, args) => Ok(Formula::Atom(r, args)),
                }
            }
        }
    }

    fn length(&mut self) -> Result<Length> {
        if self.eat_kw("omega") {
            Ok(Length::Omega)
        } else {
            Ok(Length::Finite(self.number()?))
        }
    }

    fn het(&mut self, polarity: Polarity, pos: Pos) -> Result<Formula> {
        let mut length = if self.is_sym("{") {
            None
        } else {
            Some(self.length()?)
        };
        self.expect_sym("{")?;
        let (mut schedule, mut bounds, mut payoff) = (None, None, None);
        while !self.eat_sym("}") {
            let key = self.ident()?;
            self.eat_sym(":");
            match key.as_str() {
                "len" => length = Some(self.length()?),
                "sched" => schedule = Some(self.list("[", "]", Self::var_block)?),
                "bounds" => bounds = Some(self.list("[", "]", Self::formula)?),
                "payoff" => payoff = Some(self.payoff()?),
                k => return self.err(format!("unknown block field `{k}`")),
            }
            if !self.eat_sym(";") && !self.is_sym("}") {
                return self.err(format!(
                    "expected `;` or `}}`, found {}",
                    describe(self.peek())
                ));
            }
        }
        let Some(length) = length else {
            return Err(Error::syntax(pos, "block is missing `len`"));
        };
        let Some(payoff) = payoff else {
            return Err(Error::syntax(pos, "block is missing `payoff`"));
        };
        match (&length, &payoff) {
            (Length::Omega, Payoff::Body(_)) => {
                return Err(Error::syntax(pos, "ω-length requires safety/reach payoff"))
            }
            (Length::Finite(_), Payoff::Stages(_)) => {
                return Err(Error::syntax(pos, "safety/reach payoffs require ω-length"))
            }
            _ => {}
        }
        let Some(schedule) = schedule else {
            return Err(Error::syntax(pos, "block is missing `sched`"));
        };
        Ok(Formula::het(HetBlock {
            polarity,
            length,
            schedule,
            bounds,
            payoff,
        }))
    }

    fn payoff(&mut self) -> Result<Payoff> {
        if self.eat_kw("body") {
            return Ok(Payoff::Body(self.formula()?));
        }
        Ok(Payoff::Stages(self.stage_payoff()?))
    }

    pub(crate) fn stage_payoff(&mut self) -> Result<StagePayoff> {
        let kind = match self.ident()?.as_str() {
            "safety" => StageKind::Safety,
            "reach" => StageKind::Reach,
            k => return self.err(format!("unknown payoff `{k}`")),
        };
        self.expect_sym("(")?;
        let window = self.number()?;
        self.expect_sym(")")?;
        let templates = self.list("[", "]", Self::formula)?;
        let mut p = StagePayoff::new(kind, window, templates);
        if self.eat_kw("history") {
            p.history = self.list("[", "]", |s| s.list("[", "]", Self::term))?;
        }
        Ok(p)
    }

    pub(crate) fn sequent(&mut self) -> Result<Sequent> {
        let a = self.formula()?;
        self.expect_sym("|-")?;
        let s = self.formula()?;
        let mut ctx = Vec::new();
        if self.eat_sym("[") {
            self.expect_kw("ctx")?;
            if !self.is_sym("]") {
                loop {
                    ctx.push(self.sorted_var()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("]")?;
        }
        Ok(Sequent::new(a, s, ctx))
    }

    pub(crate) fn value(&mut self) -> Result<Value> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Value::Num(n))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Value::Ident(s))
            }
            Tok::Sym("[") => Ok(Value::List(self.list("[", "]", Self::value)?)),
            t => self.err(format!("expected value, found {}", describe(&t))),
        }
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", describe(self.peek())))
        }
    }

    fn sort_list(&mut self) -> Result<Vec<String>> {
        if self.is_sym("(") {
            self.list("(", ")", Self::ident)
        } else {
            Ok(Vec::new())
        }
    }

    /// One signature declaration, if the next keyword starts one.
    fn declaration(&mut self, sig: &mut Signature) -> Result<bool> {
        let pos = self.pos();
        let wrap = |r: Result<()>| r.map_err(|e| Error::syntax(pos, e.to_string()));
        if self.eat_kw("sort") {
            loop {
                let s = self.ident()?;
                wrap(sig.add_sort(&s))?;
                if !self.eat_sym(",") {
                    break;
                }
            }
        } else if self.eat_kw("rel") {
            let name = self.ident()?;
            let args = self.sort_list()?;
            wrap(sig.add_relation(&name, args))?;
        } else if self.eat_kw("fun") {
            let name = self.ident()?;
            let args = self.sort_list()?;
            self.expect_sym(":")?;
            let res = self.ident()?;
            wrap(sig.add_function(&name, args, res))?;
        } else if self.eat_kw("const") {
            let name = self.ident()?;
            self.expect_sym(":")?;
            let res = self.ident()?;
            wrap(sig.add_function(&name, Vec::new(), res))?;
        } else {
            return Ok(false);
        }
        self.expect_sym(";")?;
        Ok(true)
    }

    fn class(&mut self) -> Result<PayoffClass> {
        if self.eat_kw("safety") {
            Ok(PayoffClass::SafetyOnly)
        } else if self.eat_kw("clopen") {
            Ok(PayoffClass::Clopen)
        } else if self.eat_sym("{") {
            let mut specs = Vec::new();
            while !self.eat_sym("}") {
                specs.push(self.stage_payoff()?);
                if !self.eat_sym(";") && !self.eat_sym(",") && !self.is_sym("}") {
                    return self.err("expected `;` or `}` in class list");
                }
            }
            Ok(PayoffClass::Explicit(specs))
        } else {
            self.err(format!(
                "expected payoff class, found {}",
                describe(self.peek())
            ))
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

fn diagnostics_error(what: &str, ds: Vec<crate::syntax::Diagnostic>) -> Error {
    let list: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
    Error::Semantic(format!("{what}: {}", list.join("; ")))
}

/// Turns unbound variables that name declared constants into constant terms.
pub fn resolve_constants(f: &Formula, sig: &Signature, bound: &BTreeSet<String>) -> Formula {
    fn term(t: &Term, sig: &Signature, bound: &BTreeSet<String>) -> Term {
        match t {
            Term::Var(v) if !bound.contains(v) && sig.is_constant(v) => Term::constant(v.clone()),
            Term::Var(_) => t.clone(),
            Term::App(g, args) => Term::App(
                g.clone(),
                args.iter().map(|a| term(a, sig, bound)).collect(),
            ),
        }
    }
    fn under(vs: &[SortedVar], bound: &BTreeSet<String>) -> BTreeSet<String> {
        let mut b = bound.clone();
        b.extend(vs.iter().map(|v| v.name.clone()));
        b
    }
    let rec = |g: &Formula, b: &BTreeSet<String>| resolve_constants(g, sig, b);
    match f {
        Formula::Atom(r, args) => Formula::Atom(
            r.clone(),
            args.iter().map(|a| term(a, sig, bound)).collect(),
        ),
        Formula::Eq(l, r) => Formula::Eq(term(l, sig, bound), term(r, sig, bound)),
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::And(l) => Formula::And(l.iter().map(|g| rec(g, bound)).collect()),
        Formula::Or(l) => Formula::Or(l.iter().map(|g| rec(g, bound)).collect()),
        Formula::Implies(a, b) => Formula::implies(rec(a, bound), rec(b, bound)),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(rec(b, &under(vs, bound)))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(rec(b, &under(vs, bound)))),
        Formula::Het(h) => {
            let inner = under(&h.schedule.concat(), bound);
            let bounds = h
                .bounds
                .as_ref()
                .map(|bs| bs.iter().map(|b| rec(b, &inner)).collect());
            let payoff = match &h.payoff {
                Payoff::Body(b) => Payoff::Body(rec(b, &inner)),
                Payoff::Stages(p) => Payoff::Stages(StagePayoff {
                    templates: p.templates.iter().map(|t| rec(t, bound)).collect(),
                    history: p
                        .history
                        .iter()
                        .map(|mv| mv.iter().map(|t| term(t, sig, bound)).collect())
                        .collect(),
                    ..p.clone()
                }),
            };
            Formula::het(HetBlock {
                bounds,
                payoff,
                ..(**h).clone()
            })
        }
    }
}

fn resolve_sequent(s: Sequent, sig: &Signature) -> Sequent {
    let bound: BTreeSet<String> = s.context.iter().map(|v| v.name.clone()).collect();
    Sequent::new(
        resolve_constants(&s.antecedent, sig, &bound),
        resolve_constants(&s.succedent, sig, &bound),
        s.context,
    )
}

/// Parses a formula; with a signature, constants are resolved (variables in
/// `ctx` shadow them) and the result is checked for well-formedness.
pub fn parse_formula_in(text: &str, sig: &Signature, ctx: &[SortedVar]) -> Result<Formula> {
    let f = parse_formula(text)?;
    let bound = ctx.iter().map(|v| v.name.clone()).collect();
    let f = resolve_constants(&f, sig, &bound);
    let ds = well_formed(&f, sig, ctx);
    if !ds.is_empty() {
        return Err(diagnostics_error("ill-formed formula", ds));
    }
    Ok(f)
}

/// Parses a formula without checking it against a signature.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_sequent(text: &str, sig: &Signature) -> Result<Sequent> {
    let mut p = Parser::new(text)?;
    let s = p.sequent()?;
    p.finish()?;
    let s = resolve_sequent(s, sig);
    let ds = check_sequent(&s, sig);
    if !ds.is_empty() {
        return Err(diagnostics_error("ill-formed sequent", ds));
    }
    Ok(s)
}

pub fn parse_signature(text: &str) -> Result<Signature> {
    let mut p = Parser::new(text)?;
    let mut sig = Signature::default();
    while !p.at_eof() {
        if !p.declaration(&mut sig)? {
            return p.err(format!(
                "expected declaration, found {}",
                describe(p.peek())
            ));
        }
    }
    Ok(sig)
}

/// Parses a theory. Declarations may come from `base` (a separate signature
/// file) and from the theory text itself.
pub fn parse_theory(text: &str, base: Option<&Signature>) -> Result<Theory> {
    let mut p = Parser::new(text)?;
    let mut sig = base.cloned().unwrap_or_default();
    let mut raw = Vec::new();
    let (mut class, mut mode) = (None, None);
    while !p.at_eof() {
        if p.declaration(&mut sig)? {
            continue;
        }
        let pos = p.pos();
        if p.eat_kw("axiom") {
            let name = p.ident()?;
            p.expect_sym(":")?;
            let s = p.sequent()?;
            raw.push((pos, name, s));
        } else if p.eat_kw("classC") {
            class = Some(p.class()?);
        } else if p.eat_kw("mode") {
            mode = Some(match p.ident()?.as_str() {
                "classical" => Mode::Classical,
                "intuitionistic" => Mode::Intuitionistic,
                m => return Err(Error::syntax(pos, format!("unknown mode `{m}`"))),
            });
        } else {
            return p.err(format!(
                "expected theory item, found {}",
                describe(p.peek())
            ));
        }
        p.expect_sym(";")?;
    }
    let mut th = Theory::new(sig);
    th.class = resolve_class(class.unwrap_or(PayoffClass::SafetyOnly), &th.signature);
    th.mode = mode.unwrap_or(Mode::Classical);
    for (pos, name, s) in raw {
        if th.axiom(&name).is_some() {
            return Err(Error::syntax(pos, format!("duplicate axiom `{name}`")));
        }
        let s = resolve_sequent(s, &th.signature);
        let ds = check_sequent(&s, &th.signature);
        if !ds.is_empty() {
            return Err(diagnostics_error(&format!("axiom `{name}`"), ds));
        }
        th.axioms.push(Axiom { name, sequent: s });
    }
    for (f, _) in th.het_subformulas() {
        if !crate::proof::formula_in_class(&f, &th.class) {
            return Err(Error::Semantic(format!(
                "heterogeneous subformula outside classC: {f}"
            )));
        }
    }
    Ok(th)
}

fn resolve_class(c: PayoffClass, sig: &Signature) -> PayoffClass {
    match c {
        PayoffClass::Explicit(specs) => PayoffClass::Explicit(
            specs
                .into_iter()
                .map(|p| StagePayoff {
                    templates: p
                        .templates
                        .iter()
                        .map(|t| resolve_constants(t, sig, &BTreeSet::new()))
                        .collect(),
                    ..p
                })
                .collect(),
        ),
        c => c,
    }
}

/// Contents of a `--class` file: an optional class declaration and extra games.
#[derive(Clone, Debug, Default)]
pub struct ClassFile {
    pub class: Option<PayoffClass>,
    pub games: Vec<(Formula, Vec<SortedVar>)>,
}

/// Parses `classC ...;` and `game f [ctx x:s];` items.
pub fn parse_class_file(text: &str, sig: &Signature) -> Result<ClassFile> {
    let mut p = Parser::new(text)?;
    let mut out = ClassFile::default();
    while !p.at_eof() {
        if p.eat_kw("classC") {
            out.class = Some(resolve_class(p.class()?, sig));
        } else if p.eat_kw("game") {
            let f = p.formula()?;
            let mut ctx = Vec::new();
            if p.eat_sym("[") {
                p.expect_kw("ctx")?;
                while !p.eat_sym("]") {
                    ctx.push(p.sorted_var()?);
                    p.eat_sym(",");
                }
            }
            let bound = ctx.iter().map(|v| v.name.clone()).collect();
            let f = resolve_constants(&f, sig, &bound);
            let ds = well_formed(&f, sig, &ctx);
            if !ds.is_empty() {
                return Err(diagnostics_error("ill-formed game", ds));
            }
            if !matches!(f, Formula::Het(_)) {
                return Err(Error::Semantic(format!(
                    "game `{f}` is not a heterogeneous formula"
                )));
            }
            out.games.push((f, ctx));
        } else {
            return p.err(format!(
                "expected `classC` or `game`, found {}",
                describe(p.peek())
            ));
        }
        p.expect_sym(";")?;
    }
    Ok(out)
}

fn lookup(m: &Structure, sort: &str, name: &str, pos: Pos) -> Result<Elem> {
    m.elem(sort, name)
        .ok_or_else(|| Error::syntax(pos, format!("`{name}` is not an element of sort `{sort}`")))
}

impl Parser {
    fn tuple(&mut self) -> Result<Vec<String>> {
        self.list("(", ")", Self::element)
    }

    /// Structure items up to end of input or a closing `}`.
    fn structure_body(&mut self, sig: &Signature) -> Result<Structure> {
        let start = self.pos();
        let mut carriers = BTreeMap::new();
        let mut items = Vec::new();
        while !self.at_eof() && !self.is_sym("}") {
            let pos = self.pos();
            if self.eat_kw("carrier") {
                let s = self.ident()?;
                self.expect_sym("=")?;
                let elems = self.list("{", "}", Self::element)?;
                if carriers.insert(s.clone(), elems).is_some() {
                    return Err(Error::syntax(pos, format!("carrier `{s}` given twice")));
                }
            } else if self.eat_kw("table") {
                let r = self.ident()?;
                self.expect_sym("=")?;
                let tuples = self.list("{", "}", |p| {
                    if p.is_sym("(") {
                        p.tuple()
                    } else {
                        Ok(vec![p.element()?])
                    }
                })?;
                items.push((
                    pos,
                    true,
                    r,
                    tuples.into_iter().map(|t| (t, None)).collect::<Vec<_>>(),
                ));
            } else if self.eat_kw("fun") {
                let f = self.ident()?;
                self.expect_sym("=")?;
                let entries = self.list("{", "}", |p| {
                    let args = p.tuple()?;
                    p.expect_sym("->")?;
                    Ok((args, Some(p.element()?)))
                })?;
                items.push((pos, false, f, entries));
            } else if self.eat_kw("const") {
                let c = self.ident()?;
                self.expect_sym("=")?;
                let e = self.element()?;
                items.push((pos, false, c, vec![(Vec::new(), Some(e))]));
            } else {
                return self.err(format!(
                    "expected structure item, found {}",
                    describe(self.peek())
                ));
            }
            self.expect_sym(";")?;
        }
        let mut m = Structure::new(sig.clone(), carriers)
            .map_err(|e| Error::syntax(start, e.to_string()))?;
        let mut seen = BTreeSet::new();
        for (pos, is_rel, name, entries) in items {
            if !seen.insert(name.clone()) {
                return Err(Error::syntax(pos, format!("`{name}` interpreted twice")));
            }
            if is_rel {
                let sorts = sig
                    .relations
                    .get(&name)
                    .ok_or_else(|| Error::syntax(pos, format!("unknown relation `{name}`")))?;
                let mut tuples = BTreeSet::new();
                for (t, _) in entries {
                    if t.len() != sorts.len() {
                        return Err(Error::syntax(
                            pos,
                            format!("tuple of wrong length for `{name}`"),
                        ));
                    }
                    let t = t
                        .iter()
                        .zip(sorts)
                        .map(|(e, s)| lookup(&m, s, e, pos))
                        .collect::<Result<Vec<_>>>()?;
                    tuples.insert(t);
                }
                m.set_relation(&name, tuples)
                    .map_err(|e| Error::syntax(pos, e.to_string()))?;
            } else {
                let (args, res) = sig
                    .functions
                    .get(&name)
                    .ok_or_else(|| Error::syntax(pos, format!("unknown function `{name}`")))?;
                let mut table = BTreeMap::new();
                for (t, v) in entries {
                    if t.len() != args.len() {
                        return Err(Error::syntax(
                            pos,
                            format!("argument tuple of wrong length for `{name}`"),
                        ));
                    }
                    let k = t
                        .iter()
                        .zip(args)
                        .map(|(e, s)| lookup(&m, s, e, pos))
                        .collect::<Result<Vec<_>>>()?;
                    let v = lookup(&m, res, &v.unwrap(), pos)?;
                    if table.insert(k, v).is_some() {
                        return Err(Error::syntax(
                            pos,
                            format!("`{name}` defined twice at one argument"),
                        ));
                    }
                }
                m.set_function(&name, table)
                    .map_err(|e| Error::syntax(pos, e.to_string()))?;
            }
        }
        m.validate()
            .map_err(|e| Error::syntax(start, e.to_string()))?;
        Ok(m)
    }
}

pub fn parse_structure(text: &str, sig: &Signature) -> Result<Structure> {
    let mut p = Parser::new(text)?;
    let m = p.structure_body(sig)?;
    p.finish()?;
    Ok(m)
}

/// A transition map as written: source, target, optional sort, element pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDecl {
    pub from: String,
    pub to: String,
    pub sort: Option<String>,
    pub pairs: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeSource {
    pub nodes: Vec<String>,
    pub order: Vec<(String, String)>,
    pub structures: BTreeMap<String, Structure>,
    pub maps: Vec<MapDecl>,
}

pub fn parse_kripke(text: &str, sig: &Signature) -> Result<KripkeSource> {
    let mut p = Parser::new(text)?;
    let mut src = KripkeSource {
        nodes: Vec::new(),
        order: Vec::new(),
        structures: BTreeMap::new(),
        maps: Vec::new(),
    };
    while !p.at_eof() {
        let pos = p.pos();
        if p.eat_kw("node") {
            loop {
                let n = p.ident()?;
                if src.nodes.contains(&n) {
                    return Err(Error::syntax(pos, format!("node `{n}` declared twice")));
                }
                src.nodes.push(n);
                if !p.eat_sym(",") {
                    break;
                }
            }
            p.expect_sym(";")?;
        } else if p.eat_kw("order") {
            loop {
                let a = p.ident()?;
                p.expect_sym("<")?;
                let b = p.ident()?;
                src.order.push((a, b));
                if !p.eat_sym(",") {
                    break;
                }
            }
            p.expect_sym(";")?;
        } else if p.eat_kw("structure") {
            let n = p.ident()?;
            p.expect_sym("{")?;
            let m = p.structure_body(sig)?;
            p.expect_sym("}")?;
            if src.structures.insert(n.clone(), m).is_some() {
                return Err(Error::syntax(
                    pos,
                    format!("structure for `{n}` given twice"),
                ));
            }
        } else if p.eat_kw("map") {
            let from = p.ident()?;
            p.expect_sym("->")?;
            let to = p.ident()?;
            let sort = if p.eat_sym(":") {
                Some(p.ident()?)
            } else {
                None
            };
            p.expect_sym("=")?;
            let pairs = p.list("{", "}", |p| {
                let a = p.element()?;
                p.expect_sym("->")?;
                Ok((a, p.element()?))
            })?;
            p.expect_sym(";")?;
            src.maps.push(MapDecl {
                from,
                to,
                sort,
                pairs,
            });
        } else {
            return p.err(format!(
                "expected Kripke item, found {}",
                describe(p.peek())
            ));
        }
    }
    for n in &src.nodes {
        if !src.structures.contains_key(n) {
            return Err(Error::Semantic(format!("node `{n}` has no structure")));
        }
    }
    if let Some(n) = src.structures.keys().find(|n| !src.nodes.contains(n)) {
        return Err(Error::Semantic(format!(
            "structure for undeclared node `{n}`"
        )));
    }
    Ok(src)
}

/// Parses an assignment `x=a, y=b` against sorted variables of a structure.
pub fn parse_assignment(
    text: &str,
    m: &Structure,
    vars: &[SortedVar],
) -> Result<crate::structure::Assignment> {
    let mut out = crate::structure::Assignment::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, e) = part
            .split_once('=')
            .ok_or_else(|| Error::Semantic(format!("expected `var=element`, got `{part}`")))?;
        let (x, e) = (x.trim(), e.trim());
        let v = vars
            .iter()
            .find(|v| v.name == x)
            .ok_or_else(|| Error::Semantic(format!("`{x}` is not a parameter")))?;
        let idx = m.elem(&v.sort, e).ok_or_else(|| {
            Error::Semantic(format!("`{e}` is not an element of sort `{}`", v.sort))
        })?;
        out.insert(x.to_string(), idx);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        parse_signature("sort s; rel E(s,s); rel P(s); rel p; rel q; const c : s; fun f(s) : s;")
            .unwrap()
    }

    #[test]
    fn minimal_signature() {
        let s = parse_signature("sort s; rel E(s,s);").unwrap();
        assert_eq!(s.sorts, vec!["s".to_string()]);
        assert_eq!(s.relations["E"], vec!["s".to_string(), "s".to_string()]);
    }

    #[test]
    fn empty_conjunction_is_top() {
        assert_eq!(parse_formula("and()").unwrap(), Formula::Top);
        assert_eq!(parse_formula("or()").unwrap(), Formula::Bottom);
    }

    #[test]
    fn omega_body_rejected() {
        let e = parse_formula("hetAE omega { payoff body p }").unwrap_err();
        assert!(
            e.to_string()
                .contains("ω-length requires safety/reach payoff"),
            "{e}"
        );
    }

    #[test]
    fn positioned_error() {
        match parse_formula("and(p,\n  ,q)").unwrap_err() {
            Error::Syntax { pos, .. } => assert_eq!(pos, Pos { line: 2, col: 3 }),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn constants_resolve_unless_bound() {
        let f = parse_formula_in(
            "and(x = c, exists [c:s] E(c, c))",
            &sig(),
            &[SortedVar::new("x", "s")],
        )
        .unwrap();
        match f {
            Formula::And(l) => {
                assert_eq!(l[0], Formula::Eq(Term::var("x"), Term::constant("c")));
                assert_eq!(
                    l[1],
                    Formula::exists(
                        vec![SortedVar::new("c", "s")],
                        Formula::atom("E", vec![Term::var("c"), Term::var("c")])
                    )
                );
            }
            f => panic!("{f}"),
        }
    }

    #[test]
    fn unresolved_name_reported() {
        let e = parse_formula_in("P(z)", &sig(), &[]).unwrap_err();
        assert!(e.to_string().contains("`z`"));
    }

    #[test]
    fn het_block_and_sequent() {
        let s = parse_sequent(
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] } |- true [ctx]",
            &sig(),
        )
        .unwrap();
        match &s.antecedent {
            Formula::Het(h) => {
                assert_eq!(h.period(), 2);
                assert_eq!(h.stage_payoff().unwrap().window, 2);
            }
            f => panic!("{f}"),
        }
    }

    #[test]
    fn theory_items() {
        let th = parse_theory(
            "sort s; rel p; rel q; axiom ax: p |- q; classC clopen; mode intuitionistic;",
            None,
        )
        .unwrap();
        assert_eq!(th.axioms.len(), 1);
        assert_eq!(th.class, PayoffClass::Clopen);
        assert_eq!(th.mode, Mode::Intuitionistic);
    }

    #[test]
    fn structure_tables() {
        let m = parse_structure(
            "carrier s = {0, 1}; table E = {(0,1)}; table P = {1}; table p = {()}; const c = 0; fun f = {(0)->1, (1)->0};",
            &sig(),
        )
        .unwrap();
        assert!(m.holds("E", &[0, 1]).unwrap());
        assert!(m.holds("p", &[]).unwrap());
        assert!(!m.holds("q", &[]).unwrap());
        assert_eq!(m.function("f").unwrap()[&vec![1]], 0);
    }

    #[test]
    fn partial_function_is_an_error() {
        assert!(
            parse_structure("carrier s = {0, 1}; const c = 0; fun f = {(0)->1};", &sig()).is_err()
        );
    }

    #[test]
    fn kripke_items() {
        let k = parse_kripke(
            "node p, q; order p < q; structure p { carrier s = {0}; const c = 0; fun f = {(0)->0}; } \
             structure q { carrier s = {0}; table p = {()}; const c = 0; fun f = {(0)->0}; } map p->q = {0->0};",
            &sig(),
        )
        .unwrap();
        assert_eq!(k.nodes, vec!["p".to_string(), "q".to_string()]);
        assert_eq!(k.maps[0].pairs, vec![("0".to_string(), "0".to_string())]);
    }
}
