//! Derivations in the heterogeneous sequent calculus.

mod axioms;
mod check;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::parse::{parse_sequent, Parser, Value};
use crate::syntax::{
    alpha_eq, Formula, Length, Payoff, PayoffClass, Polarity, Sequent, Signature, StagePayoff,
};

pub use axioms::{axiom_instance, stage_condition, InstanceData};
pub use check::{check_proof, check_step, Rejection};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTag {
    Identity,
    Substitution,
    Cut,
    EqRefl,
    EqSubst,
    ConjAx,
    ConjRule,
    DisjAx,
    DisjRule,
    ImplIntro,
    ImplElim,
    ExistsIntro,
    ExistsElim,
    ForallIntro,
    ForallElim,
    TTRule,
    HetAx1,
    HetAx2,
    HetAx3,
    HetAx4,
    PresAx1,
    PresAx2,
    DetAx,
    ExcludedMiddle,
    TheoryAx(String),
}

const SIMPLE_TAGS: [(&str, RuleTag); 24] = [
    ("Identity", RuleTag::Identity),
    ("Substitution", RuleTag::Substitution),
    ("Cut", RuleTag::Cut),
    ("EqRefl", RuleTag::EqRefl),
    ("EqSubst", RuleTag::EqSubst),
    ("ConjAx", RuleTag::ConjAx),
    ("ConjRule", RuleTag::ConjRule),
    ("DisjAx", RuleTag::DisjAx),
    ("DisjRule", RuleTag::DisjRule),
    ("ImplIntro", RuleTag::ImplIntro),
    ("ImplElim", RuleTag::ImplElim),
    ("ExistsIntro", RuleTag::ExistsIntro),
    ("ExistsElim", RuleTag::ExistsElim),
    ("ForallIntro", RuleTag::ForallIntro),
    ("ForallElim", RuleTag::ForallElim),
    ("TTRule", RuleTag::TTRule),
    ("HetAx1", RuleTag::HetAx1),
    ("HetAx2", RuleTag::HetAx2),
    ("HetAx3", RuleTag::HetAx3),
    ("HetAx4", RuleTag::HetAx4),
    ("PresAx1", RuleTag::PresAx1),
    ("PresAx2", RuleTag::PresAx2),
    ("DetAx", RuleTag::DetAx),
    ("ExcludedMiddle", RuleTag::ExcludedMiddle),
];

impl RuleTag {
    pub fn from_name(s: &str) -> Option<RuleTag> {
        SIMPLE_TAGS
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, t)| t.clone())
    }

    /// Tags whose instances are generated from a heterogeneous block.
    pub fn is_het_axiom(&self) -> bool {
        matches!(
            self,
            RuleTag::HetAx1
                | RuleTag::HetAx2
                | RuleTag::HetAx3
                | RuleTag::HetAx4
                | RuleTag::PresAx1
                | RuleTag::PresAx2
                | RuleTag::DetAx
        )
    }

    pub fn is_leaf(&self) -> bool {
        self.is_het_axiom()
            || matches!(
                self,
                RuleTag::Identity
                    | RuleTag::EqRefl
                    | RuleTag::EqSubst
                    | RuleTag::ConjAx
                    | RuleTag::DisjAx
                    | RuleTag::ExcludedMiddle
                    | RuleTag::TheoryAx(_)
            )
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTag::TheoryAx(n) => write!(f, "TheoryAx({n})"),
            t => {
                let name = SIMPLE_TAGS
                    .iter()
                    .find(|(_, u)| u == t)
                    .map(|(n, _)| *n)
                    .unwrap_or("?");
                f.write_str(name)
            }
        }
    }
}

pub type Params = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub conclusion: Sequent,
    pub rule: RuleTag,
    pub params: Params,
    pub premises: Vec<ProofTree>,
}

impl ProofTree {
    pub fn leaf(rule: RuleTag, conclusion: Sequent) -> Self {
        ProofTree {
            conclusion,
            rule,
            params: Params::new(),
            premises: Vec::new(),
        }
    }

    pub fn node(rule: RuleTag, conclusion: Sequent, premises: Vec<ProofTree>) -> Self {
        ProofTree {
            conclusion,
            rule,
            params: Params::new(),
            premises,
        }
    }

    pub fn with_param(mut self, key: &str, v: Value) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    /// The node at a premise-index path.
    pub fn at(&self, path: &[usize]) -> Option<&ProofTree> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get(*i)?.at(rest),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }
}

fn write_value(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Str(s) => write!(f, "{s:?}"),
        Value::Num(n) => write!(f, "{n}"),
        Value::Ident(s) => f.write_str(s),
        Value::List(l) => {
            f.write_str("[")?;
            for (i, x) in l.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_value(f, x)?;
            }
            f.write_str("]")
        }
    }
}

impl ProofTree {
    fn write_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = " ".repeat(indent);
        write!(
            f,
            "{pad}(rule {} conclusion {:?}",
            self.rule,
            self.conclusion.to_string()
        )?;
        if !self.params.is_empty() {
            f.write_str(" params {")?;
            for (i, (k, v)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, " {k} = ")?;
                write_value(f, v)?;
            }
            f.write_str(" }")?;
        }
        if !self.premises.is_empty() {
            f.write_str(" premises [\n")?;
            for (i, p) in self.premises.iter().enumerate() {
                if i > 0 {
                    f.write_str(",\n")?;
                }
                p.write_indented(f, indent + 2)?;
            }
            write!(f, "\n{pad}]")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

fn node(p: &mut Parser, sig: &Signature) -> Result<ProofTree> {
    p.expect_sym("(")?;
    p.expect_kw("rule")?;
    let pos = p.pos();
    let name = p.ident()?;
    let rule = if name == "TheoryAx" {
        p.expect_sym("(")?;
        let ax = p.ident()?;
        p.expect_sym(")")?;
        RuleTag::TheoryAx(ax)
    } else {
        RuleTag::from_name(&name)
            .ok_or_else(|| Error::syntax(pos, format!("unknown rule `{name}`")))?
    };
    p.expect_kw("conclusion")?;
    let pos = p.pos();
    let text = p.string()?;
    let conclusion =
        parse_sequent(&text, sig).map_err(|e| Error::syntax(pos, format!("in conclusion: {e}")))?;
    let mut params = Params::new();
    if p.eat_kw("params") {
        let entries = p.list("{", "}", |p| {
            let k = p.ident()?;
            p.expect_sym("=")?;
            Ok((k, p.value()?))
        })?;
        for (k, v) in entries {
            if params.insert(k.clone(), v).is_some() {
                return p.err(format!("duplicate parameter `{k}`"));
            }
        }
    }
    let mut premises = Vec::new();
    if p.eat_kw("premises") {
        premises = p.list("[", "]", |p| node(p, sig))?;
    }
    p.expect_sym(")")?;
    Ok(ProofTree {
        conclusion,
        rule,
        params,
        premises,
    })
}

/// Parses a proof script: one nested node record.
pub fn parse_proof(text: &str, sig: &Signature) -> Result<ProofTree> {
    let mut p = Parser::new(text)?;
    let t = node(&mut p, sig)?;
    p.finish()?;
    Ok(t)
}

fn spec_in(p: &StagePayoff, cls: &PayoffClass) -> bool {
    match cls {
        PayoffClass::Clopen => true,
        PayoffClass::SafetyOnly => p.kind == crate::syntax::StageKind::Safety,
        PayoffClass::Explicit(list) => list.iter().any(|q| {
            q.kind == p.kind
                && q.window == p.window
                && q.templates.len() == p.templates.len()
                && q.templates
                    .iter()
                    .zip(&p.templates)
                    .all(|(a, b)| alpha_eq(a, b))
        }),
    }
}

/// Whether the payoff of a heterogeneous block belongs to the class closed
/// under tails: a tail keeps the payoff and only forgets its history, and a
/// `(∃∀)` block may also be the dual `(∃∀)¬φ` of a member `φ`.
pub fn payoff_in_class(p: &StagePayoff, polarity: Polarity, cls: &PayoffClass) -> bool {
    let base = p.base();
    spec_in(&base, cls) || (polarity == Polarity::EA && spec_in(&base.negate(), cls))
}

/// Every ω-block occurring in `f` has its payoff in `cls`. Finite blocks are
/// quantifier sugar and always admitted.
pub fn formula_in_class(f: &Formula, cls: &PayoffClass) -> bool {
    let mut ok = true;
    f.visit(&mut |g| {
        if let Formula::Het(h) = g {
            if let (Length::Omega, Payoff::Stages(p)) = (&h.length, &h.payoff) {
                ok &= payoff_in_class(p, h.polarity, cls);
            }
        }
    });
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula_in, parse_signature};
    use crate::syntax::tail_block;

    fn sig() -> Signature {
        parse_signature("sort s; const one : s;").unwrap()
    }

    const COPYCAT: &str =
        "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";
    const REACH: &str = "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: reach(1)[v0 = one] }";

    #[test]
    fn class_membership() {
        let s = sig();
        let c = parse_formula_in(COPYCAT, &s, &[]).unwrap();
        let r = parse_formula_in(REACH, &s, &[]).unwrap();
        assert!(formula_in_class(&c, &PayoffClass::SafetyOnly));
        assert!(!formula_in_class(&r, &PayoffClass::SafetyOnly));
        assert!(formula_in_class(&r, &PayoffClass::Clopen));
        for beta in 1..4 {
            assert!(formula_in_class(
                &tail_block(&c, beta).unwrap(),
                &PayoffClass::SafetyOnly
            ));
        }
        let Formula::Het(h) = &c else { unreachable!() };
        assert!(formula_in_class(
            &Formula::het(h.dual()),
            &PayoffClass::SafetyOnly
        ));
    }

    #[test]
    fn explicit_class() {
        let s = sig();
        let Formula::Het(h) = parse_formula_in(REACH, &s, &[]).unwrap() else {
            unreachable!()
        };
        let Payoff::Stages(p) = &h.payoff else {
            unreachable!()
        };
        let cls = PayoffClass::Explicit(vec![p.clone()]);
        assert!(formula_in_class(&Formula::Het(h.clone()), &cls));
        assert!(!formula_in_class(
            &parse_formula_in(COPYCAT, &s, &[]).unwrap(),
            &cls
        ));
    }

    #[test]
    fn script_round_trip() {
        let s = parse_signature("sort s; rel p; rel q; rel r;").unwrap();
        let src = r#"(rule Cut conclusion "p |- r [ctx]" premises [
            (rule TheoryAx(a) conclusion "p |- q"),
            (rule TheoryAx(b) conclusion "q |- r" params { note = [1, x, "y"] })
        ])"#;
        let t = parse_proof(src, &s).unwrap();
        assert_eq!(t.rule, RuleTag::Cut);
        assert_eq!(t.premises[0].rule, RuleTag::TheoryAx("a".into()));
        assert_eq!(t.size(), 3);
        assert_eq!(parse_proof(&t.to_string(), &s).unwrap(), t);
        assert!(parse_proof("(rule Bogus conclusion \"p |- q\")", &s).is_err());
    }
}
