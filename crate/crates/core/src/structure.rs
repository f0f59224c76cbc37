//! Finite many-sorted structures and Tarskian evaluation.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::game;
use crate::syntax::{desugar_finite_block, Formula, Length, Signature, SortedVar, Term};

/// Index of an element within the carrier of its sort.
pub type Elem = usize;

/// Variable assignment.
pub type Assignment = BTreeMap<String, Elem>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub signature: Signature,
    carriers: BTreeMap<String, Vec<String>>,
    relations: BTreeMap<String, BTreeSet<Vec<Elem>>>,
    functions: BTreeMap<String, BTreeMap<Vec<Elem>, Elem>>,
}

impl Structure {
    /// A structure with the given carriers and every relation empty.
    /// Function tables must be filled before [`Structure::validate`].
    pub fn new(signature: Signature, carriers: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for s in &signature.sorts {
            match carriers.get(s) {
                None => return Err(Error::Semantic(format!("no carrier for sort `{s}`"))),
                Some(c) if c.is_empty() => {
                    return Err(Error::Semantic(format!("carrier of `{s}` is empty")))
                }
                Some(c) => {
                    let distinct: BTreeSet<&String> = c.iter().collect();
                    if distinct.len() != c.len() {
                        return Err(Error::Semantic(format!(
                            "carrier of `{s}` repeats an element"
                        )));
                    }
                }
            }
        }
        if let Some(s) = carriers.keys().find(|s| !signature.has_sort(s)) {
            return Err(Error::Semantic(format!(
                "carrier for undeclared sort `{s}`"
            )));
        }
        let relations = signature
            .relations
            .keys()
            .map(|r| (r.clone(), BTreeSet::new()))
            .collect();
        Ok(Structure {
            signature,
            carriers,
            relations,
            functions: BTreeMap::new(),
        })
    }

    /// One-sorted convenience constructor with elements named `0 .. n-1`.
    pub fn with_size(signature: Signature, sort: &str, n: usize) -> Result<Self> {
        let carriers = [(sort.to_string(), (0..n).map(|i| i.to_string()).collect())].into();
        Structure::new(signature, carriers)
    }

    pub fn carrier(&self, sort: &str) -> &[String] {
        self.carriers.get(sort).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn carriers(&self) -> &BTreeMap<String, Vec<String>> {
        &self.carriers
    }

    pub fn size(&self, sort: &str) -> usize {
        self.carrier(sort).len()
    }

    pub fn elem(&self, sort: &str, name: &str) -> Option<Elem> {
        self.carrier(sort).iter().position(|e| e == name)
    }

    pub fn elem_name(&self, sort: &str, e: Elem) -> &str {
        &self.carrier(sort)[e]
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Vec<Elem>>> {
        self.relations.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&BTreeMap<Vec<Elem>, Elem>> {
        self.functions.get(name)
    }

    pub fn set_relation(&mut self, name: &str, tuples: BTreeSet<Vec<Elem>>) -> Result<()> {
        let sorts = self
            .signature
            .relations
            .get(name)
            .ok_or_else(|| Error::Semantic(format!("unknown relation `{name}`")))?;
        for t in &tuples {
            if t.len() != sorts.len() || t.iter().zip(sorts).any(|(e, s)| *e >= self.size(s)) {
                return Err(Error::Semantic(format!("bad tuple {t:?} for `{name}`")));
            }
        }
        self.relations.insert(name.to_string(), tuples);
        Ok(())
    }

    pub fn set_function(&mut self, name: &str, table: BTreeMap<Vec<Elem>, Elem>) -> Result<()> {
        let (args, res) = self
            .signature
            .functions
            .get(name)
            .ok_or_else(|| Error::Semantic(format!("unknown function `{name}`")))?;
        for (k, v) in &table {
            if k.len() != args.len()
                || k.iter().zip(args).any(|(e, s)| *e >= self.size(s))
                || *v >= self.size(res)
            {
                return Err(Error::Semantic(format!(
                    "bad entry {k:?} -> {v} for `{name}`"
                )));
            }
        }
        self.functions.insert(name.to_string(), table);
        Ok(())
    }

    /// Checks that every function table is total.
    pub fn validate(&self) -> Result<()> {
        for (f, (args, _)) in &self.signature.functions {
            let table = self
                .functions
                .get(f)
                .ok_or_else(|| Error::Semantic(format!("no table for `{f}`")))?;
            let expected: usize = args.iter().map(|s| self.size(s)).product();
            if table.len() != expected {
                return Err(Error::Semantic(format!("function `{f}` is not total")));
            }
        }
        Ok(())
    }

    /// All tuples over the carriers of the given sorts, in lexicographic order.
    pub fn tuples(&self, sorts: &[&str]) -> Vec<Vec<Elem>> {
        let mut out = vec![Vec::new()];
        for s in sorts {
            let n = self.size(s);
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..n).map(move |e| {
                        let mut t = t.clone();
                        t.push(e);
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Every assignment of the given variables.
    pub fn assignments(&self, vars: &[SortedVar]) -> Vec<Assignment> {
        let sorts: Vec<&str> = vars.iter().map(|v| v.sort.as_str()).collect();
        self.tuples(&sorts)
            .into_iter()
            .map(|t| vars.iter().map(|v| v.name.clone()).zip(t).collect())
            .collect()
    }

    pub fn eval_term(&self, t: &Term, a: &Assignment) -> Result<Elem> {
        match t {
            Term::Var(v) => a
                .get(v)
                .copied()
                .ok_or_else(|| Error::eval(format!("variable `{v}` is unassigned"))),
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|x| self.eval_term(x, a))
                    .collect::<Result<Vec<_>>>()?;
                self.functions
                    .get(f)
                    .and_then(|tbl| tbl.get(&vals))
                    .copied()
                    .ok_or_else(|| Error::eval(format!("`{f}` undefined at {vals:?}")))
            }
        }
    }

    pub fn holds(&self, rel: &str, args: &[Elem]) -> Result<bool> {
        self.relations
            .get(rel)
            .map(|t| t.contains(args))
            .ok_or_else(|| Error::eval(format!("unknown relation `{rel}`")))
    }
}

/// Classical evaluation. Heterogeneous subformulas are delegated to the game
/// solver; finite blocks are expanded into nested quantifiers first.
pub fn eval_tarski(m: &Structure, f: &Formula, a: &Assignment) -> Result<bool> {
    match f {
        Formula::Atom(r, args) => {
            let vals = args
                .iter()
                .map(|t| m.eval_term(t, a))
                .collect::<Result<Vec<_>>>()?;
            m.holds(r, &vals)
        }
        Formula::Eq(l, r) => Ok(m.eval_term(l, a)? == m.eval_term(r, a)?),
        Formula::Top => Ok(true),
        Formula::Bottom => Ok(false),
        Formula::And(l) => {
            for g in l {
                if !eval_tarski(m, g, a)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(l) => {
            for g in l {
                if eval_tarski(m, g, a)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Implies(p, q) => Ok(!eval_tarski(m, p, a)? || eval_tarski(m, q, a)?),
        Formula::Exists(vs, b) => {
            for ext in m.assignments(vs) {
                let mut inner = a.clone();
                inner.extend(ext);
                if eval_tarski(m, b, &inner)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Forall(vs, b) => {
            for ext in m.assignments(vs) {
                let mut inner = a.clone();
                inner.extend(ext);
                if !eval_tarski(m, b, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Het(h) => match h.length {
            Length::Finite(_) => eval_tarski(m, &desugar_finite_block(f)?, a),
            Length::Omega => game::eval_het(m, f, a),
        },
    }
}

/// Tuples (in the order of `vars`) satisfying `f`.
pub fn extension(m: &Structure, f: &Formula, vars: &[SortedVar]) -> Result<BTreeSet<Vec<Elem>>> {
    let mut out = BTreeSet::new();
    for a in m.assignments(vars) {
        if eval_tarski(m, f, &a)? {
            out.insert(vars.iter().map(|v| a[&v.name]).collect());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> Structure {
        let mut sig = Signature::default();
        sig.add_sort("s").unwrap();
        sig.add_function("zero", vec![], "s".into()).unwrap();
        sig.add_function("one", vec![], "s".into()).unwrap();
        let mut m = Structure::with_size(sig, "s", 2).unwrap();
        m.set_function("zero", [(vec![], 0)].into()).unwrap();
        m.set_function("one", [(vec![], 1)].into()).unwrap();
        m.validate().unwrap();
        m
    }

    fn x() -> SortedVar {
        SortedVar::new("x", "s")
    }

    #[test]
    fn equality_of_constants() {
        let f = Formula::eq(Term::constant("zero"), Term::constant("zero"));
        assert!(eval_tarski(&m2(), &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn forall_exists_equal() {
        let f = Formula::forall(
            vec![x()],
            Formula::exists(
                vec![SortedVar::new("y", "s")],
                Formula::eq(Term::var("x"), Term::var("y")),
            ),
        );
        assert!(eval_tarski(&m2(), &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn no_element_is_both() {
        let f = Formula::exists(
            vec![x()],
            Formula::And(vec![
                Formula::eq(Term::var("x"), Term::constant("zero")),
                Formula::eq(Term::var("x"), Term::constant("one")),
            ]),
        );
        assert!(!eval_tarski(&m2(), &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let f = Formula::eq(Term::var("x"), Term::var("x"));
        assert!(eval_tarski(&m2(), &f, &Assignment::new()).is_err());
    }

    #[test]
    fn partial_function_rejected() {
        let mut sig = Signature::default();
        sig.add_sort("s").unwrap();
        sig.add_function("f", vec!["s".into()], "s".into()).unwrap();
        let mut m = Structure::with_size(sig, "s", 2).unwrap();
        m.set_function("f", [(vec![0], 1)].into()).unwrap();
        assert!(m.validate().is_err());
    }
}
