//! Pretty-printing in the concrete syntax accepted by [`crate::parse`].

use std::fmt::{self, Display, Formatter, Write};

use crate::structure::Structure;
use crate::syntax::{
    Formula, HetBlock, Length, Mode, Payoff, PayoffClass, Polarity, Sequent, Signature, SortedVar,
    StageKind, StagePayoff, Term, Theory,
};

fn comma_sep<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(c, args) if args.is_empty() => f.write_str(c),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                comma_sep(f, args)?;
                f.write_str(")")
            }
        }
    }
}

pub(crate) struct VarList<'a>(pub &'a [SortedVar]);

impl Display for VarList<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        comma_sep(f, self.0)?;
        f.write_str("]")
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(r, args) if args.is_empty() => f.write_str(r),
            Formula::Atom(r, args) => {
                write!(f, "{r}(")?;
                comma_sep(f, args)?;
                f.write_str(")")
            }
            Formula::Eq(l, r) => write!(f, "{l} = {r}"),
            Formula::Top => f.write_str("true"),
            Formula::Bottom => f.write_str("false"),
            Formula::And(l) => {
                f.write_str("and(")?;
                comma_sep(f, l)?;
                f.write_str(")")
            }
            Formula::Or(l) => {
                f.write_str("or(")?;
                comma_sep(f, l)?;
                f.write_str(")")
            }
            Formula::Implies(a, b) if **b == Formula::Bottom => write!(f, "not({a})"),
            Formula::Implies(a, b) => write!(f, "implies({a}, {b})"),
            Formula::Exists(vs, b) => write!(f, "exists {} {b}", VarList(vs)),
            Formula::Forall(vs, b) => write!(f, "forall {} {b}", VarList(vs)),
            Formula::Het(h) => write!(f, "{h}"),
        }
    }
}

impl Display for StagePayoff {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let kw = match self.kind {
            StageKind::Safety => "safety",
            StageKind::Reach => "reach",
        };
        write!(f, "{kw}({})[", self.window)?;
        comma_sep(f, &self.templates)?;
        f.write_str("]")?;
        if !self.history.is_empty() {
            f.write_str(" history [")?;
            for (i, mv) in self.history.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str("[")?;
                comma_sep(f, mv)?;
                f.write_str("]")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl Display for HetBlock {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let kw = match self.polarity {
            Polarity::AE => "hetAE",
            Polarity::EA => "hetEA",
        };
        write!(f, "{kw} {{ len: ")?;
        match self.length {
            Length::Finite(n) => write!(f, "{n}")?,
            Length::Omega => f.write_str("omega")?,
        }
        f.write_str("; sched: [")?;
        for (i, b) in self.schedule.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", VarList(b))?;
        }
        f.write_str("]")?;
        if let Some(bs) = &self.bounds {
            f.write_str("; bounds: [")?;
            comma_sep(f, bs)?;
            f.write_str("]")?;
        }
        f.write_str("; payoff: ")?;
        match &self.payoff {
            Payoff::Body(b) => write!(f, "body {b}")?,
            Payoff::Stages(p) => write!(f, "{p}")?,
        }
        f.write_str(" }")
    }
}

impl Display for Sequent {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {} [ctx ", self.antecedent, self.succedent)?;
        comma_sep(f, &self.context)?;
        f.write_str("]")
    }
}

impl Display for Signature {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for s in &self.sorts {
            writeln!(f, "sort {s};")?;
        }
        for (r, args) in &self.relations {
            writeln!(f, "rel {r}({});", args.join(", "))?;
        }
        for (g, (args, res)) in &self.functions {
            if args.is_empty() {
                writeln!(f, "const {g} : {res};")?;
            } else {
                writeln!(f, "fun {g}({}) : {res};", args.join(", "))?;
            }
        }
        Ok(())
    }
}

impl Display for PayoffClass {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PayoffClass::SafetyOnly => f.write_str("safety"),
            PayoffClass::Clopen => f.write_str("clopen"),
            PayoffClass::Explicit(list) => {
                f.write_str("{ ")?;
                for (i, p) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(" }")
            }
        }
    }
}

impl Display for Theory {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature)?;
        for ax in &self.axioms {
            writeln!(f, "axiom {}: {};", ax.name, ax.sequent)?;
        }
        writeln!(f, "classC {};", self.class)?;
        let mode = match self.mode {
            Mode::Classical => "classical",
            Mode::Intuitionistic => "intuitionistic",
        };
        writeln!(f, "mode {mode};")
    }
}

impl Display for Structure {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let sig = &self.signature;
        for s in &sig.sorts {
            writeln!(f, "carrier {s} = {{{}}};", self.carrier(s).join(", "))?;
        }
        for (r, sorts) in &sig.relations {
            let rows: Vec<String> = self
                .relation(r)
                .into_iter()
                .flatten()
                .map(|t| {
                    let names: Vec<&str> = t.iter().zip(sorts).map(|(&e, s)| self.elem_name(s, e)).collect();
                    format_move(&names)
                })
                .collect();
            writeln!(f, "table {r} = {{{}}};", rows.join(", "))?;
        }
        for (g, (args, res)) in &sig.functions {
            let Some(table) = self.function(g) else { continue };
            if args.is_empty() {
                if let Some(e) = table.get(&Vec::new()) {
                    writeln!(f, "const {g} = {};", self.elem_name(res, *e))?;
                }
                continue;
            }
            let rows: Vec<String> = table
                .iter()
                .map(|(xs, y)| {
                    let names: Vec<&str> = xs.iter().zip(args).map(|(&e, s)| self.elem_name(s, e)).collect();
                    format!("{} -> {}", format_move(&names), self.elem_name(res, *y))
                })
                .collect();
            writeln!(f, "fun {g} = {{{}}};", rows.join(", "))?;
        }
        Ok(())
    }
}

/// Renders a move tuple as `(a, b)` using element names.
pub fn format_move(names: &[&str]) -> String {
    let mut out = String::from("(");
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{n}");
    }
    out.push(')');
    out
}

#[cfg(test)]
mod tests {
    use crate::parse::{parse_signature, parse_structure};

    #[test]
    fn structure_round_trip() {
        let sig = parse_signature("sort s; rel E(s, s); rel p; fun f(s) : s; const c : s;").unwrap();
        let m = parse_structure(
            "carrier s = {a, b}; table E = {(a, b)}; table p = {()}; fun f = {(a) -> b, (b) -> a}; const c = b;",
            &sig,
        )
        .unwrap();
        let text = m.to_string();
        let back = parse_structure(&text, &sig).unwrap();
        assert_eq!(back.to_string(), text);
        assert!(text.contains("table p = {()};"), "{text}");
    }
}
