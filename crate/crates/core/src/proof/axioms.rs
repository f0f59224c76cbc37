//! Instances of the heterogeneous, preservation and determinacy schemata.

use crate::error::{Error, Result};
use crate::syntax::{
    lcm, parse_placeholder, stage_variables, substitute, tail_block, tail_with_moves, Formula,
    HetBlock, Length, Payoff, Polarity, Sequent, SortedVar, StageKind, StagePayoff, Subst, Term,
    Theory,
};

use super::{formula_in_class, RuleTag};

/// Instantiation data: the `(∀∃)` block, plus the play (an eventually
/// periodic sequence of term tuples) for the preservation schemata.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstanceData {
    pub block: Option<Formula>,
    pub stem: Vec<Vec<Term>>,
    pub cycle: Vec<Vec<Term>>,
    pub phi: Option<Formula>,
}

fn omega_block(f: &Formula) -> Result<&HetBlock> {
    match f {
        Formula::Het(h) if h.length == Length::Omega && h.polarity == Polarity::AE => Ok(h),
        Formula::Het(h) if h.length != Length::Omega => Err(Error::IllFormed(
            "heterogeneous axioms are instantiated at length ω only".into(),
        )),
        _ => Err(Error::IllFormed(format!(
            "expected a hetAE ω-block, found {f}"
        ))),
    }
}

/// Condition of stage `n` on a play: template `n mod |templates|` with the
/// window slots filled by the last `window` moves.
pub fn stage_condition(p: &StagePayoff, play: &[Vec<Term>], n: usize) -> Result<Formula> {
    let t = &p.templates[n % p.templates.len()];
    let mut s = Subst::new();
    for v in t.free_vars() {
        if let Some((i, j)) = parse_placeholder(&v) {
            let term = play
                .get(n + 1 + i - p.window)
                .and_then(|mv| mv.get(j))
                .ok_or_else(|| Error::IllFormed(format!("slot {v} out of range at stage {n}")))?;
            s.insert(v, term.clone());
        }
    }
    Ok(substitute(t, &s))
}

/// First move of a block bound to fresh stage variables, with its bound.
fn first_stage(f: &Formula, h: &HetBlock) -> (Vec<SortedVar>, Option<Formula>) {
    let (vars, _) = stage_variables(f, h, 1);
    let x0 = vars.into_iter().next().unwrap_or_default();
    let bound = h.bound_at(0).map(|b| {
        let s: Subst = h.schedule[0]
            .iter()
            .zip(&x0)
            .map(|(v, w)| (v.name.clone(), Term::var(&w.name)))
            .collect();
        substitute(b, &s)
    });
    (x0, bound)
}

fn preservation(f: &Formula, h: &HetBlock, data: &InstanceData) -> Result<(Formula, Formula)> {
    if h.bounds.is_some() {
        return Err(Error::IllFormed(
            "preservation instances need an unbounded block".into(),
        ));
    }
    let Payoff::Stages(p) = &h.payoff else {
        unreachable!()
    };
    if p.offset() != 0 {
        return Err(Error::IllFormed(
            "preservation instances start from a block without history".into(),
        ));
    }
    if data.cycle.is_empty() {
        return Err(Error::IllFormed("the play needs a nonempty cycle".into()));
    }
    let turns = lcm(lcm(data.cycle.len(), p.templates.len()), lcm(h.period(), 2));
    let n = data.stem.len() + p.window + turns;
    let play: Vec<Vec<Term>> = data
        .stem
        .iter()
        .chain(data.cycle.iter().cycle())
        .take(n)
        .cloned()
        .collect();
    for (k, mv) in play.iter().enumerate() {
        if mv.len() != h.block_at(k).len() {
            return Err(Error::IllFormed(format!(
                "move {k} has {} terms, block has {}",
                mv.len(),
                h.block_at(k).len()
            )));
        }
    }
    let tails = (0..n)
        .map(|b| tail_with_moves(f, &play[..b]))
        .collect::<Result<Vec<_>>>()?;
    let conds = (p.window - 1..n)
        .map(|k| stage_condition(p, &play, k))
        .collect::<Result<Vec<_>>>()?;
    let payoff = match p.kind {
        StageKind::Safety => Formula::and_flat(conds),
        StageKind::Reach => Formula::or_flat(conds),
    };
    Ok((Formula::and(tails), payoff))
}

/// The sequent of a schema instance in context `ctx`.
pub fn axiom_instance(
    tag: &RuleTag,
    data: &InstanceData,
    ctx: &[SortedVar],
    th: &Theory,
) -> Result<Sequent> {
    let ctx = ctx.to_vec();
    if let RuleTag::ExcludedMiddle = tag {
        let phi = data
            .phi
            .clone()
            .ok_or_else(|| Error::IllFormed("missing `phi`".into()))?;
        return Ok(Sequent::new(
            Formula::Top,
            Formula::Or(vec![phi.clone(), phi.negate()]),
            ctx,
        ));
    }
    if !tag.is_het_axiom() {
        return Err(Error::IllFormed(format!("{tag} is not an axiom schema")));
    }
    let f = data
        .block
        .as_ref()
        .ok_or_else(|| Error::IllFormed("missing `block`".into()))?;
    let h = omega_block(f)?;
    if !formula_in_class(f, &th.class) {
        return Err(Error::Semantic(format!("payoff outside classC: {f}")));
    }
    let dual = Formula::het(h.dual());
    let seq = match tag {
        RuleTag::HetAx1 => {
            let (x0, bound) = first_stage(f, h);
            let tail = tail_block(f, 1)?;
            let body = match bound {
                Some(b) => Formula::implies(b, tail),
                None => tail,
            };
            Sequent::new(f.clone(), Formula::forall(x0, body), ctx)
        }
        RuleTag::HetAx2 => {
            let Formula::Het(d) = &dual else {
                unreachable!()
            };
            let (x0, bound) = first_stage(&dual, d);
            let tail = tail_block(&dual, 1)?;
            let body = match bound {
                Some(b) => Formula::And(vec![b, tail]),
                None => tail,
            };
            Sequent::new(dual.clone(), Formula::exists(x0, body), ctx)
        }
        // below ω the only limit β is 0, where the split prefix is empty
        RuleTag::HetAx3 => Sequent::new(f.clone(), f.clone(), ctx),
        RuleTag::HetAx4 => Sequent::new(dual.clone(), dual, ctx),
        RuleTag::PresAx1 => {
            let (a, s) = preservation(f, h, data)?;
            Sequent::new(a, s, ctx)
        }
        RuleTag::PresAx2 => {
            let Formula::Het(d) = &dual else {
                unreachable!()
            };
            let (a, _) = preservation(&dual, d, data)?;
            let (_, s) = preservation(f, h, data)?;
            Sequent::new(a, s.negate(), ctx)
        }
        RuleTag::DetAx => Sequent::new(Formula::Top, Formula::Or(vec![f.clone(), dual]), ctx),
        _ => unreachable!(),
    };
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula_in, parse_sequent, parse_theory};
    use crate::syntax::{alpha_eq, PayoffClass};

    const COPYCAT: &str =
        "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";
    const REACH: &str = "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: reach(1)[v0 = one] }";

    fn theory(class: &str) -> Theory {
        parse_theory(&format!("sort s; const one : s; classC {class};"), None).unwrap()
    }

    fn data(th: &Theory, src: &str) -> InstanceData {
        InstanceData {
            block: Some(parse_formula_in(src, &th.signature, &[]).unwrap()),
            ..Default::default()
        }
    }

    #[test]
    fn determinacy_shape() {
        let th = theory("safety");
        let s = axiom_instance(&RuleTag::DetAx, &data(&th, COPYCAT), &[], &th).unwrap();
        let want = parse_sequent(
            &format!(
                "true |- or({COPYCAT}, hetEA {{ len: omega; sched: [[x:s], [y:s]]; payoff: reach(2)[not(true), not(v0 = v1)] }})"
            ),
            &th.signature,
        )
        .unwrap();
        assert!(alpha_eq(&s.succedent, &want.succedent));
        assert_eq!(s.antecedent, Formula::Top);
    }

    #[test]
    fn het_ax1_shape() {
        let th = theory("safety");
        let s = axiom_instance(&RuleTag::HetAx1, &data(&th, COPYCAT), &[], &th).unwrap();
        let Formula::Forall(vs, body) = &s.succedent else {
            panic!("{}", s.succedent)
        };
        assert_eq!(vs.len(), 1);
        let Formula::Het(t) = &**body else { panic!() };
        assert_eq!(t.polarity, Polarity::EA);
        assert_eq!(
            t.stage_payoff().unwrap().history,
            vec![vec![Term::var(&vs[0].name)]]
        );
    }

    #[test]
    fn class_gate() {
        let th = theory("safety");
        let e = axiom_instance(&RuleTag::DetAx, &data(&th, REACH), &[], &th).unwrap_err();
        assert!(matches!(e, Error::Semantic(_)));
        let th = theory("clopen");
        assert!(axiom_instance(&RuleTag::DetAx, &data(&th, REACH), &[], &th).is_ok());
        assert!(matches!(th.class, PayoffClass::Clopen));
    }

    #[test]
    fn preservation_shape() {
        let th = theory("safety");
        let mut d = data(&th, COPYCAT);
        d.cycle = vec![vec![Term::var("a")]];
        let ctx = [SortedVar::new("a", "s")];
        let s = axiom_instance(&RuleTag::PresAx1, &d, &ctx, &th).unwrap();
        // n = stem + window + lcm(1, 2, 1, 2) = 4 tails; stages 1..4 conditions
        let Formula::And(tails) = &s.antecedent else {
            panic!()
        };
        assert_eq!(tails.len(), 4);
        let Formula::And(conds) = &s.succedent else {
            panic!()
        };
        assert_eq!(conds.len(), 3);
        assert_eq!(conds[0], Formula::eq(Term::var("a"), Term::var("a")));
    }
}
