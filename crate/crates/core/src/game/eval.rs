use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::structure::{eval_tarski, Assignment, Elem, Structure};
use crate::syntax::{desugar_finite_block, Formula, Length, SortedVar};

use super::arena::{build_arena_with, Arena};
use super::solve::{solve_game, GameResult};
use super::{tarski_test, StageTest, DEFAULT_MAX_POSITIONS};

/// Builds and solves the game of `f`.
pub fn solve_formula(m: &Structure, f: &Formula, a: &Assignment) -> Result<(Arena, GameResult)> {
    let ar = build_arena_with(m, f, a, &tarski_test(m), DEFAULT_MAX_POSITIONS)?;
    let r = solve_game(&ar);
    Ok((ar, r))
}

/// Truth of a heterogeneous formula: the existential player wins from the
/// initial position. Finite blocks go through their quantifier expansion.
pub fn eval_het(m: &Structure, f: &Formula, a: &Assignment) -> Result<bool> {
    match f {
        Formula::Het(h) if h.length != Length::Omega => {
            eval_tarski(m, &desugar_finite_block(f)?, a)
        }
        Formula::Het(_) => eval_het_game(m, f, a),
        _ => Err(Error::IllFormed(format!(
            "not a heterogeneous formula: {f}"
        ))),
    }
}

/// Truth via the arena for every block length (finite blocks as game trees).
pub fn eval_het_game(m: &Structure, f: &Formula, a: &Assignment) -> Result<bool> {
    let (ar, r) = solve_formula(m, f, a)?;
    Ok(r.exists_wins(ar.initial))
}

/// Game evaluation with a custom stage test.
pub fn eval_het_with(
    m: &Structure,
    f: &Formula,
    a: &Assignment,
    test: &StageTest<'_>,
) -> Result<bool> {
    let ar = build_arena_with(m, f, a, test, DEFAULT_MAX_POSITIONS)?;
    Ok(solve_game(&ar).exists_wins(ar.initial))
}

/// Parameter tuples (ordered as `params`) at which `f` holds.
pub fn het_extension(
    m: &Structure,
    f: &Formula,
    params: &[SortedVar],
) -> Result<BTreeSet<Vec<Elem>>> {
    let mut out = BTreeSet::new();
    for a in m.assignments(params) {
        if eval_het(m, f, &a)? {
            out.insert(params.iter().map(|v| a[&v.name]).collect());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula_in, parse_signature, parse_structure};
    use crate::syntax::HetBlock;

    fn m(carrier: &str) -> Structure {
        let sig = parse_signature("sort s; const one : s; rel E(s,s);").unwrap();
        let table = if carrier.contains('0') { "(0,1),(1,1)" } else { "(1,1)" };
        parse_structure(
            &format!("carrier s = {{{carrier}}}; const one = 1; table E = {{{table}}};"),
            &sig,
        )
        .unwrap()
    }

    fn y() -> Vec<SortedVar> {
        vec![SortedVar::new("y", "s")]
    }

    const COPYCAT: &str =
        "hetAE { len: omega; sched: [[x:s], [z:s]]; payoff: safety(2)[true, v0 = v1] }";
    // stage 0, 2, ... are universal
    const FORALL_EQ_Y: &str =
        "hetAE { len: omega; sched: [[x:s], [z:s]]; payoff: safety(1)[v0 = y, true] }";
    const EXISTS_EQ_Y: &str =
        "hetAE { len: omega; sched: [[x:s], [z:s]]; payoff: safety(1)[true, v0 = y] }";

    #[test]
    fn copycat_true() {
        let m = m("0, 1");
        let f = parse_formula_in(COPYCAT, &m.signature, &[]).unwrap();
        assert!(eval_het(&m, &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn universal_moves_equal_y() {
        let m2 = m("0, 1");
        let f = parse_formula_in(FORALL_EQ_Y, &m2.signature, &y()).unwrap();
        assert!(het_extension(&m2, &f, &y()).unwrap().is_empty());
        let m1 = m("1");
        assert_eq!(het_extension(&m1, &f, &y()).unwrap().len(), 1);
    }

    #[test]
    fn existential_moves_equal_y() {
        let m2 = m("0, 1");
        let f = parse_formula_in(EXISTS_EQ_Y, &m2.signature, &y()).unwrap();
        assert_eq!(het_extension(&m2, &f, &y()).unwrap().len(), 2);
    }

    #[test]
    fn dual_is_complement() {
        let m2 = m("0, 1");
        let f = parse_formula_in(FORALL_EQ_Y, &m2.signature, &y()).unwrap();
        let Formula::Het(h) = &f else { unreachable!() };
        let d = Formula::het(HetBlock::dual(h));
        let ext = het_extension(&m2, &f, &y()).unwrap();
        let dext = het_extension(&m2, &d, &y()).unwrap();
        assert!(ext.is_disjoint(&dext));
        assert_eq!(ext.len() + dext.len(), 2);
    }

    #[test]
    fn finite_block_routes_agree() {
        let m2 = m("0, 1");
        for src in [
            "hetAE { len: 2; sched: [[x:s], [z:s]]; payoff: body E(x, z) }",
            "hetEA { len: 2; sched: [[x:s], [z:s]]; payoff: body E(x, z) }",
            "hetEA { len: 3; sched: [[x:s], [z:s], [w:s]]; bounds: [E(x,x), true, w = one]; payoff: body E(x, w) }",
        ] {
            let f = parse_formula_in(src, &m2.signature, &[]).unwrap();
            let a = Assignment::new();
            assert_eq!(eval_het(&m2, &f, &a).unwrap(), eval_het_game(&m2, &f, &a).unwrap(), "{src}");
        }
    }
}
