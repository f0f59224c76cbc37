//! Back-translation of Σ^m proofs into proofs over the source signature.

use crate::parse::{parse_formula, Value};
use crate::proof::{axiom_instance, check_proof, InstanceData, ProofTree, Rejection, RuleTag};
use crate::syntax::{
    alpha_eq, substitute, Formula, HetBlock, Mode, Payoff, Polarity, Sequent, SortedVar, Subst,
    Theory,
};

use super::{Clause, Dir, MorleyizedTheory};

type P = ProofTree;

fn not(f: &Formula) -> Formula {
    Formula::not(f.clone())
}

fn seq(a: Formula, s: Formula, ctx: &[SortedVar]) -> Sequent {
    Sequent::new(a, s, ctx.to_vec())
}

fn id(ctx: &[SortedVar], f: &Formula) -> P {
    P::leaf(RuleTag::Identity, seq(f.clone(), f.clone(), ctx))
}

fn cut(p: P, q: P) -> P {
    let c = seq(p.conclusion.antecedent.clone(), q.conclusion.succedent.clone(), &p.conclusion.context);
    P::node(RuleTag::Cut, c, vec![p, q])
}

fn conj_ax(ctx: &[SortedVar], list: &[Formula], k: usize) -> P {
    P::leaf(RuleTag::ConjAx, seq(Formula::And(list.to_vec()), list[k].clone(), ctx))
}

fn disj_ax(ctx: &[SortedVar], list: &[Formula], k: usize) -> P {
    P::leaf(RuleTag::DisjAx, seq(list[k].clone(), Formula::Or(list.to_vec()), ctx))
}

/// `a ⊢ target` when `target` is a nested conjunct of `a`.
fn proj(ctx: &[SortedVar], a: &Formula, target: &Formula) -> Option<P> {
    if alpha_eq(a, target) {
        return Some(id(ctx, a));
    }
    let Formula::And(l) = a else { return None };
    l.iter()
        .enumerate()
        .find_map(|(k, g)| proj(ctx, g, target).map(|p| cut(conj_ax(ctx, l, k), p)))
}

fn pair(ctx: &[SortedVar], a: &Formula, ps: Vec<P>) -> P {
    let succ = Formula::And(ps.iter().map(|p| p.conclusion.succedent.clone()).collect());
    P::node(RuleTag::ConjRule, seq(a.clone(), succ, ctx), ps)
}

fn from_bot(ctx: &[SortedVar], goal: &Formula) -> P {
    P::leaf(RuleTag::DisjRule, seq(Formula::Bottom, goal.clone(), ctx))
}

fn to_top(ctx: &[SortedVar], a: &Formula) -> P {
    P::leaf(RuleTag::ConjRule, seq(a.clone(), Formula::Top, ctx))
}

fn em(ctx: &[SortedVar], f: &Formula) -> P {
    P::leaf(RuleTag::ExcludedMiddle, seq(Formula::Top, Formula::Or(vec![f.clone(), not(f)]), ctx))
}

/// `φ ∧ ψ ⊢ η` to `φ ⊢ ψ → η`.
fn impl_intro(p: P) -> P {
    let c = &p.conclusion;
    let Formula::And(l) = &c.antecedent else { unreachable!() };
    let s = seq(l[0].clone(), Formula::implies(l[1].clone(), c.succedent.clone()), &c.context);
    P::node(RuleTag::ImplIntro, s, vec![p])
}

fn impl_elim(p: P) -> P {
    let c = &p.conclusion;
    let Formula::Implies(a, b) = &c.succedent else { unreachable!() };
    let s = seq(Formula::And(vec![c.antecedent.clone(), (**a).clone()]), (**b).clone(), &c.context);
    P::node(RuleTag::ImplElim, s, vec![p])
}

/// `φ ∧ ¬φ ⊢ ⊥`.
fn contra(ctx: &[SortedVar], f: &Formula) -> P {
    let a = Formula::And(vec![f.clone(), not(f)]);
    let swap = pair(ctx, &a, vec![conj_ax(ctx, &[f.clone(), not(f)], 1), conj_ax(ctx, &[f.clone(), not(f)], 0)]);
    cut(swap, impl_elim(id(ctx, &not(f))))
}

/// `a ⊢ goal` from the conjuncts `φ` and `¬φ` of `a`.
fn absurd(ctx: &[SortedVar], a: &Formula, f: &Formula, goal: &Formula) -> Option<P> {
    let both = pair(ctx, a, vec![proj(ctx, a, f)?, proj(ctx, a, &not(f))?]);
    Some(cut(both, cut(contra(ctx, f), from_bot(ctx, goal))))
}

/// `a ⊢ g` from `a ∧ φ ⊢ g` and `a ∧ ¬φ ⊢ g`.
fn by_cases(ctx: &[SortedVar], a: &Formula, f: &Formula, pos: P, neg: P) -> P {
    let goal = pos.conclusion.succedent.clone();
    let flip = |g: &Formula, p: P| {
        let swapped = Formula::And(vec![g.clone(), a.clone()]);
        let s = pair(ctx, &swapped, vec![proj(ctx, &swapped, a).unwrap(), conj_ax(ctx, &[g.clone(), a.clone()], 0)]);
        impl_intro(cut(s, p))
    };
    let cases = P::node(
        RuleTag::DisjRule,
        seq(Formula::Or(vec![f.clone(), not(f)]), Formula::implies(a.clone(), goal), ctx),
        vec![flip(f, pos), flip(&not(f), neg)],
    );
    let imp = cut(to_top(ctx, a), cut(em(ctx, f), cases));
    cut(pair(ctx, a, vec![id(ctx, a), id(ctx, a)]), impl_elim(imp))
}

fn forall_elim(p: P, ys: &[SortedVar]) -> P {
    let c = &p.conclusion;
    let Formula::Forall(_, body) = &c.succedent else { unreachable!() };
    let mut wide = c.context.clone();
    wide.extend(ys.iter().cloned());
    let s = seq(c.antecedent.clone(), (**body).clone(), &wide);
    P::node(RuleTag::ForallElim, s, vec![p])
}

fn forall_intro(p: P, ys: &[SortedVar], narrow: &[SortedVar]) -> P {
    let c = &p.conclusion;
    let s = seq(c.antecedent.clone(), Formula::Forall(ys.to_vec(), Box::new(c.succedent.clone())), narrow);
    P::node(RuleTag::ForallIntro, s, vec![p])
}

fn exists_elim(p: P, ys: &[SortedVar], narrow: &[SortedVar]) -> P {
    let c = &p.conclusion;
    let s = seq(Formula::Exists(ys.to_vec(), Box::new(c.antecedent.clone())), c.succedent.clone(), narrow);
    P::node(RuleTag::ExistsElim, s, vec![p])
}

fn exists_intro(p: P, ys: &[SortedVar]) -> P {
    let c = &p.conclusion;
    let Formula::Exists(_, body) = &c.antecedent else { unreachable!() };
    let mut wide = c.context.clone();
    wide.extend(ys.iter().cloned());
    let s = seq((**body).clone(), c.succedent.clone(), &wide);
    P::node(RuleTag::ExistsIntro, s, vec![p])
}

fn wide(ctx: &[SortedVar], ys: &[SortedVar]) -> Vec<SortedVar> {
    let mut w = ctx.to_vec();
    w.extend(ys.iter().cloned());
    w
}

/// `¬⋀ l ⊢ ⋁ ¬l` by cases on each conjunct in turn.
fn de_morgan(ctx: &[SortedVar], l: &[Formula]) -> Option<P> {
    let negs: Vec<Formula> = l.iter().map(not).collect();
    let goal = Formula::Or(negs.clone());
    let conj = Formula::And(l.to_vec());
    fn go(ctx: &[SortedVar], l: &[Formula], negs: &[Formula], a: Formula, k: usize, conj: &Formula, goal: &Formula) -> Option<P> {
        if k == l.len() {
            let all = pair(ctx, &a, l.iter().map(|g| proj(ctx, &a, g)).collect::<Option<_>>()?);
            let both = pair(ctx, &a, vec![all, proj(ctx, &a, &not(conj))?]);
            return Some(cut(both, cut(contra(ctx, conj), from_bot(ctx, goal))));
        }
        let pos_a = Formula::And(vec![a.clone(), l[k].clone()]);
        let pos = go(ctx, l, negs, pos_a, k + 1, conj, goal)?;
        let neg_a = Formula::And(vec![a.clone(), negs[k].clone()]);
        let neg = cut(proj(ctx, &neg_a, &negs[k])?, disj_ax(ctx, negs, k));
        Some(by_cases(ctx, &a, &l[k], pos, neg))
    }
    go(ctx, l, &negs, not(&conj), 0, &conj, &goal)
}

/// `⋁ ¬l ⊢ ¬⋀ l`.
fn de_morgan_back(ctx: &[SortedVar], l: &[Formula]) -> P {
    let conj = Formula::And(l.to_vec());
    let prems = (0..l.len())
        .map(|i| {
            let a = Formula::And(vec![not(&l[i]), conj.clone()]);
            let li = cut(conj_ax(ctx, &[not(&l[i]), conj.clone()], 1), conj_ax(ctx, l, i));
            let both = pair(ctx, &a, vec![li, conj_ax(ctx, &[not(&l[i]), conj.clone()], 0)]);
            impl_intro(cut(both, contra(ctx, &l[i])))
        })
        .collect();
    let s = seq(Formula::Or(l.iter().map(not).collect()), not(&conj), ctx);
    P::node(RuleTag::DisjRule, s, prems)
}

/// `a → b ⊢ ¬a ∨ b`.
fn implication(ctx: &[SortedVar], a: &Formula, b: &Formula) -> Option<P> {
    let imp = Formula::implies(a.clone(), b.clone());
    let goal = [not(a), b.clone()];
    let pos = cut(impl_elim(id(ctx, &imp)), disj_ax(ctx, &goal, 1));
    let neg_a = Formula::And(vec![imp.clone(), not(a)]);
    let neg = cut(proj(ctx, &neg_a, &not(a))?, disj_ax(ctx, &goal, 0));
    Some(by_cases(ctx, &imp, a, pos, neg))
}

/// `¬a ∨ b ⊢ a → b`.
fn implication_back(ctx: &[SortedVar], a: &Formula, b: &Formula) -> Option<P> {
    let na = Formula::And(vec![not(a), a.clone()]);
    let left = impl_intro(absurd(ctx, &na, a, b)?);
    let right = impl_intro(conj_ax(ctx, &[b.clone(), a.clone()], 0));
    let s = seq(Formula::Or(vec![not(a), b.clone()]), Formula::implies(a.clone(), b.clone()), ctx);
    Some(P::node(RuleTag::DisjRule, s, vec![left, right]))
}

/// `¬∀y φ ⊢ ∃y ¬φ`.
fn not_forall(ctx: &[SortedVar], ys: &[SortedVar], f: &Formula) -> Option<P> {
    let all = Formula::Forall(ys.to_vec(), Box::new(f.clone()));
    let ex = Formula::Exists(ys.to_vec(), Box::new(not(f)));
    let w = wide(ctx, ys);
    let pos = proj(ctx, &Formula::And(vec![not(&all), ex.clone()]), &ex)?;
    let a = Formula::And(vec![not(&all), not(&ex)]);
    // a ⊢_{x y} φ by cases on φ
    let in_f = proj(&w, &Formula::And(vec![a.clone(), f.clone()]), f)?;
    let b = Formula::And(vec![a.clone(), not(f)]);
    let witness = cut(proj(&w, &b, &not(f))?, exists_intro(id(ctx, &ex), ys));
    let both = pair(&w, &b, vec![witness, proj(&w, &b, &not(&ex))?]);
    let out_f = cut(both, cut(contra(&w, &ex), from_bot(&w, f)));
    let phi = by_cases(&w, &a, f, in_f, out_f);
    let all_of_a = forall_intro(phi, ys, ctx);
    let both = pair(ctx, &a, vec![all_of_a, proj(ctx, &a, &not(&all))?]);
    let neg = cut(both, cut(contra(ctx, &all), from_bot(ctx, &ex)));
    Some(by_cases(ctx, &not(&all), &ex, pos, neg))
}

/// `∃y ¬φ ⊢ ¬∀y φ`.
fn not_forall_back(ctx: &[SortedVar], ys: &[SortedVar], f: &Formula) -> P {
    let all = Formula::Forall(ys.to_vec(), Box::new(f.clone()));
    let w = wide(ctx, ys);
    let inst = forall_elim(id(ctx, &all), ys);
    let a = [not(f), all.clone()];
    let both = pair(&w, &Formula::And(a.to_vec()), vec![cut(conj_ax(&w, &a, 1), inst), conj_ax(&w, &a, 0)]);
    let body = impl_intro(cut(both, contra(&w, f)));
    exists_elim(body, ys, ctx)
}

fn het(f: &Formula) -> &HetBlock {
    match f {
        Formula::Het(h) => h,
        _ => unreachable!(),
    }
}

fn block_data(f: &Formula) -> InstanceData {
    InstanceData { block: Some(f.clone()), ..Default::default() }
}

fn stage_vars(f: &Formula) -> Vec<SortedVar> {
    let (x0, _) = crate::syntax::stage_variables(f, het(f), 1);
    x0.into_iter().flatten().collect()
}

/// `∃x0 ¬tail ⊢ ¬f` for a `(∀∃)` block `f`.
fn het_d_back(ctx: &[SortedVar], f: &Formula, tail: &Formula, th: &Theory) -> Option<P> {
    let x0 = stage_vars(f);
    let w = wide(ctx, &x0);
    let ax = axiom_instance(&RuleTag::HetAx1, &block_data(f), ctx, th).ok()?;
    let step = forall_elim(P::leaf(RuleTag::HetAx1, ax), &x0);
    let a = [not(tail), f.clone()];
    let both = pair(&w, &Formula::And(a.to_vec()), vec![cut(conj_ax(&w, &a, 1), step), conj_ax(&w, &a, 0)]);
    let body = impl_intro(cut(both, contra(&w, tail)));
    Some(exists_elim(body, &x0, ctx))
}

/// `g ⊢ ∃x0 tail` for an `(∃∀)` block `g`.
fn het_c(ctx: &[SortedVar], g: &Formula, th: &Theory) -> Option<P> {
    let f = Formula::het(het(g).dual());
    let ax = axiom_instance(&RuleTag::HetAx2, &block_data(&f), ctx, th).ok()?;
    Some(P::leaf(RuleTag::HetAx2, ax))
}

impl MorleyizedTheory {
    /// Replaces `C_φ(t)` by `φ[t/x]` and `D_φ(t)` by `¬φ[t/x]`.
    pub fn translate(&self, f: &Formula) -> Formula {
        let tr = |g: &Formula| self.translate(g);
        match f {
            Formula::Atom(name, args) => match self.symbol(name) {
                Some((e, positive)) => {
                    let s: Subst = e.vars.iter().map(|v| v.name.clone()).zip(args.iter().cloned()).collect();
                    let g = substitute(&e.formula, &s);
                    if positive {
                        g
                    } else {
                        Formula::not(g)
                    }
                }
                None => f.clone(),
            },
            Formula::And(l) => Formula::And(l.iter().map(tr).collect()),
            Formula::Or(l) => Formula::Or(l.iter().map(tr).collect()),
            Formula::Implies(a, b) => Formula::implies(tr(a), tr(b)),
            Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(tr(b))),
            Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(tr(b))),
            Formula::Het(h) => {
                let mut h = (**h).clone();
                if let Some(bs) = &mut h.bounds {
                    for b in bs.iter_mut() {
                        *b = tr(b);
                    }
                }
                match &mut h.payoff {
                    Payoff::Body(b) => *b = tr(b),
                    Payoff::Stages(p) => {
                        for t in p.templates.iter_mut() {
                            *t = tr(t);
                        }
                    }
                }
                Formula::het(h)
            }
            _ => f.clone(),
        }
    }

    fn translate_sequent(&self, s: &Sequent) -> Sequent {
        Sequent::new(self.translate(&s.antecedent), self.translate(&s.succedent), s.context.clone())
    }

    fn translate_value(&self, v: &Value) -> Value {
        match v {
            Value::Str(s) => match parse_formula(s) {
                Ok(f) => Value::Str(self.translate(&f).to_string()),
                Err(_) => v.clone(),
            },
            Value::List(l) => Value::List(l.iter().map(|x| self.translate_value(x)).collect()),
            _ => v.clone(),
        }
    }

    /// A source derivation of the translated clause axiom `name` in `ctx`.
    fn clause_proof(&self, name: &str, ctx: &[SortedVar], th: &Theory) -> Option<P> {
        let (clause, about) = self.clauses.get(name)?;
        let want = self.translate_sequent(&Sequent::new(
            self.theory.axiom(name)?.sequent.antecedent.clone(),
            self.theory.axiom(name)?.sequent.succedent.clone(),
            ctx.to_vec(),
        ));
        if alpha_eq(&want.antecedent, &want.succedent) {
            return Some(id(ctx, &want.antecedent));
        }
        let f = about.map(|i| self.entries[i].formula.clone());
        let parts = |f: &Formula| match f {
            Formula::And(l) | Formula::Or(l) => l.clone(),
            _ => Vec::new(),
        };
        let proof = match (clause, f) {
            (Clause::Disjoint, Some(f)) => contra(ctx, &f),
            (Clause::Cover, Some(f)) => em(ctx, &f),
            (Clause::Axiom(n), _) => P::leaf(RuleTag::TheoryAx(n.clone()), th.axiom(n)?.sequent.clone()),
            (Clause::ConjAx(_), _) => P::leaf(RuleTag::ConjAx, want),
            (Clause::DisjAx(_), _) => P::leaf(RuleTag::DisjAx, want),
            (Clause::AndD(d), Some(Formula::Top)) => match d {
                Dir::Forward => {
                    let nt = not(&Formula::Top);
                    let both = pair(ctx, &nt, vec![to_top(ctx, &nt), id(ctx, &nt)]);
                    cut(both, contra(ctx, &Formula::Top))
                }
                Dir::Backward => from_bot(ctx, &not(&Formula::Top)),
            },
            (Clause::AndD(Dir::Forward), Some(f)) => de_morgan(ctx, &parts(&f))?,
            (Clause::AndD(Dir::Backward), Some(f)) => de_morgan_back(ctx, &parts(&f)),
            (Clause::ImpC(d), Some(Formula::Implies(a, b))) => match d {
                Dir::Forward => implication(ctx, &a, &b)?,
                Dir::Backward => implication_back(ctx, &a, &b)?,
            },
            (Clause::ForallD(d), Some(Formula::Forall(ys, b))) => match d {
                Dir::Forward => not_forall(ctx, &ys, &b)?,
                Dir::Backward => not_forall_back(ctx, &ys, &b),
            },
            (Clause::HetD(Dir::Backward), Some(f)) => {
                let tail = crate::syntax::tail_block(&f, 1).ok()?;
                het_d_back(ctx, &f, &tail, th)?
            }
            (Clause::HetC(Dir::Forward), Some(g)) if het(&g).polarity == Polarity::EA => het_c(ctx, &g, th)?,
            _ => return None,
        };
        Some(proof)
    }

    fn back(&self, p: &P, th: &Theory, path: &mut Vec<usize>) -> Result<P, Rejection> {
        if let RuleTag::TheoryAx(name) = &p.rule {
            if self.clauses.contains_key(name) {
                let c = &p.conclusion.context;
                return self.clause_proof(name, c, th).ok_or_else(|| Rejection {
                    path: path.clone(),
                    rule: p.rule.clone(),
                    reason: format!("axiom `{name}` has no classical derivation in the source theory"),
                });
            }
        }
        let mut premises = Vec::with_capacity(p.premises.len());
        for (i, q) in p.premises.iter().enumerate() {
            path.push(i);
            premises.push(self.back(q, th, path)?);
            path.pop();
        }
        Ok(ProofTree {
            conclusion: self.translate_sequent(&p.conclusion),
            rule: p.rule.clone(),
            params: p.params.iter().map(|(k, v)| (k.clone(), self.translate_value(v))).collect(),
            premises,
        })
    }
}

/// Translates a proof over Σ^m into a proof over the source signature and
/// re-checks it against the source theory in classical mode.
pub fn back_translate_proof(p: &ProofTree, mt: &MorleyizedTheory) -> Result<ProofTree, Rejection> {
    let mut th = mt.source.clone();
    th.mode = Mode::Classical;
    check_proof(p, &mt.theory)?;
    let out = mt.back(p, &th, &mut Vec::new())?;
    check_proof(&out, &th)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morley::morleyize_classical;
    use crate::parse::parse_theory;

    fn leaf(mt: &MorleyizedTheory, name: &str) -> P {
        P::leaf(RuleTag::TheoryAx(name.into()), mt.theory.axiom(name).unwrap().sequent.clone())
    }

    fn all_clauses(src: &str) -> (MorleyizedTheory, Vec<String>) {
        let th = parse_theory(src, None).unwrap();
        let mt = morleyize_classical(&th).unwrap();
        let mut failed = Vec::new();
        for name in mt.clauses.keys() {
            if back_translate_proof(&leaf(&mt, name), &mt).is_err() {
                failed.push(name.clone());
            }
        }
        (mt, failed)
    }

    #[test]
    fn first_order_clauses() {
        let (_, failed) = all_clauses(
            "sort s; rel a; rel b; rel P(s); rel Q(s);
             axiom x: and(a, b, true) |- forall [y:s] implies(P(y), Q(y));
             axiom z: or(a, false) |- exists [y:s] P(y);",
        );
        assert!(failed.is_empty(), "{failed:?}");
    }

    #[test]
    fn heterogeneous_clauses() {
        let (mt, failed) = all_clauses(
            "sort s; rel p; classC clopen;
             axiom h: p |- hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] };",
        );
        let unsupported: Vec<&Clause> = failed.iter().map(|n| &mt.clauses[n].0).collect();
        assert!(unsupported
            .iter()
            .all(|c| matches!(c, Clause::HetD(Dir::Forward) | Clause::HetC(Dir::Backward))), "{failed:?}");
        assert!(mt.clauses.values().any(|(c, _)| *c == Clause::HetC(Dir::Forward)));
        assert!(!failed.iter().any(|n| mt.clauses[n].0 == Clause::HetC(Dir::Forward)));
    }

    #[test]
    fn composite_proof() {
        let th = parse_theory("rel p; rel q; rel r; axiom a: p |- q; axiom b: q |- r;", None).unwrap();
        let mt = morleyize_classical(&th).unwrap();
        let p = P::node(RuleTag::Cut, {
            let a = &leaf(&mt, "axiom_a").conclusion;
            let b = &leaf(&mt, "axiom_b").conclusion;
            Sequent::new(a.antecedent.clone(), b.succedent.clone(), vec![])
        }, vec![leaf(&mt, "axiom_a"), leaf(&mt, "axiom_b")]);
        let out = back_translate_proof(&p, &mt).unwrap();
        assert_eq!(out.conclusion.to_string(), "p |- r [ctx ]");
    }
}
