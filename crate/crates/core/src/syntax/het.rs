//! Block notation: tails of heterogeneous blocks and the expansion of finite blocks.

use std::collections::BTreeSet;

use super::{fresh_name, Formula, HetBlock, Length, Payoff, Polarity, SortedVar, Term};
use crate::error::{Error, Result};

fn het_of(f: &Formula) -> Result<&HetBlock> {
    match f {
        Formula::Het(h) => Ok(h),
        _ => Err(Error::IllFormed("expected a heterogeneous block".into())),
    }
}

/// The tail `(∀∃)_{β≤α<γ} x_α φ` of a block at stage `beta`.
///
/// For finite blocks the earlier schedule variables simply become free in the
/// tail. For ω-blocks the consumed moves are named by stage-indexed copies of
/// the schedule variables (`x_0`, `y_1`, ...) and recorded in the payoff
/// history; see [`tail_with_moves`] to choose the names.
pub fn tail_block(f: &Formula, beta: usize) -> Result<Formula> {
    let h = het_of(f)?;
    match h.length {
        Length::Finite(_) => tail_with_moves(f, &vec![Vec::new(); beta]),
        Length::Omega => {
            let (moves, _) = stage_variables(f, h, beta);
            tail_with_moves(
                f,
                &moves
                    .iter()
                    .map(|b| b.iter().map(|v| Term::var(&v.name)).collect())
                    .collect::<Vec<_>>(),
            )
        }
    }
}

/// Fresh stage-indexed variables for the first `beta` moves of an ω-block.
pub fn stage_variables(
    f: &Formula,
    h: &HetBlock,
    beta: usize,
) -> (Vec<Vec<SortedVar>>, BTreeSet<String>) {
    let mut taken = f.free_vars();
    taken.extend(h.schedule_vars());
    let mut out = Vec::with_capacity(beta);
    for alpha in 0..beta {
        let block = h
            .block_at(alpha)
            .iter()
            .map(|v| {
                let mut n = format!(
                    "{}_{}",
                    v.name,
                    alpha + h.stage_payoff().map_or(0, |p| p.offset())
                );
                if taken.contains(&n) {
                    n = fresh_name(&n, &taken);
                }
                taken.insert(n.clone());
                SortedVar::new(n, v.sort.clone())
            })
            .collect();
        out.push(block);
    }
    (out, taken)
}

/// The tail after the given moves. For finite blocks `moves` only counts stages
/// (the schedule variables stay as they are); for ω-blocks each entry is the
/// tuple of terms played at that stage.
pub fn tail_with_moves(f: &Formula, moves: &[Vec<Term>]) -> Result<Formula> {
    let h = het_of(f)?;
    let beta = moves.len();
    if beta == 0 {
        return Ok(f.clone());
    }
    let polarity = if beta % 2 == 1 {
        h.polarity.flip()
    } else {
        h.polarity
    };
    match (&h.length, &h.payoff) {
        (Length::Finite(n), Payoff::Body(body)) => {
            if beta > *n {
                return Err(Error::IllFormed(format!(
                    "tail at stage {beta} of a block of length {n}"
                )));
            }
            if beta == *n {
                return Ok(body.clone());
            }
            Ok(Formula::het(HetBlock {
                polarity,
                length: Length::Finite(n - beta),
                schedule: h.schedule[beta..].to_vec(),
                bounds: h.bounds.as_ref().map(|b| b[beta..].to_vec()),
                payoff: h.payoff.clone(),
            }))
        }
        (Length::Omega, Payoff::Stages(p)) => {
            for (alpha, mv) in moves.iter().enumerate() {
                if mv.len() != h.block_at(alpha).len() {
                    return Err(Error::IllFormed(format!(
                        "move {alpha} has {} components, block has {}",
                        mv.len(),
                        h.block_at(alpha).len()
                    )));
                }
            }
            let per = h.period();
            let rot = beta % per;
            let mut schedule = h.schedule[rot..].to_vec();
            schedule.extend_from_slice(&h.schedule[..rot]);
            let bounds = h.bounds.as_ref().map(|b| {
                let mut out = b[rot..].to_vec();
                out.extend_from_slice(&b[..rot]);
                out
            });
            let mut payoff = p.clone();
            payoff.history.extend(moves.iter().cloned());
            Ok(Formula::het(HetBlock {
                polarity,
                length: Length::Omega,
                schedule,
                bounds,
                payoff: Payoff::Stages(payoff),
            }))
        }
        _ => Err(Error::IllFormed(
            "payoff does not match block length".into(),
        )),
    }
}

/// Expands a finite block into nested quantifiers. Bounds become `ψ → ...`
/// under universal stages and `ψ ∧ ...` under existential ones.
pub fn desugar_finite_block(f: &Formula) -> Result<Formula> {
    let h = het_of(f)?;
    let (n, body) = match (&h.length, &h.payoff) {
        (Length::Finite(n), Payoff::Body(b)) => (*n, b),
        _ => {
            return Err(Error::IllFormed(
                "only finite blocks can be expanded".into(),
            ))
        }
    };
    let mut acc = body.clone();
    for stage in (0..n).rev() {
        let universal = (stage % 2 == 0) == (h.polarity == Polarity::AE);
        let vars = h.schedule[stage].clone();
        let bound = h.bounds.as_ref().map(|b| b[stage].clone());
        acc = if universal {
            let inner = match bound {
                Some(b) => Formula::implies(b, acc),
                None => acc,
            };
            Formula::forall(vars, inner)
        } else {
            let inner = match bound {
                Some(b) => Formula::And(vec![b, acc]),
                None => acc,
            };
            Formula::exists(vars, inner)
        };
    }
    Ok(acc)
}
