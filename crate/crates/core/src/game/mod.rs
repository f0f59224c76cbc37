//! Game semantics for heterogeneous blocks over finite structures.
//!
//! An ω-block is compiled into a finite arena whose positions pair a payoff
//! monitor state with the turn phase; a finite block becomes a game tree.
//! Arenas are solved by fixpoint iteration from both players' sides
//! independently, so determinacy is checked rather than assumed.

mod arena;
mod certify;
mod eval;
mod monitor;
mod oracle;
mod play;
mod solve;

pub use arena::{
    build_arena, build_arena_with, Arena, Edge, NodeStatus, Objective, Player, Position,
};
pub use certify::{
    check_determinacy, check_preservation, check_preservation_with, check_well_determined,
    class_games, CertifyReport, GameReport, Lasso, Preservation,
};
pub use eval::{eval_het, eval_het_game, eval_het_with, het_extension, solve_formula};
pub use monitor::{compile_monitor, Monitor, MonitorStatus};
pub use oracle::{oracle_eval, OracleMode};
pub use play::{play_step, StepReport};
pub use solve::{solve_game, GameResult};

use crate::error::Result;
use crate::structure::{eval_tarski, Assignment, Structure};
use crate::syntax::Formula;

/// Default cap on arena positions and monitor states.
pub const DEFAULT_MAX_POSITIONS: usize = 200_000;

/// Evaluates a stage template or bound under an assignment. Classical
/// evaluation uses [`eval_tarski`]; Kripke forcing supplies its own test.
pub type StageTest<'a> = dyn Fn(&Formula, &Assignment) -> Result<bool> + 'a;

pub fn tarski_test(m: &Structure) -> impl Fn(&Formula, &Assignment) -> Result<bool> + '_ {
    move |f, a| eval_tarski(m, f, a)
}
