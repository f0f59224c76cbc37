//! Infinitary logic with heterogeneous quantifiers over finite structures.
//!
//! The crate parses signatures, theories and structures, evaluates
//! heterogeneous formulas through safety/reachability games, certifies
//! structures as well-determined, checks sequent-calculus proofs, and
//! implements the Morleyization translations and Kripke forcing.

pub mod error;
pub mod game;
pub mod kripke;
pub mod morley;
pub mod parse;
pub mod print;
pub mod proof;
pub mod structure;
pub mod syntax;

pub use error::{Error, Pos, Result};
pub use structure::{eval_tarski, Assignment, Elem, Structure};
pub use syntax::{Formula, HetBlock, Sequent, Signature, SortedVar, Term, Theory};
