//! Annotated term rewriting.
//!
//! Plain first-order terms ([`term`], [`subst`], [`rewrite`]), wavefront
//! annotations ([`annotation`]), difference matching and unification
//! ([`difference`]) driven by left-first search ([`search`]), rippling
//! ([`ripple`]), a structural-induction prover ([`prover`]) with an
//! independent proof checker ([`replay`]), and a divergence critic
//! ([`critic`]).

pub mod annotation;
pub mod critic;
pub mod difference;
pub mod prover;
pub mod replay;
pub mod rewrite;
pub mod ripple;
pub mod search;
pub mod sexpr;
pub mod subst;
pub mod term;
pub mod theory;

pub use annotation::{measure_less, AnnTerm, Measure, SkeletonSet, WatViolation};
pub use subst::{apply_subst, match_first_order, unify_first_order, Substitution};
pub use term::{Equation, Name, Position, Signature, Symbol, SymbolKind, Term};
