//! Regular expressions with backreferences (rewbs).
//!
//! A rewb is read as an ordinary regular expression over an extended
//! alphabet of letters, brackets and reference numbers; the words of that
//! regular language are *ref-words*, and the language of the rewb is the
//! image of those ref-words under dereferencing. On top of that semantics
//! this crate provides:
//!
//! - [`syntax`]: the concrete text grammar, validation and label analysis.
//! - [`refword`]: ref-words, the bracket-erasing homomorphism, the matching
//!   predicate and the dereferencing procedure.
//! - [`refnfa`]: the ref-word automaton of a rewb and an exact membership
//!   oracle for its language.
//! - [`machine`]: a single runtime for stack automata (SA), nonerasing stack
//!   automata (NESA) and nested stack automata (NSA).
//! - [`construct`]: compilation of rewbs to NSAs, and of rewbs without a
//!   captured reference to NESAs.
//! - [`larsen`]: Larsen's rewb hierarchy and matching hand-built NESAs.
//! - [`langlab`]: curated example languages and the slice/cross-check harness.
//! - [`cli`]: the `rewb` command-line tool.

pub mod cli;
pub mod construct;
pub mod langlab;
pub mod larsen;
pub mod machine;
pub mod refnfa;
pub mod refword;
pub mod syntax;

pub use syntax::{Alphabet, Label, Rewb, Symbol, Word};
