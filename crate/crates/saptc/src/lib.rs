//! Process-algebraic verification of cryptographic protocols.
//!
//! The pipeline: a protocol model (parsed from `.saptc` text or taken from
//! the built-in catalogue) is compiled to a finite labelled transition
//! system by the structural operational semantics, and compared against the
//! protocol's declared external behavior by rooted branching step
//! bisimulation. An equational rewriter to basic-term normal forms serves
//! as an independent proof oracle for recursion-free terms.

pub mod equivalence;
pub mod rewriter;
pub mod message;
pub mod parser;
pub mod protocols;
pub mod semantics;
pub mod term;
pub mod cli;

pub use message::{Binding, EncKind, Msg};
pub use term::{ActionEvent, ActionKind, Guard, Pattern, ProtocolModel, RecursiveSpec, Term};
