//! Reasoning engines for the paraconsistent logics Cbr and Cie and their
//! self-extensional extensions RCbr and RCie.
//!
//! * [`formula`]: syntax over `{∧, ∨, →, ¬, ∘}`, parser and printer.
//! * [`nmatrix`]: three-valued non-deterministic matrix semantics, the decision
//!   procedure for Cbr/Cie.
//! * [`hilbert`]: proof objects, the proof checker and bounded proof search.
//! * [`balfi`]: Boolean algebras with LFI operators, finite model search and
//!   the interval model over ℘(ℤ).
//! * [`bmod`]: the periodic-set algebra over ℤ that refutes `∘∘α` and its
//!   weakenings in RCbr.
//! * [`belief`]: belief contraction that respects `∘`, driven by epistemic entrenchment.
//!
//! The `parallel` feature (on by default) runs the enumeration-heavy loops on
//! rayon. Without it every loop runs sequentially with identical results.

pub mod balfi;
pub mod belief;
pub mod bmod;
pub mod formula;
pub mod hilbert;
pub mod nmatrix;
mod par;

pub use formula::{Formula, ParseError, SubformulaIndex};
pub use nmatrix::{Nmatrix, TruthValue, Valuation, Verdict};
