//! Verification of Kochen–Specker proofs and derivation of
//! state-independent noncontextuality inequalities, in exact arithmetic.
//!
//! The crate is layered bottom-up: [`exact`] arithmetic, the observable
//! [`model`], compatibility structure ([`compat`]), polynomial algebra
//! ([`poly`]), value-assignment search ([`assign`]) and the derivation of
//! inequalities ([`derive`]). [`io`], [`catalog`] and [`pipeline`] provide
//! the file format, built-in proofs and the end-to-end workflow.

pub mod assign;
pub mod catalog;
pub mod compat;
pub mod derive;
pub mod exact;
pub mod exec;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod poly;
