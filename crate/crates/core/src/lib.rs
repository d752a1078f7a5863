//! Assume-guarantee verification for actor systems with one unspecified
//! component.
//!
//! The pipeline turns an open system, an interface description of the
//! missing component and an error automaton into the weakest assumption
//! the component must satisfy; candidate components are then checked
//! against it.

pub mod aml;
pub mod assume;
pub mod cli;
pub mod compliance;
pub mod infm;
pub mod lts;
pub mod mcheck;
pub mod property;
pub mod semantics;
