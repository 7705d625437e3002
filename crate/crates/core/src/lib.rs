//! Explicit-state verification toolkit for infrastructure security models.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! - [`kripke`]: finite transition systems, reachability, Kripke structures and
//!   fixpoint evaluation of the CTL fragment EX/AX/EF/AG.
//! - [`attack_tree`]: and/or attack trees over pairs of state sets, the
//!   recursive validity check, leaf expansion and synthesis from witnesses.
//! - [`refinement`]: the state-map refinement relation between Kripke
//!   structures, its one-step sufficient conditions and EF transfer.
//! - [`infra`], [`semantics`], [`refmaps`]: the infrastructure vocabulary
//!   (locations, actors, policies, DLM labels, ledgers), the transition rules
//!   of the four refinement levels and the maps between adjacent levels.
//! - [`model`]: level-agnostic model descriptions and their Kripke structures.
//! - [`casestudy`]: the IoT healthcare scenario and its attack and refinement
//!   checks, packaged as runnable reports.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attack_tree;
pub mod casestudy;
pub mod error;
pub mod infra;
pub mod kripke;
pub mod model;
pub mod refinement;
pub mod refmaps;
pub mod semantics;

pub use error::{Error, Result};
pub use kripke::{CtlFormula, KripkeStructure, StateSet, TransitionSystem};
