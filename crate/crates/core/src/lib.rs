//! Termination proofs for a small call-by-name functional language.
//!
//! A program is brought into distilled form (by [`transform::distill`] or
//! supplied that way), unfolded into a finite folded transition system
//! ([`lts::build_lts`]), and proved terminating when every cycle of that
//! system passes through a case selector ([`termination::analyze`]).

pub mod distilled;
pub mod lts;
pub mod pipeline;
pub mod semantics;
pub mod syntax;
pub mod termination;
pub mod transform;
