//! Tangle machines: quandle-coloured networks of interacting registers.

pub mod aqc;
pub mod causal;
pub mod fusion;
pub mod invariants;
pub mod machine;
pub mod quandle;
pub mod rewrite;
