//! Transience and related tail objectives on countable Markov decision
//! processes: gadget MDPs, transformations, solvers, strategy synthesis and
//! brute-force checks.

pub mod error;
pub mod gadgets;
pub mod mdp;
pub mod solvers;
pub mod synthesis;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
