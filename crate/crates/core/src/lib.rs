//! Graded first-order model theory over finite MTL-chains.

pub mod algebra;
pub mod corpus;
pub mod diagrams;
pub mod error;
pub mod generate;
pub mod io;
pub mod morphisms;
pub mod parser;
pub mod preservation;
pub mod semantics;
pub mod syntax;
pub mod unions;

pub use error::{Error, Result};
