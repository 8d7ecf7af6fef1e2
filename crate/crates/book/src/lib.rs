//! Compiles the guide in `book/` so that its snippets run as doc-tests.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/static.md")]
pub mod static_assortments {}

#[doc = include_str!("../../../book/src/constrained.md")]
pub mod constrained {}

#[doc = include_str!("../../../book/src/upper-bound.md")]
pub mod upper_bound {}

#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
