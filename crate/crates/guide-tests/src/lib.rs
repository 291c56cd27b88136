//! Compiles and runs every code block of the guide in `book/` as a doc-test.
//!
//! mdBook cannot execute examples against the real crate, so each chapter is
//! included here as module documentation and `cargo test --doc` does the
//! work. A failing block reports the module named after its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/intervals-and-norms.md")]
pub mod intervals_and_norms {}

#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}

#[doc = include_str!("../../../book/src/bounding-outputs.md")]
pub mod bounding_outputs {}

#[doc = include_str!("../../../book/src/subproblems.md")]
pub mod subproblems {}

#[doc = include_str!("../../../book/src/branch-and-bound.md")]
pub mod branch_and_bound {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}
