//! The book's chapters, mounted as rustdoc pages so that every code
//! block runs under `cargo test --doc`. The rendered book lives in
//! `book/` (build with `mdbook build book`); this module keeps it and
//! the crate from drifting apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/lattice.md")]
pub mod lattice {}

#[doc = include_str!("../../../book/src/krein.md")]
pub mod krein {}

#[doc = include_str!("../../../book/src/calculus.md")]
pub mod calculus {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/states.md")]
pub mod states {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
