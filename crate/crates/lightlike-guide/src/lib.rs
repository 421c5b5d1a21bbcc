//! Guide chapters, attached as documentation so that every code block in
//! the book compiles and runs under `cargo test`.
//!
//! Each module below holds one chapter of the mdbook sources in
//! `book/src/`; the `#[doc = include_str!(...)]` trick turns the chapter's
//! fenced Rust blocks into doctests.  The crate exports nothing and is
//! never published — it exists purely to keep the book honest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/jet-format.md")]
pub mod jet_format {}

#[doc = include_str!("../../../book/src/foci-and-pole.md")]
pub mod foci_and_pole {}

#[doc = include_str!("../../../book/src/central-affinor.md")]
pub mod central_affinor {}

#[doc = include_str!("../../../book/src/normalizing-forms.md")]
pub mod normalizing_forms {}

#[doc = include_str!("../../../book/src/gauge-flows.md")]
pub mod gauge_flows {}

#[doc = include_str!("../../../book/src/flat-models.md")]
pub mod flat_models {}

#[doc = include_str!("../../../book/src/involutivity.md")]
pub mod involutivity {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
