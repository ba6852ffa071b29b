//! Narrative guide, mirrored from the book chapters under `book/src`.
//!
//! Every code block in the chapters compiles and runs as a doctest of this
//! crate, so the book cannot drift from the library.

#[doc = include_str!("../../../book/src/groups.md")]
pub mod groups {}

#[doc = include_str!("../../../book/src/multiexp.md")]
pub mod multiexp {}

#[doc = include_str!("../../../book/src/cones.md")]
pub mod cones {}

#[doc = include_str!("../../../book/src/monotone.md")]
pub mod monotone {}
