//! The user guide, one module per book chapter.
//!
//! Each module's documentation is included verbatim from `book/src/`, so the
//! rendered book and these pages share a single source and `cargo test` runs
//! every code block in the book as a doc-test. If a snippet in the book rots,
//! the build fails.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/walks-and-cover-times.md")]
pub mod walks_and_cover_times {}

#[doc = include_str!("../../../book/src/exact-oracle.md")]
pub mod exact_oracle {}

#[doc = include_str!("../../../book/src/uncovered-set.md")]
pub mod uncovered_set {}

#[doc = include_str!("../../../book/src/excursions.md")]
pub mod excursions {}

#[doc = include_str!("../../../book/src/lamplighter-chains.md")]
pub mod lamplighter_chains {}

#[doc = include_str!("../../../book/src/experiments-and-the-cli.md")]
pub mod experiments_and_the_cli {}
