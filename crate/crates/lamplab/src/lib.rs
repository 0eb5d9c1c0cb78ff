//! A laboratory for lazy random walks on finite graphs.
//!
//! The crate builds small graph families ([`graphs`]), runs reproducible lazy
//! walks over them ([`walker`]), and computes the exact quantities that govern
//! how a walk covers a graph: mixing times, Green's functions, and hitting
//! times ([`oracle`]). On top of that sit three experiment layers:
//!
//! * [`latepoints`] — the set of vertices a walk has not yet visited at a
//!   fraction of the cover time, random `{0,1}` markings supported on the
//!   visited set, and statistics that try to tell such markings apart from
//!   uniform coin flips;
//! * [`excursions`] — decomposition of a trajectory into excursions through
//!   an annulus around a target, with estimators that rebuild stationary
//!   mass, hitting times, and a cover-time prediction out of excursion
//!   counts;
//! * [`lamplighter`] — walks on wreath products ("lamplighter" chains) whose
//!   lamp configuration at time `t` is exactly a coin marking of the set of
//!   visited base vertices, which is what makes the two layers above talk to
//!   each other.
//!
//! [`experiment`] wires these into reproducible, replayable runs driven by a
//! small config format, and [`acceptance`] bundles the end-to-end checks the
//! project treats as its release gate.
//!
//! Everything that draws randomness takes either an explicit RNG or a
//! `(seed, replica)` pair; see [`rng`] for the derivation scheme. Runs are
//! bit-for-bit reproducible for a fixed seed, independent of thread count.

pub mod acceptance;
pub mod excursions;
pub mod experiment;
pub mod graphs;
pub mod lamplighter;
pub mod latepoints;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod walker;

pub mod guide;
