//! Deciding unavoidability of word patterns.
//!
//! * [`pattern`]: patterns over a dense alphabet, deletion and identification.
//! * [`graph`]: the 2-factor graph and free letters / free sets.
//! * [`decider`]: memoized reduction search with replayable certificates.
//! * [`reflection`]: non-erasing morphism matching and Zimin words.
//! * [`sat`]: the 3-CNF to pattern construction and its end-to-end check.
//! * [`analysis`]: length, density and counting bounds, census, avoiding words.

pub mod analysis;
pub mod decider;
pub mod graph;
pub mod pattern;
pub mod reflection;
pub mod sat;

pub use decider::{
    decide, decide_bem, decide_free_sets, verify_certificate, Certificate, DecideError, ReductionStep, SearchConfig,
    Verdict,
};
pub use graph::{build_graph, enumerate_free_sets, free_letters, is_free, is_free_set, FactorGraph};
pub use pattern::{Letter, Pattern, PatternError};
