//! Synthetic visual-reasoning data: attributed scene graphs, a typed
//! functional question DSL, bias-controlled question generation, and dataset
//! diagnostics.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`sampler`] draws random scene graphs under placement and palette
//!    constraints.
//! 2. [`family`] and [`generate`] instantiate question programs from
//!    templates, execute them against scenes ([`program`]), and keep the
//!    per-family answer distributions close to uniform.
//! 3. [`relaxed`] and [`audit`] analyze the result: effective question size,
//!    topology, absolute-spatial answerability, and answer-bias probes.
//!
//! Everything is deterministic given a master seed: independent work units get
//! their own derived random streams ([`rng`]) and fan out over a thread pool
//! ([`par`]) without affecting output order or content.

pub mod analysis;
pub mod audit;
pub mod family;
pub mod generate;
pub mod par;
pub mod program;
pub mod relaxed;
pub mod rng;
pub mod sampler;
pub mod scene;

/// Version tag embedded in every emitted file format.
pub const SCHEMA_VERSION: u32 = 1;
