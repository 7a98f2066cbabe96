//! Personalized radio resource allocation driven by per-user zones of tolerance.
//!
//! The crate is organised along the life cycle of a personalized cell:
//!
//! - [`zot`]: satisfaction levels, zone-of-tolerance profiles and the Δ gap.
//! - [`synth`]: personas, mobility traces, the ground-truth tolerance oracle
//!   and labelled development datasets.
//! - [`predictor`]: feature encoding, persona clustering and the two-phase
//!   persona/threshold model with online updates.
//! - [`channel`]: single-cell link budget (path loss, shadowing, Rayleigh
//!   fading) and per resource block rates.
//! - [`allocator`]: Δ optimisation, target rates for both policies, greedy
//!   resource block assignment and its exhaustive oracle.
//! - [`pipeline`]: development, production and comparison stages.
//! - [`config`]: the TOML configuration document shared by the CLI.

pub mod allocator;
pub mod channel;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod predictor;
pub mod rng;
pub mod synth;
pub mod zot;

pub use error::{Error, Result};
