//! Density- and priority-adaptive multi-hop broadcast for vehicular ad hoc
//! networks.
//!
//! The crate bundles the pieces of an offline tuning pipeline and the
//! protocol it tunes:
//!
//! - [`model`]: strategies, priorities, density classes, scenarios and the
//!   knowledge base;
//! - [`propagation`]: duty-cycled disc link model and collision resolution;
//! - [`sim`]: the discrete-event simulator producing a [`trace::Trace`];
//! - [`protocols`]: ADM and the simple / smart flooding baselines;
//! - [`analyzer`]: NC, PT, R and FR from a trace;
//! - [`optimizer`]: multi-objective GA and preference-based selection that
//!   fill the knowledge base;
//! - [`scenarios`]: convoy presets and source placement.

pub mod analyzer;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod propagation;
pub mod protocols;
pub mod reference_tables;
pub mod scenarios;
pub mod seeding;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use model::{
    classify_density, DensityClass, KnowledgeBase, NodeId, ObjectiveVector, Packet, PacketId, Priority,
    Scenario, SourceEmission, Strategy,
};
pub use protocols::Behavior;
