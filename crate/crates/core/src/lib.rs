//! Synchronous dataflow (SDF) models of streaming applications mapped onto
//! NoC-based MPSoC platforms, with analytical throughput computation and
//! modeling of software-to-hardware task migration.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: actors, channels, repetition vectors and structural checks.
//! * [`analysis`]: self-timed state-space throughput and a maximum cycle
//!   mean oracle for homogeneous graphs.
//! * [`platform`]: tiles, TDMA wheels, NoC connections and mappings.
//! * [`transforms`]: binding-aware and memory-aware graph rewrites.
//! * [`migration`]: software to hardware migration and what-if exploration.
//! * [`scenario`]: the scenario file format, SDF3 import and reports.

#[macro_use]
mod ids;

pub mod analysis;
pub mod diag;
pub mod error;
pub mod graph;
pub mod migration;
pub mod platform;
pub mod rational;
pub mod scenario;
pub mod transforms;

pub use analysis::{mcm_throughput, self_timed_throughput, to_frames_per_second, AnalysisOptions, ThroughputResult};
pub use diag::Diagnostic;
pub use error::{Error, Result};
pub use graph::{Actor, ActorId, ActorKind, Channel, ChannelId, RepetitionVector, Sdfg};
pub use migration::{CommClass, MigrationOutcome, MigrationParams, MigrationSpec};
pub use platform::{ChannelBinding, ConnectionId, Mapping, NocConnection, Platform, Tile, TileId, TileKind};
pub use rational::Rational;
pub use scenario::Scenario;
