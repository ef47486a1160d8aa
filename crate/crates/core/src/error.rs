use thiserror::Error;

use crate::diag::Diagnostic;
use crate::graph::{ActorId, ChannelId};
use crate::platform::TileId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inconsistent graph: balance equations fail on channel `{channel}`")]
    Inconsistent { channel: ChannelId },
    #[error("deadlock at time {time}: no active firing and no enabled actor")]
    Deadlock { time: u64 },
    #[error("deadlock: cycle through {actors:?} carries no initial tokens")]
    TokenFreeCycle { actors: Vec<ActorId> },
    #[error("state-space budget of {budget} states exceeded")]
    StateSpaceBudgetExceeded { budget: usize },
    #[error("unbounded throughput: {reason}")]
    Unbounded { reason: String },
    #[error("graph is not homogeneous: channel `{channel}` has a rate other than 1")]
    NotHomogeneous { channel: ChannelId },
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("graph has no actors")]
    EmptyGraph,
    #[error("unknown actor `{0}`")]
    UnknownActor(ActorId),
    #[error("unknown channel `{0}`")]
    UnknownChannel(ChannelId),
    #[error("unknown tile `{0}`")]
    UnknownTile(TileId),
    #[error("actor `{0}` is not mapped to a processor tile with a TDMA slice")]
    UnmappedActor(ActorId),
    #[error("TDMA slices on tile `{tile}` sum to {total}, exceeding the wheel of {wheel}")]
    SliceOverflow { tile: TileId, total: u64, wheel: u64 },
    #[error("buffer of {buffer} tokens is smaller than the {initial} initial tokens of `{channel}`")]
    BufferTooSmall { channel: ChannelId, buffer: u64, initial: u64 },
    #[error("channel `{0}` connects actors on the same tile; bind it locally")]
    SameTile(ChannelId),
    #[error("actor `{0}` is already implemented in hardware")]
    AlreadyHardware(ActorId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),
    #[error("invalid graph: {}", join(.0))]
    InvalidGraph(Vec<Diagnostic>),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation failed: {}", join(.0))]
    Validation(Vec<Diagnostic>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// True for failures of the analysis itself (as opposed to malformed input).
    pub fn is_analysis_failure(&self) -> bool {
        matches!(
            self,
            Error::Inconsistent { .. }
                | Error::Deadlock { .. }
                | Error::TokenFreeCycle { .. }
                | Error::StateSpaceBudgetExceeded { .. }
                | Error::Unbounded { .. }
                | Error::NotHomogeneous { .. }
                | Error::NotStronglyConnected
        )
    }
}
