use std::fmt;

use crate::graph::{ActorId, ChannelId};
use crate::platform::{ConnectionId, TileId};

/// A single structural problem found by one of the `validate*` functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicateActor(ActorId),
    DuplicateChannel(ChannelId),
    DanglingEndpoint { channel: ChannelId, actor: ActorId },
    ZeroRate { channel: ChannelId },
    Inconsistent { channel: ChannelId },
    UnknownReferenceActor(ActorId),
    NegativeValue { field: String, value: i64 },
    DuplicateTile(TileId),
    DuplicateConnection(ConnectionId),
    InvalidTile { tile: TileId, reason: String },
    InvalidConnection { connection: ConnectionId, reason: String },
    UnknownTile { actor: ActorId, tile: TileId },
    UnmappedActor(ActorId),
    MissingSlice(ActorId),
    SliceOverflow { tile: TileId, total: u64, wheel: u64 },
    UnknownChannelBinding(ChannelId),
    UnknownConnection { channel: ChannelId, connection: ConnectionId },
    BindingMismatch { channel: ChannelId, connection: ConnectionId },
    LocalBindingAcrossTiles(ChannelId),
    BufferTooSmall { channel: ChannelId, buffer: u64, initial: u64 },
    InvalidBinding { channel: ChannelId, reason: String },
    NonPositiveClock,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Diagnostic::*;
        match self {
            DuplicateActor(a) => write!(f, "duplicate actor `{a}`"),
            DuplicateChannel(c) => write!(f, "duplicate channel `{c}`"),
            DanglingEndpoint { channel, actor } => {
                write!(f, "channel `{channel}` references unknown actor `{actor}`")
            }
            ZeroRate { channel } => write!(f, "channel `{channel}` has a zero rate"),
            Inconsistent { channel } => {
                write!(f, "inconsistent rates: balance equation fails on `{channel}`")
            }
            UnknownReferenceActor(a) => write!(f, "reference actor `{a}` is not in the graph"),
            NegativeValue { field, value } => write!(f, "{field} must be non-negative, got {value}"),
            DuplicateTile(t) => write!(f, "duplicate tile `{t}`"),
            DuplicateConnection(c) => write!(f, "duplicate connection `{c}`"),
            InvalidTile { tile, reason } => write!(f, "tile `{tile}`: {reason}"),
            InvalidConnection { connection, reason } => {
                write!(f, "connection `{connection}`: {reason}")
            }
            UnknownTile { actor, tile } => {
                write!(f, "actor `{actor}` is mapped to unknown tile `{tile}`")
            }
            UnmappedActor(a) => write!(f, "actor `{a}` is not mapped"),
            MissingSlice(a) => write!(f, "software actor `{a}` has no TDMA slice"),
            SliceOverflow { tile, total, wheel } => {
                write!(f, "TDMA slices on `{tile}` sum to {total} > wheel {wheel}")
            }
            UnknownChannelBinding(c) => write!(f, "binding for unknown channel `{c}`"),
            UnknownConnection { channel, connection } => {
                write!(f, "channel `{channel}` bound to unknown connection `{connection}`")
            }
            BindingMismatch { channel, connection } => {
                write!(f, "channel `{channel}` endpoints do not sit on the tiles of connection `{connection}`")
            }
            LocalBindingAcrossTiles(c) => {
                write!(f, "channel `{c}` is bound locally but its endpoints are on different tiles")
            }
            BufferTooSmall { channel, buffer, initial } => {
                write!(f, "channel `{channel}`: buffer {buffer} is smaller than its {initial} initial tokens")
            }
            InvalidBinding { channel, reason } => write!(f, "channel `{channel}`: {reason}"),
            NonPositiveClock => write!(f, "scenario clock frequency must be positive"),
        }
    }
}
