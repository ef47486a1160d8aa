//! NoC-based MPSoC platform model and actor/channel mappings.
//!
//! TDMA arbitration is modeled analytically: an actor sharing a processor
//! with others is charged the slices of all the others, both in its
//! execution time after mapping (ETAM) and as the worst-case wait before it
//! can consume a token that arrived over the NoC.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::Signed;

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::graph::{ActorId, ActorKind, Channel, ChannelId, Sdfg};
use crate::rational::Rational;

string_id!(
    /// Identifier of a platform tile.
    TileId
);
string_id!(
    /// Identifier of a NoC connection.
    ConnectionId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TileKind {
    Processor,
    HardwareBlock,
    Memory,
}

impl TileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TileKind::Processor => "processor",
            TileKind::HardwareBlock => "hardware_block",
            TileKind::Memory => "memory",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "processor" => Some(TileKind::Processor),
            "hardware_block" => Some(TileKind::HardwareBlock),
            "memory" => Some(TileKind::Memory),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tile {
    pub id: TileId,
    pub kind: TileKind,
    /// Total TDMA period in cycles; only meaningful for processor tiles.
    pub tdma_wheel: u64,
    pub clock_hz: Rational,
}

impl Tile {
    pub fn processor(id: impl Into<TileId>, tdma_wheel: u64, clock_hz: Rational) -> Self {
        Self { id: id.into(), kind: TileKind::Processor, tdma_wheel, clock_hz }
    }

    pub fn hardware_block(id: impl Into<TileId>, clock_hz: Rational) -> Self {
        Self { id: id.into(), kind: TileKind::HardwareBlock, tdma_wheel: 0, clock_hz }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NocConnection {
    pub id: ConnectionId,
    pub src_tile: TileId,
    pub dst_tile: TileId,
    /// L(c), in cycles.
    pub latency: u64,
    /// Bytes per cycle.
    pub bandwidth: Rational,
    /// Whether the connection also carries traffic from `dst_tile` to `src_tile`.
    pub bidirectional: bool,
}

impl NocConnection {
    pub fn joins(&self, from: &TileId, to: &TileId) -> bool {
        (self.src_tile == *from && self.dst_tile == *to)
            || (self.bidirectional && self.src_tile == *to && self.dst_tile == *from)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Platform {
    pub tiles: Vec<Tile>,
    pub connections: Vec<NocConnection>,
}

impl Platform {
    pub fn tile(&self, id: &str) -> Option<&Tile> {
        self.tiles.iter().find(|t| t.id == *id)
    }

    pub fn connection(&self, id: &str) -> Option<&NocConnection> {
        self.connections.iter().find(|c| c.id == *id)
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty() && self.connections.is_empty()
    }
}

/// How a channel is realised on the platform.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChannelBinding {
    /// Both endpoints share a tile; `buffer_tokens` is the memory reserved
    /// for the channel on that tile.
    Local { buffer_tokens: u64 },
    /// Tokens travel over a NoC connection with buffers on both sides.
    Remote { connection: ConnectionId, src_buffer: u64, dst_buffer: u64 },
    /// The consumer fetches its input from the producer's memory (a hardware
    /// block) over `connection`, prefetching ahead of execution.
    RemoteMemory {
        connection: ConnectionId,
        /// Consumer firings released per gate firing.
        batch: u64,
        prefetch_time: u64,
        fetch_path: bool,
        /// Tokens of space in the producer's memory.
        producer_buffer: u64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mapping {
    pub actor_tile: BTreeMap<ActorId, TileId>,
    pub tdma_slice: BTreeMap<ActorId, u64>,
    pub channel_binding: BTreeMap<ChannelId, ChannelBinding>,
    /// Minimal latency of a remote channel, in cycles. Defaults to the
    /// destination tile's TDMA wheel (see [`Mapping::latency_bound`]).
    pub channel_latency_bound: BTreeMap<ChannelId, u64>,
}

impl Mapping {
    pub fn tile_of(&self, actor: &str) -> Option<&TileId> {
        self.actor_tile.get(actor)
    }

    /// Actors sharing `tile`, in id order.
    pub fn actors_on<'a>(&'a self, tile: &'a TileId) -> impl Iterator<Item = &'a ActorId> + 'a {
        self.actor_tile.iter().filter(move |(_, t)| *t == tile).map(|(a, _)| a)
    }

    /// Latency bound of a remote channel: the explicit value, else the
    /// destination tile's TDMA wheel, else the source tile's, else 0.
    pub fn latency_bound(&self, platform: &Platform, channel: &Channel) -> u64 {
        if let Some(&l) = self.channel_latency_bound.get(channel.id.as_str()) {
            return l;
        }
        let wheel = |actor: &ActorId| {
            self.tile_of(actor.as_str())
                .and_then(|t| platform.tile(t.as_str()))
                .filter(|t| t.kind == TileKind::Processor)
                .map(|t| t.tdma_wheel)
        };
        wheel(&channel.dst).or_else(|| wheel(&channel.src)).unwrap_or(0)
    }
}

/// Sum of the TDMA slices of every actor other than `actor` on `tile`.
fn others_slices(actor: &str, tile: &TileId, mapping: &Mapping) -> u64 {
    mapping
        .actors_on(tile)
        .filter(|a| a.as_str() != actor)
        .map(|a| mapping.tdma_slice.get(a).copied().unwrap_or(0))
        .sum()
}

fn check_wheel(tile: &Tile, mapping: &Mapping) -> Result<()> {
    let total: u64 = mapping.actors_on(&tile.id).map(|a| mapping.tdma_slice.get(a).copied().unwrap_or(0)).sum();
    if total > tile.tdma_wheel {
        return Err(Error::SliceOverflow { tile: tile.id.clone(), total, wheel: tile.tdma_wheel });
    }
    Ok(())
}

/// Execution time after mapping for every actor of `graph`.
///
/// A software actor on a processor tile is charged the slices of all other
/// actors on that tile. Hardware and infrastructure actors keep their time.
pub fn compute_etam(graph: &Sdfg, platform: &Platform, mapping: &Mapping) -> Result<BTreeMap<ActorId, u64>> {
    let mut out = BTreeMap::new();
    for actor in &graph.actors {
        let etam = match actor.kind {
            ActorKind::Software => {
                let tile = software_tile(actor.id.as_str(), platform, mapping)?;
                check_wheel(tile, mapping)?;
                actor
                    .exec_time
                    .checked_add(others_slices(actor.id.as_str(), &tile.id, mapping))
                    .ok_or(Error::Overflow("computing ETAM"))?
            }
            ActorKind::Hardware | ActorKind::Infrastructure => actor.exec_time,
        };
        out.insert(actor.id.clone(), etam);
    }
    Ok(out)
}

fn software_tile<'p>(actor: &str, platform: &'p Platform, mapping: &Mapping) -> Result<&'p Tile> {
    let unmapped = || Error::UnmappedActor(actor.into());
    let tile_id = mapping.tile_of(actor).ok_or_else(unmapped)?;
    let tile = platform.tile(tile_id.as_str()).ok_or_else(|| Error::UnknownTile(tile_id.clone()))?;
    if tile.kind != TileKind::Processor || !mapping.tdma_slice.contains_key(actor) {
        return Err(unmapped());
    }
    Ok(tile)
}

/// Worst-case wait of `actor` for its next TDMA slot: the slices of the
/// other actors on its processor, or 0 on a hardware block.
pub fn tdma_wait(actor: &str, platform: &Platform, mapping: &Mapping) -> Result<u64> {
    let tile_id = mapping.tile_of(actor).ok_or_else(|| Error::UnmappedActor(actor.into()))?;
    let tile = platform.tile(tile_id.as_str()).ok_or_else(|| Error::UnknownTile(tile_id.clone()))?;
    match tile.kind {
        TileKind::Processor => Ok(others_slices(actor, &tile.id, mapping)),
        TileKind::HardwareBlock | TileKind::Memory => Ok(0),
    }
}

/// Structural checks on the platform alone.
pub fn validate_platform(platform: &Platform) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut tiles = HashSet::new();
    for t in &platform.tiles {
        if !tiles.insert(t.id.as_str()) {
            diags.push(Diagnostic::DuplicateTile(t.id.clone()));
        }
        if t.kind == TileKind::Processor && t.tdma_wheel == 0 {
            diags.push(Diagnostic::InvalidTile {
                tile: t.id.clone(),
                reason: "processor tile needs a TDMA wheel > 0".into(),
            });
        }
        if !t.clock_hz.is_positive() {
            diags.push(Diagnostic::InvalidTile {
                tile: t.id.clone(),
                reason: "clock frequency must be positive".into(),
            });
        }
    }
    let mut conns = HashSet::new();
    for c in &platform.connections {
        if !conns.insert(c.id.as_str()) {
            diags.push(Diagnostic::DuplicateConnection(c.id.clone()));
        }
        if !c.bandwidth.is_positive() {
            diags.push(Diagnostic::InvalidConnection {
                connection: c.id.clone(),
                reason: "bandwidth must be positive".into(),
            });
        }
        for t in [&c.src_tile, &c.dst_tile] {
            if !tiles.contains(t.as_str()) {
                diags.push(Diagnostic::InvalidConnection {
                    connection: c.id.clone(),
                    reason: format!("unknown tile `{t}`"),
                });
            }
        }
    }
    diags
}

/// Checks the mapping invariants against a graph and platform. Returns an
/// empty list when every invariant holds and every binding is tile-consistent.
pub fn validate_mapping(graph: &Sdfg, platform: &Platform, mapping: &Mapping) -> Vec<Diagnostic> {
    let mut diags = validate_platform(platform);
    let tiles: HashMap<&str, &Tile> = platform.tiles.iter().map(|t| (t.id.as_str(), t)).collect();

    for (actor, tile) in &mapping.actor_tile {
        if !tiles.contains_key(tile.as_str()) {
            diags.push(Diagnostic::UnknownTile { actor: actor.clone(), tile: tile.clone() });
        }
    }
    for actor in &graph.actors {
        if actor.kind != ActorKind::Software {
            continue;
        }
        match mapping.tile_of(actor.id.as_str()).and_then(|t| tiles.get(t.as_str())) {
            None => diags.push(Diagnostic::UnmappedActor(actor.id.clone())),
            Some(tile) if tile.kind != TileKind::Processor => diags.push(Diagnostic::InvalidTile {
                tile: tile.id.clone(),
                reason: format!("software actor `{}` needs a processor tile", actor.id),
            }),
            Some(_) => {
                if !mapping.tdma_slice.contains_key(actor.id.as_str()) {
                    diags.push(Diagnostic::MissingSlice(actor.id.clone()));
                }
            }
        }
    }
    for tile in &platform.tiles {
        if tile.kind != TileKind::Processor {
            continue;
        }
        let total: u64 = mapping.actors_on(&tile.id).map(|a| mapping.tdma_slice.get(a).copied().unwrap_or(0)).sum();
        if total > tile.tdma_wheel {
            diags.push(Diagnostic::SliceOverflow { tile: tile.id.clone(), total, wheel: tile.tdma_wheel });
        }
    }

    for (id, binding) in &mapping.channel_binding {
        let Some(channel) = graph.channel(id.as_str()) else {
            diags.push(Diagnostic::UnknownChannelBinding(id.clone()));
            continue;
        };
        let src_tile = mapping.tile_of(channel.src.as_str());
        let dst_tile = mapping.tile_of(channel.dst.as_str());
        match binding {
            ChannelBinding::Local { buffer_tokens } => {
                if src_tile.is_some() && src_tile != dst_tile {
                    diags.push(Diagnostic::LocalBindingAcrossTiles(id.clone()));
                }
                if *buffer_tokens < channel.initial_tokens {
                    diags.push(Diagnostic::BufferTooSmall {
                        channel: id.clone(),
                        buffer: *buffer_tokens,
                        initial: channel.initial_tokens,
                    });
                }
            }
            ChannelBinding::Remote { connection, src_buffer, dst_buffer } => {
                check_connection(&mut diags, platform, channel, connection, src_tile, dst_tile);
                if *src_buffer == 0 || *dst_buffer == 0 {
                    diags.push(Diagnostic::InvalidBinding {
                        channel: id.clone(),
                        reason: "remote buffers must hold at least one token".into(),
                    });
                }
            }
            ChannelBinding::RemoteMemory { connection, batch, producer_buffer, .. } => {
                check_connection(&mut diags, platform, channel, connection, src_tile, dst_tile);
                if *batch == 0 || *producer_buffer == 0 {
                    diags.push(Diagnostic::InvalidBinding {
                        channel: id.clone(),
                        reason: "batch and producer buffer must be positive".into(),
                    });
                }
            }
        }
    }
    diags
}

fn check_connection(
    diags: &mut Vec<Diagnostic>,
    platform: &Platform,
    channel: &Channel,
    connection: &ConnectionId,
    src_tile: Option<&TileId>,
    dst_tile: Option<&TileId>,
) {
    let Some(conn) = platform.connection(connection.as_str()) else {
        diags.push(Diagnostic::UnknownConnection { channel: channel.id.clone(), connection: connection.clone() });
        return;
    };
    let ok = match (src_tile, dst_tile) {
        (Some(s), Some(d)) => s != d && conn.joins(s, d),
        _ => false,
    };
    if !ok {
        diags.push(Diagnostic::BindingMismatch { channel: channel.id.clone(), connection: connection.clone() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Actor;
    use crate::rational::from_u64;

    fn two_tiles() -> (Sdfg, Platform, Mapping) {
        let mut g = Sdfg::new();
        for (a, et) in [("A", 10), ("B", 20), ("C", 30)] {
            g.add_actor(Actor::software(a, et)).unwrap();
        }
        g.add_channel(Channel::new("ab", "A", "B")).unwrap();
        g.add_channel(Channel::new("bc", "B", "C").token_size(8)).unwrap();
        let hz = from_u64(100);
        let platform = Platform {
            tiles: vec![Tile::processor("T1", 100, hz.clone()), Tile::processor("T2", 100, hz)],
            connections: vec![NocConnection {
                id: "c1".into(),
                src_tile: "T1".into(),
                dst_tile: "T2".into(),
                latency: 2,
                bandwidth: from_u64(4),
                bidirectional: false,
            }],
        };
        let mut m = Mapping::default();
        for (a, t, s) in [("A", "T1", 30), ("B", "T1", 70), ("C", "T2", 50)] {
            m.actor_tile.insert(a.into(), t.into());
            m.tdma_slice.insert(a.into(), s);
        }
        m.channel_binding.insert("ab".into(), ChannelBinding::Local { buffer_tokens: 2 });
        m.channel_binding
            .insert("bc".into(), ChannelBinding::Remote { connection: "c1".into(), src_buffer: 1, dst_buffer: 1 });
        (g, platform, m)
    }

    #[test]
    fn etam_adds_other_slices() {
        let (g, p, m) = two_tiles();
        let etam = compute_etam(&g, &p, &m).unwrap();
        assert_eq!(etam["A"], 80);
        assert_eq!(etam["B"], 50);
        assert_eq!(etam["C"], 30);
        assert_eq!(tdma_wait("A", &p, &m).unwrap(), 70);
        assert_eq!(tdma_wait("C", &p, &m).unwrap(), 0);
        assert!(validate_mapping(&g, &p, &m).is_empty());
    }

    #[test]
    fn slice_overflow_is_reported() {
        let (g, p, mut m) = two_tiles();
        m.tdma_slice.insert("A".into(), 31);
        assert!(matches!(compute_etam(&g, &p, &m), Err(Error::SliceOverflow { total: 101, .. })));
        assert!(validate_mapping(&g, &p, &m).contains(&Diagnostic::SliceOverflow {
            tile: "T1".into(),
            total: 101,
            wheel: 100
        }));
    }

    #[test]
    fn unmapped_software_actor() {
        let (g, p, mut m) = two_tiles();
        m.actor_tile.remove("C");
        assert!(matches!(compute_etam(&g, &p, &m), Err(Error::UnmappedActor(a)) if a == "C"));
        assert!(matches!(tdma_wait("C", &p, &m), Err(Error::UnmappedActor(_))));
        assert!(validate_mapping(&g, &p, &m).contains(&Diagnostic::UnmappedActor("C".into())));
    }

    #[test]
    fn binding_must_follow_connection_tiles() {
        let (g, mut p, m) = two_tiles();
        p.connections[0].src_tile = "T2".into();
        p.connections[0].dst_tile = "T1".into();
        assert!(validate_mapping(&g, &p, &m)
            .contains(&Diagnostic::BindingMismatch { channel: "bc".into(), connection: "c1".into() }));
        p.connections[0].bidirectional = true;
        assert!(validate_mapping(&g, &p, &m).is_empty());
    }

    #[test]
    fn latency_bound_defaults_to_destination_wheel() {
        let (g, p, mut m) = two_tiles();
        let bc = g.channel("bc").unwrap();
        assert_eq!(m.latency_bound(&p, bc), 100);
        m.channel_latency_bound.insert("bc".into(), 7);
        assert_eq!(m.latency_bound(&p, bc), 7);
    }
}
