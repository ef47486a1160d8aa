//! Software to hardware task migration.
//!
//! Migrating a task changes the scenario in four ways: the task runs faster
//! in hardware, its processor loses a TDMA slice, and every channel it shares
//! with a software task gets new communication actors (a remote chain when
//! software sends to hardware, a memory-aware prefetch pipeline when software
//! reads from the hardware block's memory). Channels between two hardware
//! blocks are simply rebound to the connection between them.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::analysis::{self_timed_throughput, to_frames_per_second, AnalysisOptions, ThroughputResult};
use crate::error::{Error, Result};
use crate::graph::{compute_repetition_vector, ActorId, ActorKind, Channel, Sdfg};
use crate::platform::{ChannelBinding, ConnectionId, Mapping, NocConnection, Platform, Tile, TileId};
use crate::rational::Rational;
use crate::transforms::{apply_mapping, BuildOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommClass {
    /// Software to software.
    SS,
    /// Software to hardware.
    SH1,
    /// Hardware to software.
    HS1,
    /// Hardware to hardware.
    HH1,
}

/// Latency and bandwidth of a NoC connection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkParams {
    pub latency: u64,
    pub bandwidth: Rational,
}

/// Migration parameters shared by every candidate task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MigrationParams {
    pub speedup: Rational,
    pub prefetch_time: u64,
    /// Connection parameters for the hardware block. When unset, the
    /// parameters of the first connection already carrying one of the task's
    /// channels are reused, else those of the first connection of its tile.
    pub hw_connection: Option<LinkParams>,
    /// Tokens of buffer space in the hardware block's memory per channel.
    pub hw_buffer_tokens: u64,
    /// Tokens one prefetch brings in; a reader consuming more per firing
    /// also needs the on-demand fetch path.
    pub prefetch_tokens: u64,
}

impl Default for MigrationParams {
    fn default() -> Self {
        Self {
            speedup: Rational::from_integer(BigInt::from(2)),
            prefetch_time: 10_000,
            hw_connection: None,
            hw_buffer_tokens: 1,
            prefetch_tokens: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MigrationSpec {
    pub actor: ActorId,
    pub params: MigrationParams,
}

impl MigrationSpec {
    pub fn new(actor: impl Into<ActorId>, params: MigrationParams) -> Self {
        Self { actor: actor.into(), params }
    }
}

/// A migrated scenario together with its analysable graph.
#[derive(Clone, Debug)]
pub struct MigrationOutcome {
    /// Application graph with the task's new execution time and kind.
    pub application: Sdfg,
    pub platform: Platform,
    pub mapping: Mapping,
    /// Result of [`apply_mapping`] on the three above.
    pub graph: Sdfg,
}

/// Communication class of a channel, from the kinds of its endpoints.
/// Infrastructure actors count as software.
pub fn classify_channel(channel: &Channel, graph: &Sdfg) -> CommClass {
    let hw = |a: &ActorId| graph.actor(a.as_str()).is_some_and(|a| a.kind == ActorKind::Hardware);
    match (hw(&channel.src), hw(&channel.dst)) {
        (false, false) => CommClass::SS,
        (false, true) => CommClass::SH1,
        (true, false) => CommClass::HS1,
        (true, true) => CommClass::HH1,
    }
}

/// `floor(exec_time / speedup)`.
pub fn accelerated_time(exec_time: u64, speedup: &Rational) -> Result<u64> {
    if *speedup < Rational::one() {
        return Err(Error::InvalidParameter(format!("speedup must be at least 1, got {speedup}")));
    }
    (Rational::from_integer(BigInt::from(exec_time)) / speedup)
        .floor()
        .to_integer()
        .to_u64()
        .ok_or(Error::Overflow("scaling an execution time"))
}

fn inherited_link(
    graph: &Sdfg,
    platform: &Platform,
    mapping: &Mapping,
    actor: &ActorId,
    tile: &TileId,
) -> Option<LinkParams> {
    let from_binding = graph
        .channels
        .iter()
        .filter(|c| !c.is_self_loop() && (c.src == *actor || c.dst == *actor))
        .filter_map(|c| match mapping.channel_binding.get(&c.id)? {
            ChannelBinding::Remote { connection, .. } | ChannelBinding::RemoteMemory { connection, .. } => {
                platform.connection(connection.as_str())
            }
            ChannelBinding::Local { .. } => None,
        })
        .next();
    from_binding
        .or_else(|| platform.connections.iter().find(|c| c.src_tile == *tile || c.dst_tile == *tile))
        .map(|c| LinkParams { latency: c.latency, bandwidth: c.bandwidth.clone() })
}

fn fresh_tile_id(platform: &Platform, base: &str) -> TileId {
    let mut id = base.to_owned();
    let mut k = 2;
    while platform.tile(&id).is_some() {
        id = format!("{base}_{k}");
        k += 1;
    }
    id.into()
}

fn fresh_connection_id(platform: &Platform, base: &str) -> ConnectionId {
    let mut id = base.to_owned();
    let mut k = 2;
    while platform.connection(&id).is_some() {
        id = format!("{base}_{k}");
        k += 1;
    }
    id.into()
}

/// Batch size for a reader of hardware memory: the ratio of the consumer's
/// to the producer's repetition count, reduced when it is not an integer.
fn batch_size(q_src: u64, q_dst: u64) -> u64 {
    let g = q_src.gcd(&q_dst).max(1);
    (q_dst / g).max(1)
}

/// Moves `spec.actor` to a new hardware block and rebinds its channels.
pub fn migrate_task(
    graph: &Sdfg,
    platform: &Platform,
    mapping: &Mapping,
    spec: &MigrationSpec,
    build: &BuildOptions,
) -> Result<MigrationOutcome> {
    let id = &spec.actor;
    let actor = graph.actor(id.as_str()).ok_or_else(|| Error::UnknownActor(id.clone()))?;
    if actor.kind == ActorKind::Hardware {
        return Err(Error::AlreadyHardware(id.clone()));
    }
    if actor.kind != ActorKind::Software {
        return Err(Error::InvalidParameter(format!("`{id}` is not an application task")));
    }
    if spec.params.hw_buffer_tokens == 0 {
        return Err(Error::InvalidParameter("hardware buffer must hold at least one token".into()));
    }
    let old_tile_id = mapping.tile_of(id.as_str()).ok_or_else(|| Error::UnmappedActor(id.clone()))?.clone();
    let old_tile = platform.tile(old_tile_id.as_str()).ok_or_else(|| Error::UnknownTile(old_tile_id.clone()))?;
    let link = match &spec.params.hw_connection {
        Some(l) => l.clone(),
        None => inherited_link(graph, platform, mapping, id, &old_tile_id).ok_or_else(|| {
            Error::InvalidParameter(format!("no connection parameters available for the hardware block of `{id}`"))
        })?,
    };
    let q = compute_repetition_vector(graph)?;

    let mut application = graph.clone();
    {
        let a = application.actor_mut(id.as_str()).expect("checked above");
        a.exec_time = accelerated_time(a.exec_time, &spec.params.speedup)?;
        a.kind = ActorKind::Hardware;
    }

    let mut new_platform = platform.clone();
    let hw_tile = fresh_tile_id(&new_platform, &format!("HW_{id}"));
    new_platform.tiles.push(Tile::hardware_block(hw_tile.clone(), old_tile.clock_hz.clone()));

    let mut new_mapping = mapping.clone();
    new_mapping.actor_tile.insert(id.clone(), hw_tile.clone());
    new_mapping.tdma_slice.remove(id.as_str());

    for ch in &graph.channels {
        if ch.is_self_loop() || (ch.src != *id && ch.dst != *id) {
            continue;
        }
        let Some(old) = mapping.channel_binding.get(&ch.id).cloned() else { continue };
        let peer = if ch.src == *id { &ch.dst } else { &ch.src };
        let peer_tile = new_mapping.tile_of(peer.as_str()).ok_or_else(|| Error::UnmappedActor(peer.clone()))?.clone();
        let connection =
            match new_platform.connections.iter().find(|c| c.bidirectional && c.joins(&hw_tile, &peer_tile)) {
                Some(c) => c.id.clone(),
                None => {
                    let cid = fresh_connection_id(&new_platform, &format!("{hw_tile}-{peer_tile}"));
                    new_platform.connections.push(NocConnection {
                        id: cid.clone(),
                        src_tile: hw_tile.clone(),
                        dst_tile: peer_tile.clone(),
                        latency: link.latency,
                        bandwidth: link.bandwidth.clone(),
                        bidirectional: true,
                    });
                    cid
                }
            };
        let (src_buffer, dst_buffer) = match &old {
            ChannelBinding::Local { buffer_tokens } => (*buffer_tokens, spec.params.hw_buffer_tokens),
            ChannelBinding::Remote { src_buffer, dst_buffer, .. } => (*src_buffer, *dst_buffer),
            ChannelBinding::RemoteMemory { producer_buffer, .. } => (*producer_buffer, spec.params.hw_buffer_tokens),
        };
        let binding = match (classify_channel(ch, &application), old) {
            // Hardware to hardware keeps whatever infrastructure the channel
            // already had; only the connection changes.
            (
                CommClass::HH1,
                ChannelBinding::RemoteMemory { batch, prefetch_time, fetch_path, producer_buffer, .. },
            ) => ChannelBinding::RemoteMemory { connection, batch, prefetch_time, fetch_path, producer_buffer },
            (CommClass::SH1 | CommClass::HH1, _) => {
                ChannelBinding::Remote { connection, src_buffer: src_buffer.max(1), dst_buffer: dst_buffer.max(1) }
            }
            (CommClass::HS1, _) => {
                let (qs, qd) = (q.get(ch.src.as_str()).unwrap_or(1), q.get(ch.dst.as_str()).unwrap_or(1));
                ChannelBinding::RemoteMemory {
                    connection,
                    batch: batch_size(qs, qd),
                    prefetch_time: spec.params.prefetch_time,
                    fetch_path: ch.cons_rate > spec.params.prefetch_tokens,
                    producer_buffer: spec.params.hw_buffer_tokens,
                }
            }
            (CommClass::SS, _) => unreachable!("one endpoint is the migrated task"),
        };
        new_mapping.channel_binding.insert(ch.id.clone(), binding);
    }

    let analysable = apply_mapping(&application, &new_platform, &new_mapping, build)?;
    Ok(MigrationOutcome { application, platform: new_platform, mapping: new_mapping, graph: analysable })
}

/// Throughput gain of a migration in iterations per second.
pub fn migration_gain(base: &ThroughputResult, migrated: &ThroughputResult, clock_hz: &Rational) -> Rational {
    to_frames_per_second(migrated, clock_hz) - to_frames_per_second(base, clock_hz)
}

#[derive(Clone, Debug)]
pub struct ExplorationEntry {
    pub actor: ActorId,
    /// Throughput after migration and gain in iterations per second, or
    /// the reason the candidate could not be evaluated.
    pub outcome: std::result::Result<(ThroughputResult, Rational), String>,
}

impl ExplorationEntry {
    pub fn gain(&self) -> Option<&Rational> {
        self.outcome.as_ref().ok().map(|(_, g)| g)
    }
}

/// Ranking: successful candidates by descending gain, then failures; ties
/// are broken by actor id.
fn rank(a: &ExplorationEntry, b: &ExplorationEntry) -> Ordering {
    match (a.gain(), b.gain()) {
        (Some(x), Some(y)) => y.cmp(x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.actor.cmp(&b.actor))
}

/// Evaluates the migration of every software task against `baseline`.
/// Candidates are analysed in parallel; the result order does not depend on
/// scheduling.
#[allow(clippy::too_many_arguments)]
pub fn explore_single_migrations(
    graph: &Sdfg,
    platform: &Platform,
    mapping: &Mapping,
    params: &MigrationParams,
    baseline: &ThroughputResult,
    clock_hz: &Rational,
    build: &BuildOptions,
    analysis: &AnalysisOptions,
) -> Vec<ExplorationEntry> {
    let candidates: Vec<&ActorId> =
        graph.actors.iter().filter(|a| a.kind == ActorKind::Software).map(|a| &a.id).collect();
    let mut entries: Vec<ExplorationEntry> = candidates
        .par_iter()
        .map(|&actor| {
            let spec = MigrationSpec::new(actor.clone(), params.clone());
            let outcome = migrate_task(graph, platform, mapping, &spec, build)
                .and_then(|m| self_timed_throughput(&m.graph, analysis))
                .map(|r| {
                    let gain = migration_gain(baseline, &r, clock_hz);
                    (r, gain)
                })
                .map_err(|e| e.to_string());
            ExplorationEntry { actor: actor.clone(), outcome }
        })
        .collect();
    entries.sort_by(rank);
    entries
}
