//! Graph rewrites that embed mapping decisions into an SDFG.
//!
//! All rewrites are local: actors and channels they do not name are copied
//! unchanged. Inserted actors are of kind [`ActorKind::Infrastructure`].

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::graph::{disable_auto_concurrency, Actor, ActorId, ActorKind, Channel, ChannelId, Sdfg};
use crate::platform::{compute_etam, tdma_wait, validate_mapping, ChannelBinding, Mapping, NocConnection, Platform};
use crate::rational;

/// Cycles needed to send one token of `token_size` bytes over `connection`:
/// `L(c) + floor(token_size / bandwidth)`.
pub fn connection_actor_time(token_size: u64, connection: &NocConnection) -> Result<u64> {
    let transfer = rational::floor_div(token_size, &connection.bandwidth)
        .ok_or_else(|| Error::InvalidParameter(format!("bandwidth of `{}` must be positive", connection.id)))?;
    connection.latency.checked_add(transfer).ok_or(Error::Overflow("computing a connection actor time"))
}

fn channel_or_err<'a>(graph: &'a Sdfg, channel: &str) -> Result<&'a Channel> {
    graph.channel(channel).ok_or_else(|| Error::UnknownChannel(channel.into()))
}

/// Models a channel inside one tile whose memory holds `buffer_tokens`: adds
/// a back-edge carrying the free space.
pub fn bind_local_channel(graph: &Sdfg, channel: &str, buffer_tokens: u64) -> Result<Sdfg> {
    let ch = channel_or_err(graph, channel)?.clone();
    if buffer_tokens < ch.initial_tokens {
        return Err(Error::BufferTooSmall { channel: ch.id, buffer: buffer_tokens, initial: ch.initial_tokens });
    }
    let mut out = graph.clone();
    let id = out.fresh_channel_id(&format!("{}_space", ch.id));
    out.add_channel(
        Channel::new(id, ch.dst.clone(), ch.src.clone())
            .rates(ch.cons_rate, ch.prod_rate)
            .tokens(buffer_tokens - ch.initial_tokens)
            .token_size(ch.token_size),
    )?;
    Ok(out)
}

/// Where the destination-side space back-edge of a remote chain ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DstBackEdge {
    /// `dst -> a_c`: the sender waits for space at the receiver.
    #[default]
    Connection,
    /// `dst -> a_s`.
    Synchronisation,
}

impl DstBackEdge {
    pub fn as_str(self) -> &'static str {
        match self {
            DstBackEdge::Connection => "connection",
            DstBackEdge::Synchronisation => "synchronisation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "connection" => Some(DstBackEdge::Connection),
            "synchronisation" => Some(DstBackEdge::Synchronisation),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteBindingParams {
    pub alpha_src: u64,
    pub alpha_dst: u64,
    pub token_size: u64,
    pub connection: NocConnection,
    pub latency_bound: u64,
    pub dst_back_edge: DstBackEdge,
}

/// Actors inserted by [`bind_remote_channel`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteChain {
    pub connection: ActorId,
    pub latency: ActorId,
    pub synchronisation: ActorId,
}

/// Replaces a channel by the chain `src -> a_c -> a -> a_s -> dst`.
///
/// `a_c` sends one token over the connection, `a` accounts for the channel's
/// latency bound and `a_s` for the wait of `dst` on its TDMA slot.
pub fn bind_remote_channel(
    graph: &Sdfg,
    channel: &str,
    params: &RemoteBindingParams,
    dst_wait: u64,
) -> Result<(Sdfg, RemoteChain)> {
    let ch = channel_or_err(graph, channel)?.clone();
    if ch.is_self_loop() {
        return Err(Error::SameTile(ch.id));
    }
    if params.alpha_src == 0 || params.alpha_dst == 0 {
        return Err(Error::InvalidParameter(format!("buffers of `{}` must hold at least one token", ch.id)));
    }
    let transfer = connection_actor_time(params.token_size, &params.connection)?;
    let mut out = graph.clone();
    out.remove_channel(channel);

    let ac = out.fresh_actor_id(&format!("ac_{}", ch.id));
    out.add_actor(Actor::infrastructure(ac.clone(), transfer))?;
    let a = out.fresh_actor_id(&format!("a_{}", ch.id));
    out.add_actor(Actor::infrastructure(a.clone(), params.latency_bound))?;
    let as_ = out.fresh_actor_id(&format!("as_{}", ch.id));
    out.add_actor(Actor::infrastructure(as_.clone(), dst_wait))?;

    let size = ch.token_size;
    let mut edge = |name: String, src: &ActorId, dst: &ActorId, prod: u64, cons: u64, tokens: u64| {
        let id = out.fresh_channel_id(&name);
        out.add_channel(Channel::new(id, src.clone(), dst.clone()).rates(prod, cons).tokens(tokens).token_size(size))
    };
    edge(format!("{}_send", ch.id), &ch.src, &ac, ch.prod_rate, 1, 0)?;
    edge(format!("{}_net", ch.id), &ac, &a, 1, 1, 0)?;
    edge(format!("{}_sync", ch.id), &a, &as_, 1, 1, 0)?;
    edge(ch.id.to_string(), &as_, &ch.dst, 1, ch.cons_rate, ch.initial_tokens)?;
    edge(format!("{}_src_space", ch.id), &ac, &ch.src, 1, ch.prod_rate, params.alpha_src)?;
    let space_target = match params.dst_back_edge {
        DstBackEdge::Connection => &ac,
        DstBackEdge::Synchronisation => &as_,
    };
    edge(format!("{}_dst_space", ch.id), &ch.dst, space_target, ch.cons_rate, 1, params.alpha_dst)?;
    for actor in [&ac, &a, &as_] {
        edge(format!("{actor}_self"), actor, actor, 1, 1, 1)?;
    }
    Ok((out, RemoteChain { connection: ac, latency: a, synchronisation: as_ }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryAwareParams {
    /// Input channels whose data lives in remote memory. They share one
    /// gate and one prefetch pipeline.
    pub inputs: Vec<ChannelId>,
    /// Firings of the actor released per batch.
    pub n: u64,
    pub prefetch_time: u64,
    pub transfer_time: u64,
    pub enable_fetch_path: bool,
}

/// Actors that replace the transformed actor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryAwareActors {
    pub gate_in: ActorId,
    pub prefetch: ActorId,
    pub memory: ActorId,
    pub execute: ActorId,
    pub fetch: Option<ActorId>,
    pub gate_out: ActorId,
}

/// Splits `actor` into a prefetching pipeline that reads its input from a
/// remote memory.
///
/// The gate `A_i` waits for `n` firings' worth of input and releases a batch
/// of `n` firings. For each firing `B1` issues a prefetch that `m1`
/// completes, and `B2` executes while the next prefetch is under way. `A_o`
/// collects the batch and re-opens `A_i`. When the fetch path is enabled,
/// `m2` additionally fetches data on demand before each `B2` firing.
pub fn memory_aware_transform(
    graph: &Sdfg,
    actor: &str,
    params: &MemoryAwareParams,
) -> Result<(Sdfg, MemoryAwareActors)> {
    let b = graph.actor(actor).ok_or_else(|| Error::UnknownActor(actor.into()))?.clone();
    if params.inputs.is_empty() {
        return Err(Error::InvalidParameter(format!("`{actor}` has no remote input to gate")));
    }
    for id in &params.inputs {
        let input = channel_or_err(graph, id.as_str())?;
        if input.dst != b.id || input.is_self_loop() {
            return Err(Error::InvalidParameter(format!("`{id}` is not an external input of `{actor}`")));
        }
    }
    if params.n == 0 {
        return Err(Error::InvalidParameter("batch size n must be at least 1".into()));
    }
    let n = params.n;
    let memory_time = params
        .prefetch_time
        .checked_add(params.transfer_time)
        .ok_or(Error::Overflow("computing the memory actor time"))?;

    let mut out = graph.clone();
    out.remove_actor(actor);
    let add = |out: &mut Sdfg, name: String, et: u64, kind: ActorKind| -> Result<ActorId> {
        let id = out.fresh_actor_id(&name);
        out.add_actor(Actor::new(id.clone(), et, kind))?;
        Ok(id)
    };
    let gate_in = add(&mut out, format!("{actor}_ri"), 1, ActorKind::Infrastructure)?;
    let prefetch = add(&mut out, format!("{actor}1"), params.prefetch_time, b.kind)?;
    let memory = add(&mut out, format!("{actor}_m1"), memory_time, ActorKind::Infrastructure)?;
    let execute = add(&mut out, format!("{actor}2"), b.exec_time, b.kind)?;
    let fetch = if params.enable_fetch_path {
        Some(add(&mut out, format!("{actor}_m2"), params.transfer_time, ActorKind::Infrastructure)?)
    } else {
        None
    };
    let gate_out = add(&mut out, format!("{actor}_ro"), 1, ActorKind::Infrastructure)?;

    // Re-attach the actor's channels: the remote inputs feed the gate,
    // everything else (self-loops included) moves to the execute actor.
    for ch in &mut out.channels {
        if params.inputs.contains(&ch.id) {
            ch.dst = gate_in.clone();
            ch.cons_rate = ch.cons_rate.checked_mul(n).ok_or(Error::Overflow("scaling the gate rate"))?;
            continue;
        }
        if ch.src == b.id {
            ch.src = execute.clone();
        }
        if ch.dst == b.id {
            ch.dst = execute.clone();
        }
    }
    if out.reference_actor.as_ref() == Some(&b.id) {
        out.reference_actor = Some(execute.clone());
    }

    let edge = |out: &mut Sdfg, src: &ActorId, dst: &ActorId, prod: u64, cons: u64, tokens: u64| -> Result<()> {
        let id = out.fresh_channel_id(&format!("{src}_{dst}"));
        out.add_channel(Channel::new(id, src.clone(), dst.clone()).rates(prod, cons).tokens(tokens))
    };
    edge(&mut out, &gate_in, &memory, n, 1, 0)?;
    edge(&mut out, &memory, &gate_in, 1, n, n)?;
    edge(&mut out, &prefetch, &memory, 1, 1, 0)?;
    edge(&mut out, &memory, &prefetch, 1, 1, 1)?;
    edge(&mut out, &memory, &execute, 1, 1, 0)?;
    edge(&mut out, &prefetch, &execute, 1, 1, 1)?;
    if let Some(m2) = &fetch {
        edge(&mut out, m2, &execute, 1, 1, 0)?;
        edge(&mut out, &execute, m2, 1, 1, 1)?;
    }
    edge(&mut out, &execute, &gate_out, 1, n, 0)?;
    edge(&mut out, &gate_out, &execute, n, 1, n)?;
    edge(&mut out, &gate_out, &gate_in, 1, 1, 1)?;

    Ok((out, MemoryAwareActors { gate_in, prefetch, memory, execute, fetch, gate_out }))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Keep actors able to overlap their own firings.
    pub keep_auto_concurrency: bool,
    pub dst_back_edge: DstBackEdge,
}

/// Builds the analysable graph of a mapped application: execution times
/// become ETAMs, every bound channel is rewritten according to its binding
/// and, unless disabled, auto-concurrency is removed.
pub fn apply_mapping(graph: &Sdfg, platform: &Platform, mapping: &Mapping, options: &BuildOptions) -> Result<Sdfg> {
    let diags = validate_mapping(graph, platform, mapping);
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    let etam = compute_etam(graph, platform, mapping)?;
    let mut out = graph.clone();
    for actor in &mut out.actors {
        actor.exec_time = etam[&actor.id];
    }

    // Memory-aware rewrites replace actors, so they run after every channel
    // touching those actors has been bound.
    let mut gated: BTreeMap<&ActorId, Vec<(&Channel, &ChannelBinding)>> = BTreeMap::new();
    for ch in &graph.channels {
        let Some(binding) = mapping.channel_binding.get(&ch.id) else { continue };
        match binding {
            ChannelBinding::Local { buffer_tokens } => {
                out = bind_local_channel(&out, ch.id.as_str(), *buffer_tokens)?;
            }
            ChannelBinding::Remote { connection, src_buffer, dst_buffer } => {
                let params = RemoteBindingParams {
                    alpha_src: *src_buffer,
                    alpha_dst: *dst_buffer,
                    token_size: ch.token_size,
                    connection: platform.connection(connection.as_str()).expect("validated").clone(),
                    latency_bound: mapping.latency_bound(platform, ch),
                    dst_back_edge: options.dst_back_edge,
                };
                let wait = tdma_wait(ch.dst.as_str(), platform, mapping)?;
                out = bind_remote_channel(&out, ch.id.as_str(), &params, wait)?.0;
            }
            ChannelBinding::RemoteMemory { .. } => gated.entry(&ch.dst).or_default().push((ch, binding)),
        }
    }

    // An actor reading several remote memories gets one pipeline: the
    // batch is the gcd of the requested batches, one prefetch covers the
    // longest prefetch time and the transfers of every input.
    for (actor, inputs) in gated {
        let mut params = MemoryAwareParams {
            inputs: Vec::new(),
            n: 0,
            prefetch_time: 0,
            transfer_time: 0,
            enable_fetch_path: false,
        };
        for (ch, binding) in &inputs {
            let ChannelBinding::RemoteMemory { connection, batch, prefetch_time, fetch_path, .. } = binding else {
                unreachable!("only remote-memory bindings are gated")
            };
            let conn = platform.connection(connection.as_str()).expect("validated");
            let bytes =
                ch.token_size.checked_mul(ch.cons_rate).ok_or(Error::Overflow("computing the bytes of one firing"))?;
            params.inputs.push(ch.id.clone());
            params.n = params.n.gcd(batch);
            params.prefetch_time = params.prefetch_time.max(*prefetch_time);
            params.transfer_time = params
                .transfer_time
                .checked_add(connection_actor_time(bytes, conn)?)
                .ok_or(Error::Overflow("summing transfer times"))?;
            params.enable_fetch_path |= *fetch_path;
        }
        let (next, actors) = memory_aware_transform(&out, actor.as_str(), &params)?;
        out = next;
        for (ch, binding) in inputs {
            let ChannelBinding::RemoteMemory { producer_buffer, .. } = binding else { unreachable!() };
            // Space in the producer's memory is released once the data is read.
            let id = out.fresh_channel_id(&format!("{}_space", ch.id));
            out.add_channel(
                Channel::new(id, actors.memory.clone(), ch.src.clone())
                    .rates(ch.cons_rate, ch.prod_rate)
                    .tokens(*producer_buffer)
                    .token_size(ch.token_size),
            )?;
        }
    }
    if !options.keep_auto_concurrency {
        out = disable_auto_concurrency(&out);
    }
    Ok(out)
}
