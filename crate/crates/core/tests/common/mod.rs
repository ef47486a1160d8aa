//! Random graph and scenario generators plus a brute-force cycle oracle,
//! shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::TestRng;

use sdfmig::migration::LinkParams;
use sdfmig::platform::{ChannelBinding, Mapping, NocConnection, Platform, Tile};
use sdfmig::rational::{self, Rational};
use sdfmig::scenario::Meta;
use sdfmig::transforms::{BuildOptions, DstBackEdge};
use sdfmig::{Actor, ActorKind, Channel, MigrationParams, Scenario, Sdfg};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn mjpeg() -> Scenario {
    Scenario::load(fixture("mjpeg_base.toml")).expect("bundled fixture loads")
}

pub fn rng(seed: u64) -> TestRng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &bytes)
}

/// Maximum cycle mean by enumerating every simple cycle of a homogeneous
/// graph. `None` when some cycle carries no tokens.
pub fn brute_force_mcm(graph: &Sdfg) -> Option<Rational> {
    let index: BTreeMap<&str, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let et: Vec<u64> = graph.actors.iter().map(|a| a.exec_time).collect();
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); et.len()];
    for c in &graph.channels {
        adj[index[c.src.as_str()]].push((index[c.dst.as_str()], c.initial_tokens));
    }

    let mut best: Option<Rational> = None;
    let mut live = true;
    for start in 0..et.len() {
        let mut on_path = vec![false; et.len()];
        on_path[start] = true;
        walk(start, start, et[start], 0, &adj, &et, &mut on_path, &mut best, &mut live);
    }
    live.then(|| best.unwrap_or_else(|| rational::from_u64(0)))
}

#[allow(clippy::too_many_arguments)]
fn walk(
    start: usize,
    node: usize,
    time: u64,
    tokens: u64,
    adj: &[Vec<(usize, u64)>],
    et: &[u64],
    on_path: &mut [bool],
    best: &mut Option<Rational>,
    live: &mut bool,
) {
    for &(next, t) in &adj[node] {
        if next == start {
            let tokens = tokens + t;
            if tokens == 0 {
                *live = false;
                continue;
            }
            let mean = rational::ratio(time, tokens);
            if best.as_ref().is_none_or(|b| mean > *b) {
                *best = Some(mean);
            }
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            walk(start, next, time + et[next], tokens + t, adj, et, on_path, best, live);
            on_path[next] = false;
        }
    }
}

/// Homogeneous, strongly connected, live graph with at most `max_actors`.
pub fn random_live_hsdf(rng: &mut TestRng, max_actors: usize) -> Sdfg {
    loop {
        let n = rng.random_range(1..=max_actors);
        let mut g = Sdfg::new();
        for i in 0..n {
            g.add_actor(Actor::software(format!("a{i}"), rng.random_range(1..=20))).unwrap();
        }
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut k = 0;
        let mut push = |g: &mut Sdfg, s: usize, d: usize, t: u64| {
            g.add_channel(Channel::new(format!("c{k}"), format!("a{s}"), format!("a{d}")).tokens(t)).unwrap();
            k += 1;
        };
        let closing = rng.random_range(0..n);
        for i in 0..n {
            let t = if i == closing { rng.random_range(1..=2) } else { rng.random_range(0..=1) };
            push(&mut g, order[i], order[(i + 1) % n], t);
        }
        for _ in 0..rng.random_range(0..=n + 2) {
            let (s, d) = (rng.random_range(0..n), rng.random_range(0..n));
            push(&mut g, s, d, rng.random_range(0..=2));
        }
        if brute_force_mcm(&g).is_some() {
            return g;
        }
    }
}

/// Consistent, strongly connected multirate graph that is live by
/// construction: a ring of actors whose rates follow a random repetition
/// vector, each backward edge holding one iteration's worth of tokens.
pub fn random_live_sdf(rng: &mut TestRng, max_actors: usize) -> Sdfg {
    let n = rng.random_range(2..=max_actors);
    let q: Vec<u64> = (0..n).map(|_| rng.random_range(1..=3)).collect();
    let mut g = Sdfg::new();
    for i in 0..n {
        g.add_actor(Actor::software(format!("a{i}"), rng.random_range(0..=30))).unwrap();
    }
    if g.actors.iter().all(|a| a.exec_time == 0) {
        g.actors[0].exec_time = 1;
    }
    let mut k = 0;
    let mut push = |g: &mut Sdfg, s: usize, d: usize, rng: &mut TestRng| {
        let gcd = num_integer::gcd(q[s], q[d]);
        let (prod, cons) = (q[d] / gcd, q[s] / gcd);
        let tokens = if d <= s { cons * q[d] * rng.random_range(1..=2) } else { rng.random_range(0..=1) };
        g.add_channel(Channel::new(format!("c{k}"), format!("a{s}"), format!("a{d}")).rates(prod, cons).tokens(tokens))
            .unwrap();
        k += 1;
    };
    for i in 0..n {
        push(&mut g, i, (i + 1) % n, rng);
    }
    for _ in 0..rng.random_range(0..=n) {
        let (s, d) = (rng.random_range(0..n), rng.random_range(0..n));
        push(&mut g, s, d, rng);
    }
    g.reference_actor = Some(format!("a{}", rng.random_range(0..n)).into());
    g
}

fn random_rational(rng: &mut TestRng) -> Rational {
    Rational::new(BigInt::from(rng.random_range(1..=50u64)), BigInt::from(rng.random_range(1..=1000u64)))
}

/// Mapped scenario on up to three processor tiles, fully connected by
/// one-way NoC connections. Every channel is bound; the scenario validates.
pub fn random_scenario(rng: &mut TestRng, id: usize) -> Scenario {
    let mut graph = random_live_sdf(rng, 6);
    for a in &mut graph.actors {
        if rng.random_bool(0.3) {
            a.name = format!("task \"{}\"", a.id);
        }
        a.exec_time = rng.random_range(1..=5000);
    }
    for c in &mut graph.channels {
        c.token_size = rng.random_range(0..=64);
    }
    if rng.random_bool(0.5) {
        graph.reference_actor = None;
    }

    let clock = rational::from_u64(rng.random_range(1..=1000) * 1_000_000);
    let n_tiles = rng.random_range(1..=3usize);
    let wheel = 1000;
    let mut platform = Platform::default();
    for t in 0..n_tiles {
        platform.tiles.push(Tile::processor(format!("T{t}"), wheel, clock.clone()));
    }
    for s in 0..n_tiles {
        for d in 0..n_tiles {
            if s != d {
                platform.connections.push(NocConnection {
                    id: format!("C{s}{d}").into(),
                    src_tile: format!("T{s}").into(),
                    dst_tile: format!("T{d}").into(),
                    latency: rng.random_range(1..=5),
                    bandwidth: random_rational(rng),
                    bidirectional: false,
                });
            }
        }
    }

    let mut mapping = Mapping::default();
    let per_tile = wheel / graph.actors.len() as u64;
    for a in &graph.actors {
        mapping.actor_tile.insert(a.id.clone(), format!("T{}", rng.random_range(0..n_tiles)).into());
        mapping.tdma_slice.insert(a.id.clone(), rng.random_range(1..=per_tile));
    }
    for c in &graph.channels {
        let (ts, td) = (&mapping.actor_tile[&c.src], &mapping.actor_tile[&c.dst]);
        let binding = if ts == td {
            ChannelBinding::Local {
                buffer_tokens: c.initial_tokens + c.prod_rate + c.cons_rate + rng.random_range(0..=3),
            }
        } else {
            let conn = format!("C{}{}", &ts.as_str()[1..], &td.as_str()[1..]);
            if rng.random_bool(0.3) {
                mapping.channel_latency_bound.insert(c.id.clone(), rng.random_range(0..=wheel));
            }
            ChannelBinding::Remote {
                connection: conn.into(),
                src_buffer: c.prod_rate + rng.random_range(0..=2),
                dst_buffer: c.initial_tokens.max(c.cons_rate) + rng.random_range(0..=2),
            }
        };
        mapping.channel_binding.insert(c.id.clone(), binding);
    }

    let defaults = MigrationParams {
        speedup: Rational::new(BigInt::from(rng.random_range(2..=9u64)), BigInt::from(rng.random_range(1..=2u64))),
        prefetch_time: rng.random_range(0..=100),
        hw_connection: Some(LinkParams { latency: rng.random_range(1..=5), bandwidth: random_rational(rng) }),
        hw_buffer_tokens: rng.random_range(1..=4),
        prefetch_tokens: rng.random_range(1..=3),
    };
    let build = BuildOptions {
        keep_auto_concurrency: rng.random_bool(0.5),
        dst_back_edge: if rng.random_bool(0.5) { DstBackEdge::Connection } else { DstBackEdge::Synchronisation },
    };

    Scenario {
        meta: Meta {
            name: format!("random_{id}"),
            description: format!("generated #{id}\nsecond line"),
            clock_hz: clock,
        },
        graph,
        platform,
        mapping: Some(mapping),
        build,
        defaults,
    }
}

pub fn infrastructure_count(graph: &Sdfg) -> usize {
    graph.actors.iter().filter(|a| a.kind == ActorKind::Infrastructure).count()
}
