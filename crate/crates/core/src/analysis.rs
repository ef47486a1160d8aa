//! Throughput analysis.
//!
//! [`self_timed_throughput`] explores the self-timed state space until a
//! state recurs. [`mcm_throughput`] computes the maximum cycle mean of a
//! homogeneous graph with Karp's algorithm and serves as an independent check.
//!
//! Firing semantics: input tokens are consumed when a firing starts, output
//! tokens are produced when it ends. At every timestamp completions and
//! starts are repeated until nothing changes, so zero-time actors fire
//! without advancing the clock. Actors are started in id order.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::graph::{compute_repetition_vector, ActorId, ChannelId, RepetitionVector, Sdfg};
use crate::rational::{self, Rational};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Maximum number of distinct states stored before giving up.
    pub state_budget: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { state_budget: DEFAULT_STATE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThroughputResult {
    /// Graph iterations per clock cycle, reduced.
    pub iterations_per_cycle: Rational,
    pub period_cycles: u64,
    pub transient_cycles: u64,
    pub reference_firings_per_period: u64,
    pub reference_actor: ActorId,
}

/// Snapshot of a self-timed execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionState {
    pub channel_tokens: BTreeMap<ChannelId, u64>,
    /// Ongoing firings as (actor, remaining time), sorted.
    pub active_firings: Vec<(ActorId, u64)>,
}

/// Step-wise self-timed execution of a graph.
pub struct SelfTimedExecution<'g> {
    graph: &'g Sdfg,
    /// Actor indices in id order.
    order: Vec<usize>,
    inputs: Vec<Vec<(usize, u64)>>,
    outputs: Vec<Vec<(usize, u64)>>,
    exec_time: Vec<u64>,
    tokens: Vec<u64>,
    /// (actor index, remaining time), kept sorted.
    active: Vec<(usize, u64)>,
    time: u64,
    starts: Vec<u64>,
    /// Upper bound on firings within one timestamp before the graph is
    /// declared to contain a zero-time cycle.
    instant_limit: u64,
}

impl<'g> SelfTimedExecution<'g> {
    pub fn new(graph: &'g Sdfg) -> Result<Self> {
        let index: HashMap<&str, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
        let n = graph.actors.len();
        let mut inputs = vec![Vec::new(); n];
        let mut outputs = vec![Vec::new(); n];
        for (ci, c) in graph.channels.iter().enumerate() {
            let s = *index.get(c.src.as_str()).ok_or_else(|| Error::UnknownActor(c.src.clone()))?;
            let d = *index.get(c.dst.as_str()).ok_or_else(|| Error::UnknownActor(c.dst.clone()))?;
            outputs[s].push((ci, c.prod_rate));
            inputs[d].push((ci, c.cons_rate));
        }
        for (i, a) in graph.actors.iter().enumerate() {
            if inputs[i].is_empty() {
                return Err(Error::Unbounded { reason: format!("actor `{}` has no input channel", a.id) });
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| graph.actors[a].id.cmp(&graph.actors[b].id));
        let instant_limit = 1_000 + 1_000 * graph.channels.iter().map(|c| c.initial_tokens).sum::<u64>();
        let mut exec = Self {
            graph,
            order,
            inputs,
            outputs,
            exec_time: graph.actors.iter().map(|a| a.exec_time).collect(),
            tokens: graph.channels.iter().map(|c| c.initial_tokens).collect(),
            active: Vec::new(),
            time: 0,
            starts: vec![0; n],
            instant_limit,
        };
        exec.settle()?;
        Ok(exec)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Number of firings of `actor` started so far.
    pub fn starts(&self, actor: &str) -> Option<u64> {
        self.graph.actors.iter().position(|a| a.id == *actor).map(|i| self.starts[i])
    }

    pub fn state(&self) -> ExecutionState {
        let channel_tokens = self.graph.channels.iter().zip(&self.tokens).map(|(c, &t)| (c.id.clone(), t)).collect();
        let mut active_firings: Vec<(ActorId, u64)> =
            self.active.iter().map(|&(a, r)| (self.graph.actors[a].id.clone(), r)).collect();
        active_firings.sort();
        ExecutionState { channel_tokens, active_firings }
    }

    fn key(&self) -> Vec<u64> {
        let mut key = Vec::with_capacity(self.tokens.len() + 2 * self.active.len());
        key.extend_from_slice(&self.tokens);
        for &(a, r) in &self.active {
            key.push(a as u64);
            key.push(r);
        }
        key
    }

    fn enabled(&self, actor: usize) -> bool {
        self.inputs[actor].iter().all(|&(c, rate)| self.tokens[c] >= rate)
    }

    /// Completes due firings and starts enabled ones until a fixpoint.
    fn settle(&mut self) -> Result<()> {
        let mut fired = 0u64;
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < self.active.len() {
                if self.active[i].1 == 0 {
                    let (a, _) = self.active.remove(i);
                    for &(c, rate) in &self.outputs[a] {
                        self.tokens[c] = self.tokens[c].checked_add(rate).ok_or(Error::Overflow("producing tokens"))?;
                    }
                    changed = true;
                } else {
                    i += 1;
                }
            }
            for k in 0..self.order.len() {
                let a = self.order[k];
                while self.enabled(a) {
                    for &(c, rate) in &self.inputs[a] {
                        self.tokens[c] -= rate;
                    }
                    self.active.push((a, self.exec_time[a]));
                    self.starts[a] += 1;
                    changed = true;
                    fired += 1;
                    if fired > self.instant_limit {
                        return Err(Error::Unbounded {
                            reason: "firings do not advance time (zero-time cycle or unbounded auto-concurrency)"
                                .into(),
                        });
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.active.sort_unstable();
        Ok(())
    }

    /// Advances to the next completion time. Fails with `Deadlock` when
    /// nothing is running.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.active.iter().map(|&(_, r)| r).min().ok_or(Error::Deadlock { time: self.time })?;
        for f in &mut self.active {
            f.1 -= dt;
        }
        self.time = self.time.checked_add(dt).ok_or(Error::Overflow("advancing time"))?;
        self.settle()
    }

    /// Steps until the clock reaches at least `time`.
    pub fn run_until(&mut self, time: u64) -> Result<()> {
        while self.time < time {
            self.step()?;
        }
        Ok(())
    }
}

struct Recurrence {
    transient: u64,
    period: u64,
    firings: u64,
}

fn find_recurrence(graph: &Sdfg, reference: &str, options: &AnalysisOptions) -> Result<Recurrence> {
    let mut exec = SelfTimedExecution::new(graph)?;
    let r =
        graph.actors.iter().position(|a| a.id == *reference).ok_or_else(|| Error::UnknownActor(reference.into()))?;
    let mut seen: HashMap<Vec<u64>, (u64, u64)> = HashMap::new();
    loop {
        let key = exec.key();
        if let Some(&(t0, f0)) = seen.get(&key) {
            return Ok(Recurrence { transient: t0, period: exec.time - t0, firings: exec.starts[r] - f0 });
        }
        if seen.len() >= options.state_budget {
            return Err(Error::StateSpaceBudgetExceeded { budget: options.state_budget });
        }
        seen.insert(key, (exec.time, exec.starts[r]));
        exec.step()?;
    }
}

fn subgraph(graph: &Sdfg, members: &[usize]) -> Sdfg {
    let ids: Vec<&ActorId> = members.iter().map(|&i| &graph.actors[i].id).collect();
    Sdfg {
        actors: members.iter().map(|&i| graph.actors[i].clone()).collect(),
        channels: graph.channels.iter().filter(|c| ids.contains(&&c.src) && ids.contains(&&c.dst)).cloned().collect(),
        reference_actor: None,
    }
}

fn strongly_connected_components(graph: &Sdfg) -> Vec<Vec<usize>> {
    let index: HashMap<&str, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..graph.actors.len()).map(|i| g.add_node(i)).collect();
    for c in &graph.channels {
        g.add_edge(nodes[index[c.src.as_str()]], nodes[index[c.dst.as_str()]], ());
    }
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|scc| {
            let mut v: Vec<usize> = scc.into_iter().map(|n| g[n]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sccs.sort();
    sccs
}

/// Exact throughput of `graph` by self-timed state-space exploration.
///
/// Graphs that are not strongly connected are split into strongly connected
/// components; each component is analysed on its own (with unbounded
/// buffers between components) and the slowest one determines the result.
/// Components consisting of a single actor without a self-loop impose no
/// bound.
pub fn self_timed_throughput(graph: &Sdfg, options: &AnalysisOptions) -> Result<ThroughputResult> {
    if graph.actors.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let q = compute_repetition_vector(graph)?;
    let sccs = strongly_connected_components(graph);
    if sccs.len() == 1 {
        let reference = graph.resolve_reference_actor(&q).ok_or(Error::EmptyGraph)?;
        return component_throughput(graph, &q, reference, options);
    }

    let mut best: Option<ThroughputResult> = None;
    for members in &sccs {
        let sub = subgraph(graph, members);
        if sub.channels.is_empty() {
            continue;
        }
        let reference = match &graph.reference_actor {
            Some(r) if sub.contains_actor(r.as_str()) => r.clone(),
            _ => sub.actors.iter().map(|a| &a.id).min().cloned().expect("non-empty component"),
        };
        let result = match component_throughput(&sub, &q, reference, options) {
            // A component that can fire without advancing time imposes no bound.
            Err(Error::Unbounded { .. }) => continue,
            other => other?,
        };
        if best.as_ref().is_none_or(|b| result.iterations_per_cycle < b.iterations_per_cycle) {
            best = Some(result);
        }
    }
    best.ok_or_else(|| Error::Unbounded { reason: "no cycle limits the execution".into() })
}

fn component_throughput(
    graph: &Sdfg,
    q: &RepetitionVector,
    reference: ActorId,
    options: &AnalysisOptions,
) -> Result<ThroughputResult> {
    let qr = q.get(reference.as_str()).ok_or_else(|| Error::UnknownActor(reference.clone()))?;
    let rec = find_recurrence(graph, reference.as_str(), options)?;
    let denom = BigInt::from(qr) * BigInt::from(rec.period);
    Ok(ThroughputResult {
        iterations_per_cycle: Rational::new(BigInt::from(rec.firings), denom),
        period_cycles: rec.period,
        transient_cycles: rec.transient,
        reference_firings_per_period: rec.firings,
        reference_actor: reference,
    })
}

/// Throughput of a homogeneous, strongly connected graph as the inverse of
/// its maximum cycle mean (execution time per initial token).
pub fn mcm_throughput(graph: &Sdfg) -> Result<Rational> {
    if graph.actors.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if let Some(c) = graph.channels.iter().find(|c| c.prod_rate != 1 || c.cons_rate != 1) {
        return Err(Error::NotHomogeneous { channel: c.id.clone() });
    }
    if strongly_connected_components(graph).len() != 1 {
        return Err(Error::NotStronglyConnected);
    }
    let mcm = maximum_cycle_mean(graph)?;
    if mcm.is_zero() {
        return Err(Error::Unbounded { reason: "every cycle has zero execution time".into() });
    }
    Ok(mcm.recip())
}

/// Karp's algorithm on the token graph: one node per initial token, and an
/// edge from token `t` to token `u` weighted with the longest execution time
/// along token-free channels from the consumer of `t` to the producer of `u`.
fn maximum_cycle_mean(graph: &Sdfg) -> Result<Rational> {
    let n = graph.actors.len();
    let index: HashMap<&str, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let et: Vec<u128> = graph.actors.iter().map(|a| a.exec_time as u128).collect();

    let mut free: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for c in graph.channels.iter().filter(|c| c.initial_tokens == 0) {
        let (s, d) = (index[c.src.as_str()], index[c.dst.as_str()]);
        free[s].push(d);
        indeg[d] += 1;
    }
    let mut topo = Vec::with_capacity(n);
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(u) = stack.pop() {
        topo.push(u);
        for &v in &free[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    if topo.len() < n {
        let mut actors: Vec<ActorId> = (0..n).filter(|&i| indeg[i] > 0).map(|i| graph.actors[i].id.clone()).collect();
        actors.sort();
        return Err(Error::TokenFreeCycle { actors });
    }

    // longest[s][d]: heaviest token-free path from s to d, counting both ends.
    let mut longest: Vec<Vec<Option<u128>>> = vec![vec![None; n]; n];
    for s in 0..n {
        longest[s][s] = Some(et[s]);
        for &u in &topo {
            let Some(w) = longest[s][u] else { continue };
            for &v in &free[u] {
                let cand = w + et[v];
                if longest[s][v].is_none_or(|x| cand > x) {
                    longest[s][v] = Some(cand);
                }
            }
        }
    }

    // Token nodes: a channel with k tokens contributes a chain of k nodes;
    // the last one (next to the consumer) links onward.
    let mut first = Vec::new();
    let mut edges: Vec<(usize, usize, u128)> = Vec::new();
    let mut last_of = Vec::new();
    let mut nodes = 0usize;
    for c in graph.channels.iter().filter(|c| c.initial_tokens > 0) {
        let k = usize::try_from(c.initial_tokens).map_err(|_| Error::Overflow("building the token graph"))?;
        first.push(nodes);
        for j in 0..k - 1 {
            edges.push((nodes + j, nodes + j + 1, 0));
        }
        last_of.push((nodes + k - 1, index[c.dst.as_str()]));
        nodes += k;
    }
    let tokened: Vec<usize> =
        graph.channels.iter().filter(|c| c.initial_tokens > 0).map(|c| index[c.src.as_str()]).collect();
    for &(node, consumer) in &last_of {
        for (f, &producer) in tokened.iter().enumerate() {
            if let Some(w) = longest[consumer][producer] {
                edges.push((node, first[f], w));
            }
        }
    }
    if nodes == 0 {
        return Err(Error::TokenFreeCycle { actors: Vec::new() });
    }

    // Karp with a virtual source connected to every node by a zero edge.
    let mut d: Vec<Vec<Option<i128>>> = vec![vec![None; nodes]; nodes + 1];
    d[0] = vec![Some(0); nodes];
    for k in 1..=nodes {
        for &(u, v, w) in &edges {
            if let Some(du) = d[k - 1][u] {
                let cand = du + w as i128;
                if d[k][v].is_none_or(|x| cand > x) {
                    d[k][v] = Some(cand);
                }
            }
        }
    }
    let mut best: Option<Rational> = None;
    for v in 0..nodes {
        let Some(dn) = d[nodes][v] else { continue };
        let mut worst: Option<Rational> = None;
        for (k, row) in d.iter().enumerate().take(nodes) {
            if let Some(dk) = row[v] {
                let mean = Rational::new(BigInt::from(dn - dk), BigInt::from((nodes - k) as u64));
                if worst.as_ref().is_none_or(|w| mean < *w) {
                    worst = Some(mean);
                }
            }
        }
        if let Some(w) = worst {
            if best.as_ref().is_none_or(|b| w > *b) {
                best = Some(w);
            }
        }
    }
    best.ok_or_else(|| Error::Unbounded { reason: "token graph has no cycle".into() })
}

/// Iterations per second at `clock_hz`.
pub fn to_frames_per_second(result: &ThroughputResult, clock_hz: &Rational) -> Rational {
    &result.iterations_per_cycle * clock_hz
}

/// [`to_frames_per_second`] rendered with `places` decimals.
pub fn format_frames_per_second(result: &ThroughputResult, clock_hz: &Rational, places: usize) -> String {
    rational::format_decimal(&to_frames_per_second(result, clock_hz), places)
}

/// Frames per second as a float, for display and tolerance checks.
pub fn frames_per_second_f64(result: &ThroughputResult, clock_hz: &Rational) -> f64 {
    rational::to_f64(&to_frames_per_second(result, clock_hz))
}
