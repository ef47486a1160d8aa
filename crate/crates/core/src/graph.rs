//! Synchronous dataflow graph model.
//!
//! A [`Sdfg`] is plain data: actors and rated channels. Construction is
//! permissive so that malformed inputs can be reported through
//! [`validate`] instead of failing at load time.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::diag::Diagnostic;
use crate::error::{Error, Result};

string_id!(
    /// Identifier of an actor, unique within a graph.
    ActorId
);
string_id!(
    /// Identifier of a channel, unique within a graph.
    ChannelId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActorKind {
    Software,
    Hardware,
    /// Introduced by a transformation (connection, memory and gate actors).
    Infrastructure,
}

impl ActorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActorKind::Software => "software",
            ActorKind::Hardware => "hardware",
            ActorKind::Infrastructure => "infrastructure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "software" => Some(ActorKind::Software),
            "hardware" => Some(ActorKind::Hardware),
            "infrastructure" => Some(ActorKind::Infrastructure),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Actor {
    pub id: ActorId,
    pub name: String,
    /// Clock cycles per firing.
    pub exec_time: u64,
    pub kind: ActorKind,
}

impl Actor {
    pub fn new(id: impl Into<ActorId>, exec_time: u64, kind: ActorKind) -> Self {
        let id = id.into();
        Self { name: id.to_string(), id, exec_time, kind }
    }

    pub fn software(id: impl Into<ActorId>, exec_time: u64) -> Self {
        Self::new(id, exec_time, ActorKind::Software)
    }

    pub fn hardware(id: impl Into<ActorId>, exec_time: u64) -> Self {
        Self::new(id, exec_time, ActorKind::Hardware)
    }

    pub fn infrastructure(id: impl Into<ActorId>, exec_time: u64) -> Self {
        Self::new(id, exec_time, ActorKind::Infrastructure)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub id: ChannelId,
    pub src: ActorId,
    pub dst: ActorId,
    /// Tokens produced per firing of `src`.
    pub prod_rate: u64,
    /// Tokens consumed per firing of `dst`.
    pub cons_rate: u64,
    pub initial_tokens: u64,
    /// Bytes per token; 0 when the size is irrelevant (back-edges, control).
    pub token_size: u64,
}

impl Channel {
    /// A rate-1 channel without initial tokens.
    pub fn new(id: impl Into<ChannelId>, src: impl Into<ActorId>, dst: impl Into<ActorId>) -> Self {
        Self {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            prod_rate: 1,
            cons_rate: 1,
            initial_tokens: 0,
            token_size: 0,
        }
    }

    pub fn rates(mut self, prod: u64, cons: u64) -> Self {
        self.prod_rate = prod;
        self.cons_rate = cons;
        self
    }

    pub fn tokens(mut self, tokens: u64) -> Self {
        self.initial_tokens = tokens;
        self
    }

    pub fn token_size(mut self, bytes: u64) -> Self {
        self.token_size = bytes;
        self
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sdfg {
    pub actors: Vec<Actor>,
    pub channels: Vec<Channel>,
    /// Actor whose firings count iterations. When unset, the actor with
    /// repetition count 1 and the smallest id is used.
    pub reference_actor: Option<ActorId>,
}

impl Sdfg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == *id)
    }

    pub fn actor_mut(&mut self, id: &str) -> Option<&mut Actor> {
        self.actors.iter_mut().find(|a| a.id == *id)
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == *id)
    }

    pub fn channel_mut(&mut self, id: &str) -> Option<&mut Channel> {
        self.channels.iter_mut().find(|c| c.id == *id)
    }

    pub fn contains_actor(&self, id: &str) -> bool {
        self.actor(id).is_some()
    }

    pub fn add_actor(&mut self, actor: Actor) -> Result<()> {
        if self.contains_actor(actor.id.as_str()) {
            return Err(Error::InvalidGraph(vec![Diagnostic::DuplicateActor(actor.id)]));
        }
        self.actors.push(actor);
        Ok(())
    }

    pub fn add_channel(&mut self, channel: Channel) -> Result<()> {
        if self.channel(channel.id.as_str()).is_some() {
            return Err(Error::InvalidGraph(vec![Diagnostic::DuplicateChannel(channel.id)]));
        }
        self.channels.push(channel);
        Ok(())
    }

    pub fn remove_channel(&mut self, id: &str) -> Option<Channel> {
        let pos = self.channels.iter().position(|c| c.id == *id)?;
        Some(self.channels.remove(pos))
    }

    /// Removes an actor without touching its channels.
    pub fn remove_actor(&mut self, id: &str) -> Option<Actor> {
        let pos = self.actors.iter().position(|a| a.id == *id)?;
        Some(self.actors.remove(pos))
    }

    pub fn inputs<'a>(&'a self, actor: &'a str) -> impl Iterator<Item = &'a Channel> + 'a {
        self.channels.iter().filter(move |c| c.dst == *actor)
    }

    pub fn outputs<'a>(&'a self, actor: &'a str) -> impl Iterator<Item = &'a Channel> + 'a {
        self.channels.iter().filter(move |c| c.src == *actor)
    }

    pub fn has_self_loop(&self, actor: &str) -> bool {
        self.channels.iter().any(|c| c.is_self_loop() && c.src == *actor)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.channels.iter().all(|c| c.prod_rate == 1 && c.cons_rate == 1)
    }

    /// An actor id derived from `base` that is not yet used in the graph.
    pub fn fresh_actor_id(&self, base: &str) -> ActorId {
        fresh(base, |s| self.contains_actor(s)).into()
    }

    /// A channel id derived from `base` that is not yet used in the graph.
    pub fn fresh_channel_id(&self, base: &str) -> ChannelId {
        fresh(base, |s| self.channel(s).is_some()).into()
    }

    /// Resolves the reference actor: the explicit one if set, otherwise the
    /// smallest id among actors with repetition count 1.
    pub fn resolve_reference_actor(&self, q: &RepetitionVector) -> Option<ActorId> {
        if let Some(r) = &self.reference_actor {
            return Some(r.clone());
        }
        q.entries.iter().filter(|(_, &n)| n == 1).map(|(id, _)| id.clone()).next().or_else(|| {
            q.entries.iter().min_by(|a, b| a.1.cmp(b.1).then_with(|| a.0.cmp(b.0))).map(|(id, _)| id.clone())
        })
    }
}

fn fresh(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_owned();
    }
    (2..).map(|i| format!("{base}_{i}")).find(|s| !taken(s)).expect("unbounded suffix search")
}

/// Firing counts per actor for one graph iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepetitionVector {
    pub entries: BTreeMap<ActorId, u64>,
}

impl RepetitionVector {
    pub fn get(&self, actor: &str) -> Option<u64> {
        self.entries.get(actor).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Structural diagnostics that do not depend on rates: duplicates, dangling
/// endpoints, zero rates and a missing reference actor.
pub fn structural_diagnostics(graph: &Sdfg) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = HashSet::new();
    for a in &graph.actors {
        if !seen.insert(a.id.as_str()) {
            diags.push(Diagnostic::DuplicateActor(a.id.clone()));
        }
    }
    let mut seen_ch = HashSet::new();
    for c in &graph.channels {
        if !seen_ch.insert(c.id.as_str()) {
            diags.push(Diagnostic::DuplicateChannel(c.id.clone()));
        }
        for end in [&c.src, &c.dst] {
            if !seen.contains(end.as_str()) {
                diags.push(Diagnostic::DanglingEndpoint { channel: c.id.clone(), actor: end.clone() });
            }
        }
        if c.prod_rate == 0 || c.cons_rate == 0 {
            diags.push(Diagnostic::ZeroRate { channel: c.id.clone() });
        }
    }
    if let Some(r) = &graph.reference_actor {
        if !seen.contains(r.as_str()) {
            diags.push(Diagnostic::UnknownReferenceActor(r.clone()));
        }
    }
    diags
}

/// Checks every graph invariant and consistency. Returns one diagnostic per
/// violation; an empty list means the graph is valid.
pub fn validate(graph: &Sdfg) -> Vec<Diagnostic> {
    let mut diags = structural_diagnostics(graph);
    if diags.is_empty() {
        if let Err(Error::Inconsistent { channel }) = compute_repetition_vector(graph) {
            diags.push(Diagnostic::Inconsistent { channel });
        }
    }
    diags
}

/// Smallest positive integer solution of the balance equations
/// `q(src) * prod = q(dst) * cons`, computed per weakly connected component.
pub fn compute_repetition_vector(graph: &Sdfg) -> Result<RepetitionVector> {
    let diags = structural_diagnostics(graph);
    if !diags.is_empty() {
        return Err(Error::InvalidGraph(diags));
    }
    let index: HashMap<&str, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let n = graph.actors.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in graph.channels.iter().enumerate() {
        adj[index[c.src.as_str()]].push(ci);
        adj[index[c.dst.as_str()]].push(ci);
    }

    let mut fraction: Vec<Option<BigRational>> = vec![None; n];
    let mut result = vec![0u64; n];
    for start in 0..n {
        if fraction[start].is_some() {
            continue;
        }
        let mut component = vec![start];
        fraction[start] = Some(BigRational::one());
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let fu = fraction[u].clone().expect("visited");
            for &ci in &adj[u] {
                let c = &graph.channels[ci];
                let (s, d) = (index[c.src.as_str()], index[c.dst.as_str()]);
                let prod = BigRational::from_integer(BigInt::from(c.prod_rate));
                let cons = BigRational::from_integer(BigInt::from(c.cons_rate));
                let (other, expected) = if s == u { (d, &fu * &prod / &cons) } else { (s, &fu * &cons / &prod) };
                match &fraction[other] {
                    None => {
                        fraction[other] = Some(expected);
                        component.push(other);
                        queue.push_back(other);
                    }
                    Some(_) => {
                        let fs = fraction[s].as_ref().expect("visited");
                        let fd = fraction[d].as_ref().expect("visited");
                        if fs * &prod != fd * &cons {
                            return Err(Error::Inconsistent { channel: c.id.clone() });
                        }
                    }
                }
            }
        }
        let lcm = component
            .iter()
            .map(|&i| fraction[i].as_ref().expect("visited").denom().clone())
            .fold(BigInt::one(), |acc, d| acc.lcm(&d));
        let scaled: Vec<BigInt> = component
            .iter()
            .map(|&i| (fraction[i].as_ref().expect("visited") * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        let gcd = scaled.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        for (&i, v) in component.iter().zip(scaled) {
            result[i] = (v / &gcd).to_u64().ok_or(Error::Overflow("computing the repetition vector"))?;
        }
    }
    for c in &graph.channels {
        let qs = result[index[c.src.as_str()]] as u128;
        let qd = result[index[c.dst.as_str()]] as u128;
        if qs * c.prod_rate as u128 != qd * c.cons_rate as u128 {
            return Err(Error::Inconsistent { channel: c.id.clone() });
        }
    }
    Ok(RepetitionVector { entries: graph.actors.iter().zip(result).map(|(a, q)| (a.id.clone(), q)).collect() })
}

/// Adds a rate-1 self-loop with one initial token to every actor that has no
/// self-loop yet, so no actor can overlap with its own firings.
pub fn disable_auto_concurrency(graph: &Sdfg) -> Sdfg {
    let mut out = graph.clone();
    for actor in &graph.actors {
        if graph.has_self_loop(actor.id.as_str()) {
            continue;
        }
        let id = out.fresh_channel_id(&format!("{}_self", actor.id));
        out.channels.push(Channel::new(id, actor.id.clone(), actor.id.clone()).tokens(1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_actor(prod: u64, cons: u64) -> Sdfg {
        let mut g = Sdfg::new();
        g.add_actor(Actor::software("A", 1)).unwrap();
        g.add_actor(Actor::software("B", 1)).unwrap();
        g.add_channel(Channel::new("ab", "A", "B").rates(prod, cons)).unwrap();
        g
    }

    #[test]
    fn two_actor_rates() {
        let q = compute_repetition_vector(&two_actor(2, 3)).unwrap();
        assert_eq!(q.get("A"), Some(3));
        assert_eq!(q.get("B"), Some(2));
    }

    #[test]
    fn prose_example_cycle_is_inconsistent() {
        // A: produces 2 towards B, B produces 3 back to A, both consume 1.
        let mut g = two_actor(2, 1);
        g.add_channel(Channel::new("ba", "B", "A").rates(3, 1).tokens(2)).unwrap();
        assert!(matches!(compute_repetition_vector(&g), Err(Error::Inconsistent { .. })));
        assert!(matches!(validate(&g).as_slice(), [Diagnostic::Inconsistent { .. }]));
    }

    #[test]
    fn disconnected_components_are_each_minimal() {
        let mut g = two_actor(2, 4);
        g.add_actor(Actor::software("C", 1)).unwrap();
        g.add_actor(Actor::software("D", 1)).unwrap();
        g.add_channel(Channel::new("cd", "C", "D").rates(3, 1)).unwrap();
        let q = compute_repetition_vector(&g).unwrap();
        assert_eq!(q.get("A"), Some(2));
        assert_eq!(q.get("B"), Some(1));
        assert_eq!(q.get("C"), Some(1));
        assert_eq!(q.get("D"), Some(3));
    }

    #[test]
    fn self_loop_with_unequal_rates_is_inconsistent() {
        let mut g = Sdfg::new();
        g.add_actor(Actor::software("A", 1)).unwrap();
        g.add_channel(Channel::new("aa", "A", "A").rates(2, 1).tokens(1)).unwrap();
        assert!(compute_repetition_vector(&g).is_err());
    }

    #[test]
    fn zero_rate_and_dangling_endpoints_are_reported() {
        let mut g = two_actor(1, 0);
        g.channels.push(Channel::new("bz", "B", "Z"));
        let diags = validate(&g);
        assert!(diags.contains(&Diagnostic::ZeroRate { channel: "ab".into() }));
        assert!(diags.contains(&Diagnostic::DanglingEndpoint { channel: "bz".into(), actor: "Z".into() }));
        assert!(matches!(compute_repetition_vector(&g), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut g = two_actor(1, 1);
        assert!(g.add_actor(Actor::software("A", 3)).is_err());
        assert!(g.add_channel(Channel::new("ab", "B", "A")).is_err());
        g.actors.push(Actor::software("A", 3));
        assert!(validate(&g).contains(&Diagnostic::DuplicateActor("A".into())));
    }

    #[test]
    fn auto_concurrency_keeps_existing_self_loops() {
        let mut g = two_actor(1, 1);
        g.add_channel(Channel::new("bb", "B", "B").tokens(1)).unwrap();
        let out = disable_auto_concurrency(&g);
        assert_eq!(out.channels.len(), 3);
        let a_self = out.channels.iter().find(|c| c.is_self_loop() && c.src == "A").unwrap();
        assert_eq!((a_self.prod_rate, a_self.cons_rate, a_self.initial_tokens), (1, 1, 1));
        assert_eq!(out.channel("bb"), g.channel("bb"));
        assert_eq!(disable_auto_concurrency(&out), out);
        assert_eq!(disable_auto_concurrency(&Sdfg::new()), Sdfg::new());
    }

    #[test]
    fn fresh_ids_avoid_collisions() {
        let mut g = two_actor(1, 1);
        g.add_channel(Channel::new("A_self", "B", "A")).unwrap();
        assert_eq!(g.fresh_channel_id("A_self"), "A_self_2");
        assert_eq!(g.fresh_actor_id("C"), "C");
        assert_eq!(g.fresh_actor_id("A"), "A_2");
    }

    #[test]
    fn reference_actor_defaults_to_smallest_unit_entry() {
        let g = two_actor(2, 3);
        let q = compute_repetition_vector(&g).unwrap();
        // A:3, B:2 has no unit entry; falls back to the smallest count.
        assert_eq!(g.resolve_reference_actor(&q), Some("B".into()));
        let g = two_actor(1, 12);
        let q = compute_repetition_vector(&g).unwrap();
        assert_eq!(g.resolve_reference_actor(&q), Some("B".into()));
    }
}
