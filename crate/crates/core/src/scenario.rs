//! Scenario files, SDF3 import and analysis reports.
//!
//! A scenario is a TOML document with the sections `scenario`,
//! `application`, `platform`, `mapping` (optional), `analysis` and
//! `defaults`. Fractional quantities (clock frequencies, bandwidths,
//! speedups) are written as decimal strings and read exactly. The grammar is
//! documented in `docs/scenario-format.md`.

use std::fmt::Write as _;
use std::path::Path;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::analysis::{self_timed_throughput, to_frames_per_second, AnalysisOptions, ThroughputResult};
use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::graph::{self, disable_auto_concurrency, Actor, ActorKind, Channel, Sdfg};
use crate::migration::{migrate_task, LinkParams, MigrationOutcome, MigrationParams, MigrationSpec};
use crate::platform::{
    validate_mapping, validate_platform, ChannelBinding, Mapping, NocConnection, Platform, Tile, TileKind,
};
use crate::rational::{self, Rational};
use crate::transforms::{apply_mapping, BuildOptions, DstBackEdge};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Meta {
    pub name: String,
    pub description: String,
    pub clock_hz: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub meta: Meta,
    /// Application graph with execution times before mapping.
    pub graph: Sdfg,
    pub platform: Platform,
    /// `None` for graph-only scenarios, which are analysed as they are.
    pub mapping: Option<Mapping>,
    pub build: BuildOptions,
    pub defaults: MigrationParams,
}

impl Scenario {
    pub fn graph_only(name: impl Into<String>, graph: Sdfg, clock_hz: Rational) -> Self {
        Self {
            meta: Meta { name: name.into(), description: String::new(), clock_hz },
            graph,
            platform: Platform::default(),
            mapping: None,
            build: BuildOptions::default(),
            defaults: MigrationParams::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// Parses and validates a scenario document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
            Error::Parse { line, column, message: e.message().trim().to_owned() }
        })?;
        let scenario = file.into_scenario(text)?;
        let diags = scenario.validate();
        if !diags.is_empty() {
            return Err(Error::Validation(diags));
        }
        Ok(scenario)
    }

    /// Deterministic TOML rendering.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ScenarioFile::from_scenario(self)).expect("scenario documents always serialize")
    }

    /// Graph and mapping diagnostics; empty when the scenario is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = graph::validate(&self.graph);
        if !self.meta.clock_hz.is_positive() {
            diags.push(Diagnostic::NonPositiveClock);
        }
        match &self.mapping {
            Some(m) => diags.extend(validate_mapping(&self.graph, &self.platform, m)),
            None => diags.extend(validate_platform(&self.platform)),
        }
        diags
    }

    /// The graph handed to the throughput analysis.
    pub fn analysable_graph(&self) -> Result<Sdfg> {
        match &self.mapping {
            Some(m) => apply_mapping(&self.graph, &self.platform, m, &self.build),
            None if self.build.keep_auto_concurrency => Ok(self.graph.clone()),
            None => Ok(disable_auto_concurrency(&self.graph)),
        }
    }

    pub fn throughput(&self, options: &AnalysisOptions) -> Result<ThroughputResult> {
        self_timed_throughput(&self.analysable_graph()?, options)
    }

    /// Migrates `actor` with the given parameters and returns the migrated
    /// scenario along with the full outcome.
    pub fn migrate(&self, actor: &str, params: &MigrationParams) -> Result<(Scenario, MigrationOutcome)> {
        let mapping = self
            .mapping
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("a graph-only scenario cannot be migrated".into()))?;
        let spec = MigrationSpec::new(actor, params.clone());
        let outcome = migrate_task(&self.graph, &self.platform, mapping, &spec, &self.build)?;
        let mut meta = self.meta.clone();
        meta.name = format!("{}+{}", self.meta.name, actor);
        let migrated = Scenario {
            meta,
            graph: outcome.application.clone(),
            platform: outcome.platform.clone(),
            mapping: Some(outcome.mapping.clone()),
            build: self.build.clone(),
            defaults: self.defaults.clone(),
        };
        Ok((migrated, outcome))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// Position of the first occurrence of `needle` in `text`, for errors raised
/// after deserialization.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    text.find(needle).map_or((0, 0), |p| line_column(text, p))
}

// File representation. Integers are read as i64 so that negative values are
// reported as validation errors instead of parse errors.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: MetaFile,
    #[serde(default)]
    analysis: AnalysisFile,
    #[serde(default)]
    defaults: DefaultsFile,
    application: ApplicationFile,
    #[serde(default, skip_serializing_if = "PlatformFile::is_empty")]
    platform: PlatformFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mapping: Option<MappingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    clock_hz: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisFile {
    #[serde(default)]
    auto_concurrency: bool,
    #[serde(default = "default_back_edge")]
    dst_back_edge: String,
}

impl Default for AnalysisFile {
    fn default() -> Self {
        Self { auto_concurrency: false, dst_back_edge: default_back_edge() }
    }
}

fn default_back_edge() -> String {
    DstBackEdge::default().as_str().to_owned()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    #[serde(default = "default_speedup")]
    speedup: String,
    #[serde(default = "default_prefetch")]
    prefetch_time: i64,
    #[serde(default = "one")]
    hw_buffer_tokens: i64,
    #[serde(default = "one")]
    prefetch_tokens: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hw_connection: Option<LinkFile>,
}

impl Default for DefaultsFile {
    fn default() -> Self {
        Self {
            speedup: default_speedup(),
            prefetch_time: default_prefetch(),
            hw_buffer_tokens: 1,
            prefetch_tokens: 1,
            hw_connection: None,
        }
    }
}

fn default_speedup() -> String {
    "2".into()
}

fn default_prefetch() -> i64 {
    10_000
}

fn one() -> i64 {
    1
}

fn is_one(v: &i64) -> bool {
    *v == 1
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    latency: i64,
    bandwidth: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplicationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_actor: Option<String>,
    #[serde(default, rename = "actor")]
    actors: Vec<ActorFile>,
    #[serde(default, rename = "channel")]
    channels: Vec<ChannelFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindFile {
    Software,
    Hardware,
    Infrastructure,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorFile {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    exec_time: i64,
    #[serde(default = "software")]
    kind: KindFile,
}

fn software() -> KindFile {
    KindFile::Software
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    id: String,
    src: String,
    dst: String,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    prod_rate: i64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    cons_rate: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    initial_tokens: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    token_size: i64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformFile {
    #[serde(default, rename = "tile")]
    tiles: Vec<TileFile>,
    #[serde(default, rename = "connection")]
    connections: Vec<ConnectionFile>,
}

impl PlatformFile {
    fn is_empty(&self) -> bool {
        self.tiles.is_empty() && self.connections.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TileKindFile {
    Processor,
    HardwareBlock,
    Memory,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TileFile {
    id: String,
    kind: TileKindFile,
    #[serde(default, skip_serializing_if = "is_zero")]
    tdma_wheel: i64,
    clock_hz: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionFile {
    id: String,
    src_tile: String,
    dst_tile: String,
    latency: i64,
    bandwidth: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bidirectional: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    #[serde(default, rename = "actor")]
    actors: Vec<ActorMappingFile>,
    #[serde(default, rename = "channel")]
    channels: Vec<ChannelMappingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorMappingFile {
    actor: String,
    tile: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slice: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BindingKindFile {
    Local,
    Remote,
    RemoteMemory,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelMappingFile {
    channel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    binding: Option<BindingKindFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    buffer: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    connection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    src_buffer: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dst_buffer: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    batch: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prefetch_time: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fetch_path: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    producer_buffer: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    latency_bound: Option<i64>,
}

/// Collects conversion problems while building a [`Scenario`].
struct Reader<'t> {
    text: &'t str,
    diags: Vec<Diagnostic>,
}

impl Reader<'_> {
    fn uint(&mut self, field: impl FnOnce() -> String, value: i64) -> u64 {
        u64::try_from(value).unwrap_or_else(|_| {
            self.diags.push(Diagnostic::NegativeValue { field: field(), value });
            0
        })
    }

    fn rational(&self, field: &str, value: &str) -> Result<Rational> {
        rational::parse_rational(value).ok_or_else(|| {
            let (line, column) = locate(self.text, &format!("\"{value}\""));
            Error::Parse { line, column, message: format!("{field}: `{value}` is not a decimal number or fraction") }
        })
    }
}

fn missing(text: &str, channel: &str, field: &str) -> Error {
    let (line, column) = locate(text, &format!("\"{channel}\""));
    Error::Parse { line, column, message: format!("binding of channel `{channel}` needs `{field}`") }
}

impl ScenarioFile {
    fn into_scenario(self, text: &str) -> Result<Scenario> {
        let mut r = Reader { text, diags: Vec::new() };

        let clock_hz = r.rational("scenario.clock_hz", &self.scenario.clock_hz)?;
        let meta = Meta { name: self.scenario.name, description: self.scenario.description, clock_hz };

        let dst_back_edge = DstBackEdge::parse(&self.analysis.dst_back_edge).ok_or_else(|| {
            let (line, column) = locate(text, "dst_back_edge");
            Error::Parse {
                line,
                column,
                message: format!(
                    "unknown dst_back_edge `{}`, expected `connection` or `synchronisation`",
                    self.analysis.dst_back_edge
                ),
            }
        })?;
        let build = BuildOptions { keep_auto_concurrency: self.analysis.auto_concurrency, dst_back_edge };

        let d = self.defaults;
        let defaults = MigrationParams {
            speedup: r.rational("defaults.speedup", &d.speedup)?,
            prefetch_time: r.uint(|| "defaults.prefetch_time".into(), d.prefetch_time),
            hw_connection: match d.hw_connection {
                Some(l) => Some(LinkParams {
                    latency: r.uint(|| "defaults.hw_connection.latency".into(), l.latency),
                    bandwidth: r.rational("defaults.hw_connection.bandwidth", &l.bandwidth)?,
                }),
                None => None,
            },
            hw_buffer_tokens: r.uint(|| "defaults.hw_buffer_tokens".into(), d.hw_buffer_tokens),
            prefetch_tokens: r.uint(|| "defaults.prefetch_tokens".into(), d.prefetch_tokens),
        };

        let mut graph = Sdfg::new();
        graph.reference_actor = self.application.reference_actor.map(Into::into);
        for a in self.application.actors {
            let exec_time = r.uint(|| format!("exec_time of actor `{}`", a.id), a.exec_time);
            let kind = match a.kind {
                KindFile::Software => ActorKind::Software,
                KindFile::Hardware => ActorKind::Hardware,
                KindFile::Infrastructure => ActorKind::Infrastructure,
            };
            let mut actor = Actor::new(a.id, exec_time, kind);
            if let Some(name) = a.name {
                actor.name = name;
            }
            graph.actors.push(actor);
        }
        for c in self.application.channels {
            let id = c.id.clone();
            let field = |f: &str| format!("{f} of channel `{id}`");
            let channel = Channel::new(c.id.clone(), c.src, c.dst)
                .rates(r.uint(|| field("prod_rate"), c.prod_rate), r.uint(|| field("cons_rate"), c.cons_rate))
                .tokens(r.uint(|| field("initial_tokens"), c.initial_tokens))
                .token_size(r.uint(|| field("token_size"), c.token_size));
            graph.channels.push(channel);
        }

        let mut platform = Platform::default();
        for t in self.platform.tiles {
            let kind = match t.kind {
                TileKindFile::Processor => TileKind::Processor,
                TileKindFile::HardwareBlock => TileKind::HardwareBlock,
                TileKindFile::Memory => TileKind::Memory,
            };
            let tdma_wheel = r.uint(|| format!("tdma_wheel of tile `{}`", t.id), t.tdma_wheel);
            let clock_hz = r.rational("clock_hz", &t.clock_hz)?;
            platform.tiles.push(Tile { id: t.id.into(), kind, tdma_wheel, clock_hz });
        }
        for c in self.platform.connections {
            let latency = r.uint(|| format!("latency of connection `{}`", c.id), c.latency);
            let bandwidth = r.rational("bandwidth", &c.bandwidth)?;
            platform.connections.push(NocConnection {
                id: c.id.into(),
                src_tile: c.src_tile.into(),
                dst_tile: c.dst_tile.into(),
                latency,
                bandwidth,
                bidirectional: c.bidirectional,
            });
        }

        let mapping = match self.mapping {
            None => None,
            Some(m) => {
                let mut mapping = Mapping::default();
                for a in m.actors {
                    if let Some(slice) = a.slice {
                        let s = r.uint(|| format!("slice of actor `{}`", a.actor), slice);
                        mapping.tdma_slice.insert(a.actor.clone().into(), s);
                    }
                    mapping.actor_tile.insert(a.actor.into(), a.tile.into());
                }
                for c in m.channels {
                    let ch = c.channel.clone();
                    let mut num = |f: &str, v: Option<i64>| -> Result<u64> {
                        let v = v.ok_or_else(|| missing(text, &ch, f))?;
                        Ok(r.uint(|| format!("{f} of channel `{ch}`"), v))
                    };
                    if let Some(l) = c.latency_bound {
                        let l = num("latency_bound", Some(l))?;
                        mapping.channel_latency_bound.insert(ch.clone().into(), l);
                    }
                    let binding = match c.binding {
                        None => continue,
                        Some(BindingKindFile::Local) => {
                            ChannelBinding::Local { buffer_tokens: num("buffer", c.buffer)? }
                        }
                        Some(BindingKindFile::Remote) => ChannelBinding::Remote {
                            connection: c.connection.clone().ok_or_else(|| missing(text, &ch, "connection"))?.into(),
                            src_buffer: num("src_buffer", c.src_buffer)?,
                            dst_buffer: num("dst_buffer", c.dst_buffer)?,
                        },
                        Some(BindingKindFile::RemoteMemory) => ChannelBinding::RemoteMemory {
                            connection: c.connection.clone().ok_or_else(|| missing(text, &ch, "connection"))?.into(),
                            batch: num("batch", c.batch)?,
                            prefetch_time: num("prefetch_time", c.prefetch_time)?,
                            fetch_path: c.fetch_path.unwrap_or(false),
                            producer_buffer: num("producer_buffer", c.producer_buffer)?,
                        },
                    };
                    mapping.channel_binding.insert(ch.into(), binding);
                }
                Some(mapping)
            }
        };

        if !r.diags.is_empty() {
            return Err(Error::Validation(r.diags));
        }
        Ok(Scenario { meta, graph, platform, mapping, build, defaults })
    }

    fn from_scenario(s: &Scenario) -> Self {
        let int = |v: u64| i64::try_from(v).unwrap_or(i64::MAX);
        let num = rational::to_exact_string;
        let p = &s.defaults;
        ScenarioFile {
            scenario: MetaFile {
                name: s.meta.name.clone(),
                description: s.meta.description.clone(),
                clock_hz: num(&s.meta.clock_hz),
            },
            analysis: AnalysisFile {
                auto_concurrency: s.build.keep_auto_concurrency,
                dst_back_edge: s.build.dst_back_edge.as_str().to_owned(),
            },
            defaults: DefaultsFile {
                speedup: num(&p.speedup),
                prefetch_time: int(p.prefetch_time),
                hw_buffer_tokens: int(p.hw_buffer_tokens),
                prefetch_tokens: int(p.prefetch_tokens),
                hw_connection: p
                    .hw_connection
                    .as_ref()
                    .map(|l| LinkFile { latency: int(l.latency), bandwidth: num(&l.bandwidth) }),
            },
            application: ApplicationFile {
                reference_actor: s.graph.reference_actor.as_ref().map(ToString::to_string),
                actors: s
                    .graph
                    .actors
                    .iter()
                    .map(|a| ActorFile {
                        id: a.id.to_string(),
                        name: (a.name != a.id.as_str()).then(|| a.name.clone()),
                        exec_time: int(a.exec_time),
                        kind: match a.kind {
                            ActorKind::Software => KindFile::Software,
                            ActorKind::Hardware => KindFile::Hardware,
                            ActorKind::Infrastructure => KindFile::Infrastructure,
                        },
                    })
                    .collect(),
                channels: s
                    .graph
                    .channels
                    .iter()
                    .map(|c| ChannelFile {
                        id: c.id.to_string(),
                        src: c.src.to_string(),
                        dst: c.dst.to_string(),
                        prod_rate: int(c.prod_rate),
                        cons_rate: int(c.cons_rate),
                        initial_tokens: int(c.initial_tokens),
                        token_size: int(c.token_size),
                    })
                    .collect(),
            },
            platform: PlatformFile {
                tiles: s
                    .platform
                    .tiles
                    .iter()
                    .map(|t| TileFile {
                        id: t.id.to_string(),
                        kind: match t.kind {
                            TileKind::Processor => TileKindFile::Processor,
                            TileKind::HardwareBlock => TileKindFile::HardwareBlock,
                            TileKind::Memory => TileKindFile::Memory,
                        },
                        tdma_wheel: int(t.tdma_wheel),
                        clock_hz: num(&t.clock_hz),
                    })
                    .collect(),
                connections: s
                    .platform
                    .connections
                    .iter()
                    .map(|c| ConnectionFile {
                        id: c.id.to_string(),
                        src_tile: c.src_tile.to_string(),
                        dst_tile: c.dst_tile.to_string(),
                        latency: int(c.latency),
                        bandwidth: num(&c.bandwidth),
                        bidirectional: c.bidirectional,
                    })
                    .collect(),
            },
            mapping: s.mapping.as_ref().map(|m| mapping_file(m, &int)),
        }
    }
}

fn mapping_file(m: &Mapping, int: &dyn Fn(u64) -> i64) -> MappingFile {
    let actors = m
        .actor_tile
        .iter()
        .map(|(a, t)| ActorMappingFile {
            actor: a.to_string(),
            tile: t.to_string(),
            slice: m.tdma_slice.get(a).map(|&s| int(s)),
        })
        .collect();
    let mut ids: Vec<&crate::graph::ChannelId> =
        m.channel_binding.keys().chain(m.channel_latency_bound.keys()).collect();
    ids.sort();
    ids.dedup();
    let channels = ids
        .into_iter()
        .map(|id| {
            let mut entry = ChannelMappingFile {
                channel: id.to_string(),
                binding: None,
                buffer: None,
                connection: None,
                src_buffer: None,
                dst_buffer: None,
                batch: None,
                prefetch_time: None,
                fetch_path: None,
                producer_buffer: None,
                latency_bound: m.channel_latency_bound.get(id).map(|&l| int(l)),
            };
            match m.channel_binding.get(id) {
                None => {}
                Some(ChannelBinding::Local { buffer_tokens }) => {
                    entry.binding = Some(BindingKindFile::Local);
                    entry.buffer = Some(int(*buffer_tokens));
                }
                Some(ChannelBinding::Remote { connection, src_buffer, dst_buffer }) => {
                    entry.binding = Some(BindingKindFile::Remote);
                    entry.connection = Some(connection.to_string());
                    entry.src_buffer = Some(int(*src_buffer));
                    entry.dst_buffer = Some(int(*dst_buffer));
                }
                Some(ChannelBinding::RemoteMemory {
                    connection,
                    batch,
                    prefetch_time,
                    fetch_path,
                    producer_buffer,
                }) => {
                    entry.binding = Some(BindingKindFile::RemoteMemory);
                    entry.connection = Some(connection.to_string());
                    entry.batch = Some(int(*batch));
                    entry.prefetch_time = Some(int(*prefetch_time));
                    entry.fetch_path = Some(*fetch_path);
                    entry.producer_buffer = Some(int(*producer_buffer));
                }
            }
            entry
        })
        .collect();
    MappingFile { actors, channels }
}

/// Imports the application graph of an SDF3 XML document.
///
/// Port rates come from `<port rate=..>`, initial tokens from
/// `<channel initialTokens=..>`, execution times from the default processor
/// entry in `<actorProperties>` and token sizes from `<tokenSize sz=..>`.
pub fn import_sdf3(xml: &str, clock_hz: Rational) -> Result<Scenario> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        Error::Parse { line: pos.row as usize, column: pos.col as usize, message: e.to_string() }
    })?;
    let err = |node: roxmltree::Node, message: String| {
        let pos = doc.text_pos_at(node.range().start);
        Error::Parse { line: pos.row as usize, column: pos.col as usize, message }
    };
    let attr = |node: roxmltree::Node, name: &str| -> Result<String> {
        node.attribute(name).map(str::to_owned).ok_or_else(|| err(node, format!("missing attribute `{name}`")))
    };
    let number = |node: roxmltree::Node, name: &str, default: Option<u64>| -> Result<u64> {
        match (node.attribute(name), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(err(node, format!("missing attribute `{name}`"))),
            (Some(v), _) => v.trim().parse().map_err(|_| err(node, format!("`{name}` must be a non-negative integer"))),
        }
    };

    let sdf = doc
        .descendants()
        .find(|n| n.has_tag_name("sdf"))
        .ok_or_else(|| err(doc.root_element(), "no <sdf> element".into()))?;
    let name = sdf.attribute("name").unwrap_or("sdf3").to_owned();

    let mut graph = Sdfg::new();
    let mut ports: std::collections::HashMap<(String, String), u64> = std::collections::HashMap::new();
    for actor in sdf.children().filter(|n| n.has_tag_name("actor")) {
        let id = attr(actor, "name")?;
        for port in actor.children().filter(|n| n.has_tag_name("port")) {
            ports.insert((id.clone(), attr(port, "name")?), number(port, "rate", None)?);
        }
        graph.actors.push(Actor::software(id, 0));
    }
    for ch in sdf.children().filter(|n| n.has_tag_name("channel")) {
        let src = attr(ch, "srcActor")?;
        let dst = attr(ch, "dstActor")?;
        let rate = |actor: &str, port_attr: &str| -> Result<u64> {
            let port = attr(ch, port_attr)?;
            ports
                .get(&(actor.to_owned(), port.clone()))
                .copied()
                .ok_or_else(|| err(ch, format!("unknown port `{port}` on actor `{actor}`")))
        };
        let channel = Channel::new(attr(ch, "name")?, src.clone(), dst.clone())
            .rates(rate(&src, "srcPort")?, rate(&dst, "dstPort")?)
            .tokens(number(ch, "initialTokens", Some(0))?);
        graph.channels.push(channel);
    }

    if let Some(props) = doc.descendants().find(|n| n.has_tag_name("sdfProperties")) {
        for ap in props.children().filter(|n| n.has_tag_name("actorProperties")) {
            let id = attr(ap, "actor")?;
            let processors: Vec<_> = ap.children().filter(|n| n.has_tag_name("processor")).collect();
            let chosen =
                processors.iter().find(|p| p.attribute("default") == Some("true")).or_else(|| processors.first());
            let Some(proc_node) = chosen else { continue };
            if let Some(et) = proc_node.children().find(|n| n.has_tag_name("executionTime")) {
                let time = number(et, "time", None)?;
                let actor = graph.actor_mut(&id).ok_or_else(|| err(ap, format!("unknown actor `{id}`")))?;
                actor.exec_time = time;
            }
        }
        for cp in props.children().filter(|n| n.has_tag_name("channelProperties")) {
            let id = attr(cp, "channel")?;
            if let Some(sz) = cp.descendants().find(|n| n.has_tag_name("tokenSize")) {
                let bytes = number(sz, "sz", None)?;
                let ch = graph.channel_mut(&id).ok_or_else(|| err(cp, format!("unknown channel `{id}`")))?;
                ch.token_size = bytes;
            }
        }
    }

    let scenario = Scenario::graph_only(name, graph, clock_hz);
    let diags = scenario.validate();
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    Ok(scenario)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// One migration candidate in a report.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub actor: String,
    pub result: std::result::Result<ThroughputResult, String>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub scenario: String,
    pub clock_hz: Rational,
    pub baseline: ThroughputResult,
    pub rows: Vec<ReportRow>,
    /// Decimal places for frame rates.
    pub places: usize,
}

/// Renders a report. The text form lists the baseline and one line per
/// candidate; the CSV form has the header `actor,fps_before,fps_after,gain_fps`
/// and one row per candidate.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    let fps = |r: &ThroughputResult| to_frames_per_second(r, &report.clock_hz);
    let fmt = |v: &Rational| rational::format_decimal(v, report.places);
    let before = fps(&report.baseline);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("actor,fps_before,fps_after,gain_fps\n");
            for row in &report.rows {
                match &row.result {
                    Ok(r) => {
                        let after = fps(r);
                        let gain = &after - &before;
                        let _ = writeln!(out, "{},{},{},{}", row.actor, fmt(&before), fmt(&after), fmt(&gain));
                    }
                    Err(_) => {
                        let _ = writeln!(out, "{},{},,", row.actor, fmt(&before));
                    }
                }
            }
        }
        ReportFormat::Text => {
            let _ = writeln!(out, "scenario: {}", report.scenario);
            let _ = writeln!(out, "clock: {} Hz", rational::to_exact_string(&report.clock_hz));
            let _ = writeln!(out, "throughput without migration: {} f/s", fmt(&before));
            if report.rows.is_empty() {
                return out;
            }
            let width = report.rows.iter().map(|r| r.actor.len()).max().unwrap_or(0).max("task".len());
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<width$}  {:>13}  {:>11}", "task", "with (f/s)", "gain (f/s)");
            for row in &report.rows {
                match &row.result {
                    Ok(r) => {
                        let after = fps(r);
                        let gain = &after - &before;
                        let _ = writeln!(out, "{:<width$}  {:>13}  {:>11}", row.actor, fmt(&after), fmt(&gain));
                    }
                    Err(e) => {
                        let _ = writeln!(out, "{:<width$}  failed: {e}", row.actor);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_u64, ratio};

    const SMALL: &str = r#"
[scenario]
name = "small"
clock_hz = "1e3"

[application]
[[application.actor]]
id = "A"
exec_time = 3

[[application.actor]]
id = "B"
exec_time = 2

[[application.channel]]
id = "ab"
src = "A"
dst = "B"

[[application.channel]]
id = "ba"
src = "B"
dst = "A"
initial_tokens = 1
"#;

    #[test]
    fn graph_only_round_trip() {
        let s = Scenario::from_toml_str(SMALL).unwrap();
        assert!(s.mapping.is_none());
        assert_eq!(s.meta.clock_hz, from_u64(1000));
        let text = s.to_toml_string();
        let again = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_toml_string(), text);
        assert_eq!(s.throughput(&AnalysisOptions::default()).unwrap().iterations_per_cycle, ratio(1, 5));
    }

    #[test]
    fn unknown_field_has_position() {
        let text = SMALL.replace("exec_time = 2", "exec_time = 2\ncolour = \"red\"");
        match Scenario::from_toml_str(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_tokens_are_validation_errors() {
        let text = SMALL.replace("initial_tokens = 1", "initial_tokens = -1");
        match Scenario::from_toml_str(&text) {
            Err(Error::Validation(d)) => assert!(matches!(d[0], Diagnostic::NegativeValue { value: -1, .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_decimal_is_a_parse_error() {
        let text = SMALL.replace("\"1e3\"", "\"fast\"");
        assert!(matches!(Scenario::from_toml_str(&text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn empty_graph_round_trips() {
        let s = Scenario::graph_only("empty", Sdfg::new(), from_u64(1));
        let again = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn sdf3_import() {
        let xml = r#"<?xml version="1.0"?>
<sdf3 type="sdf" version="1.0">
  <applicationGraph name="app">
    <sdf name="pair" type="Pair">
      <actor name="A" type="a"><port name="out" type="out" rate="2"/><port name="in" type="in" rate="2"/></actor>
      <actor name="B" type="b"><port name="in" type="in" rate="1"/><port name="out" type="out" rate="1"/></actor>
      <channel name="ab" srcActor="A" srcPort="out" dstActor="B" dstPort="in"/>
      <channel name="ba" srcActor="B" srcPort="out" dstActor="A" dstPort="in" initialTokens="2"/>
    </sdf>
    <sdfProperties>
      <actorProperties actor="A"><processor type="p" default="true"><executionTime time="3"/></processor></actorProperties>
      <actorProperties actor="B"><processor type="p" default="true"><executionTime time="1"/></processor></actorProperties>
      <channelProperties channel="ab"><tokenSize sz="64"/></channelProperties>
    </sdfProperties>
  </applicationGraph>
</sdf3>"#;
        let s = import_sdf3(xml, from_u64(10)).unwrap();
        assert_eq!(s.meta.name, "pair");
        assert_eq!(s.graph.channel("ab").unwrap().token_size, 64);
        assert_eq!(s.graph.channel("ab").unwrap().prod_rate, 2);
        let r = s.throughput(&AnalysisOptions::default()).unwrap();
        assert_eq!(r.iterations_per_cycle, ratio(1, 5));
        assert!(matches!(import_sdf3("<sdf3><oops></sdf3>", from_u64(1)), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn reports() {
        let base = ThroughputResult {
            iterations_per_cycle: ratio(136, 1_000_000_000),
            period_cycles: 1,
            transient_cycles: 0,
            reference_firings_per_period: 1,
            reference_actor: "A".into(),
        };
        let faster = ThroughputResult { iterations_per_cycle: ratio(1558, 10_000_000_000), ..base.clone() };
        let report = Report {
            scenario: "m".into(),
            clock_hz: from_u64(100_000_000),
            baseline: base.clone(),
            rows: vec![
                ReportRow { actor: "VLD".into(), result: Ok(faster) },
                ReportRow { actor: "X".into(), result: Err("deadlock".into()) },
            ],
            places: 2,
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        assert_eq!(csv, "actor,fps_before,fps_after,gain_fps\nVLD,13.60,15.58,1.98\nX,13.60,,\n");
        let text = emit_report(&report, ReportFormat::Text);
        assert!(text.contains("throughput without migration: 13.60 f/s"));
        assert!(text.contains("VLD"));
        let empty = Report { rows: Vec::new(), ..report };
        assert_eq!(emit_report(&empty, ReportFormat::Csv).lines().count(), 1);
        assert!(!emit_report(&empty, ReportFormat::Text).contains("task"));
    }
}
