use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdfmig::analysis::DEFAULT_STATE_BUDGET;
use sdfmig::migration::explore_single_migrations;
use sdfmig::rational::{self, Rational};
use sdfmig::scenario::{emit_report, import_sdf3, Report, ReportFormat, ReportRow};
use sdfmig::{AnalysisOptions, Error, MigrationParams, Scenario};

/// Throughput analysis and software-to-hardware migration of SDF
/// applications mapped on NoC-based MPSoCs.
#[derive(Parser)]
#[command(name = "sdfmig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario and check that it is live.
    Check(Common),
    /// Throughput of the scenario as mapped.
    Throughput(Common),
    /// Throughput before and after migrating one task to hardware.
    Migrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        migration: MigrationFlags,
        /// Task to migrate.
        #[arg(long)]
        task: String,
        /// Write the migrated scenario to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Migrate every software task in turn and rank the gains.
    Explore {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        migration: MigrationFlags,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (.toml), or an SDF3 application graph (.xml).
    scenario: PathBuf,
    /// Clock frequency in Hz; defaults to the scenario's clock.
    #[arg(long, value_parser = parse_positive)]
    freq: Option<Rational>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Maximum number of states explored per analysis.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET as u64, value_parser = clap::value_parser!(u64).range(1..))]
    state_budget: u64,
    /// Decimal places for frame rates.
    #[arg(long, default_value_t = 2)]
    places: usize,
}

#[derive(Args)]
struct MigrationFlags {
    /// Hardware speedup; defaults to the scenario's value (2 if unset).
    #[arg(long, value_parser = parse_speedup)]
    speedup: Option<Rational>,
    /// Prefetch time in cycles; defaults to the scenario's value (10000 if unset).
    #[arg(long)]
    prefetch: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn parse_positive(s: &str) -> Result<Rational, String> {
    match rational::parse_rational(s) {
        Some(v) if v > Rational::from_integer(0.into()) => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn parse_speedup(s: &str) -> Result<Rational, String> {
    match rational::parse_rational(s) {
        Some(v) if v >= Rational::from_integer(1.into()) => Ok(v),
        _ => Err(format!("`{s}` is not a number >= 1")),
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_ANALYSIS: u8 = 2;
const EXIT_USAGE: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::InvalidGraph(_) => EXIT_VALIDATION,
        e if e.is_analysis_failure() => EXIT_ANALYSIS,
        Error::Overflow(_) => EXIT_ANALYSIS,
        _ => EXIT_USAGE,
    }
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let path: &Path = &common.scenario;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
        let clock = common.freq.clone().unwrap_or_else(|| rational::from_u64(100_000_000));
        return import_sdf3(&text, clock);
    }
    let mut scenario = Scenario::from_toml_str(&text)?;
    if let Some(f) = &common.freq {
        scenario.meta.clock_hz = f.clone();
    }
    Ok(scenario)
}

fn options(common: &Common) -> AnalysisOptions {
    AnalysisOptions { state_budget: usize::try_from(common.state_budget).unwrap_or(usize::MAX) }
}

fn params(scenario: &Scenario, flags: &MigrationFlags) -> MigrationParams {
    let mut p = scenario.defaults.clone();
    if let Some(s) = &flags.speedup {
        p.speedup = s.clone();
    }
    if let Some(t) = flags.prefetch {
        p.prefetch_time = t;
    }
    p
}

fn format(common: &Common) -> ReportFormat {
    match common.format {
        Format::Text => ReportFormat::Text,
        Format::Csv => ReportFormat::Csv,
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Check(common) => {
            let scenario = load(&common)?;
            let result = scenario.throughput(&options(&common))?;
            let fps = rational::format_decimal(
                &sdfmig::to_frames_per_second(&result, &scenario.meta.clock_hz),
                common.places,
            );
            Ok(format!(
                "{}: valid, consistent and live ({} actors, {} channels, {} f/s)\n",
                scenario.meta.name,
                scenario.graph.actors.len(),
                scenario.graph.channels.len(),
                fps
            ))
        }
        Command::Throughput(common) => {
            let scenario = load(&common)?;
            let baseline = scenario.throughput(&options(&common))?;
            let report = Report {
                scenario: scenario.meta.name.clone(),
                clock_hz: scenario.meta.clock_hz.clone(),
                baseline,
                rows: Vec::new(),
                places: common.places,
            };
            Ok(emit_report(&report, format(&common)))
        }
        Command::Migrate { common, migration, task, output } => {
            let scenario = load(&common)?;
            let opts = options(&common);
            let baseline = scenario.throughput(&opts)?;
            let (migrated, outcome) = scenario.migrate(&task, &params(&scenario, &migration))?;
            let after = sdfmig::self_timed_throughput(&outcome.graph, &opts)?;
            if let Some(path) = output {
                migrated.save(path)?;
            }
            let report = Report {
                scenario: scenario.meta.name.clone(),
                clock_hz: scenario.meta.clock_hz.clone(),
                baseline,
                rows: vec![ReportRow { actor: task, result: Ok(after) }],
                places: common.places,
            };
            Ok(emit_report(&report, format(&common)))
        }
        Command::Explore { common, migration } => {
            let scenario = load(&common)?;
            let opts = options(&common);
            let baseline = scenario.throughput(&opts)?;
            let mapping = scenario
                .mapping
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("a graph-only scenario cannot be migrated".into()))?;
            let entries = explore_single_migrations(
                &scenario.graph,
                &scenario.platform,
                mapping,
                &params(&scenario, &migration),
                &baseline,
                &scenario.meta.clock_hz,
                &scenario.build,
                &opts,
            );
            let rows = entries
                .into_iter()
                .map(|e| ReportRow { actor: e.actor.to_string(), result: e.outcome.map(|(r, _)| r) })
                .collect();
            let report = Report {
                scenario: scenario.meta.name.clone(),
                clock_hz: scenario.meta.clock_hz.clone(),
                baseline,
                rows,
                places: common.places,
            };
            Ok(emit_report(&report, format(&common)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
