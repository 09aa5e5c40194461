use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ocellens_core::discovery::{discover_ocdfg, render_dot, DotOptions};
use ocellens_core::io::{read_ocel_json, read_ocel_json_report, write_ocel_json, ReadError};
use ocellens_core::model::{CompositeEventType, CompositeObjectType};
use ocellens_core::ops::{Operation, QualifierSet};
use ocellens_core::{decode_event_type, decode_object_type, encode_event_type, encode_object_type, type_catalog, OcelLog};

const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_OPERATION: u8 = 4;

/// Multi-granularity analysis of OCEL 2.0 event logs.
///
/// Composite types are written in their flat form: `Test~type=ECG` for a
/// drilled object type and `ot@Test~type=ECG` for an unfolded event type.
/// `-` as a path means stdin or stdout.
#[derive(Debug, Parser)]
#[command(name = "ocellens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a log against the OCEL 2.0 well-formedness rules.
    Validate(Input),
    /// Print counts and the type catalog as JSON.
    Info(Input),
    /// Split an object type by the latest value of one of its attributes.
    DrillDown(DrillArgs),
    /// Merge the drilled subtypes of an object type back into it.
    RollUp(DrillArgs),
    /// Split an event type by the type of a related object.
    Unfold(UnfoldArgs),
    /// Merge an unfolded event type back into its parent.
    Fold(FoldArgs),
    /// Discover the object-centric directly-follows graph.
    Discover(DiscoverArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct Input {
    /// Input log.
    #[arg(short, long, default_value = "-")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct Transform {
    #[command(flatten)]
    input: Input,
    /// Output log.
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct DrillArgs {
    #[command(flatten)]
    io: Transform,
    #[arg(long, value_parser = parse_object_type)]
    object_type: CompositeObjectType,
    #[arg(long)]
    attribute: String,
}

#[derive(Debug, Args)]
struct UnfoldArgs {
    #[command(flatten)]
    io: Transform,
    #[arg(long, value_parser = parse_event_type)]
    event_type: CompositeEventType,
    #[arg(long, value_parser = parse_object_type)]
    object_type: CompositeObjectType,
    /// Only follow relations with this qualifier; repeatable. All qualifiers when absent.
    #[arg(long = "qualifier")]
    qualifiers: Vec<String>,
}

#[derive(Debug, Args)]
struct FoldArgs {
    #[command(flatten)]
    io: Transform,
    #[arg(long, value_parser = parse_event_type)]
    event_type: CompositeEventType,
    #[arg(long, value_parser = parse_object_type)]
    object_type: CompositeObjectType,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    #[command(flatten)]
    io: Transform,
    #[arg(long, value_enum, default_value_t = Format::Dot)]
    format: Format,
    /// Hide arcs observed fewer times than this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_arc_frequency: u64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Bind address; overrides OCELLENS_ADDR.
    #[arg(long)]
    addr: Option<SocketAddr>,
    /// Directory with the built explorer UI; overrides OCELLENS_UI_DIR.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

fn parse_object_type(s: &str) -> Result<CompositeObjectType, String> {
    decode_object_type(s).map_err(|e| e.to_string())
}

fn parse_event_type(s: &str) -> Result<CompositeEventType, String> {
    decode_event_type(s).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Self { code, error }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    let res = if is_stdio(path) {
        io::stdin().read_to_end(&mut buf).map(|_| ()).context("reading stdin")
    } else {
        fs::read(path)
            .map(|b| buf = b)
            .with_context(|| format!("reading {}", path.display()))
    };
    res.map_err(|e| Failure::new(EXIT_IO, e))?;
    Ok(buf)
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult {
    let res = if is_stdio(path) {
        let mut out = io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush()).context("writing stdout")
    } else {
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
    };
    res.map_err(|e| Failure::new(EXIT_IO, e))
}

fn load(input: &Input) -> CliResult<OcelLog> {
    let bytes = read_input(&input.input)?;
    read_ocel_json(&bytes).map_err(|e| Failure::new(EXIT_INVALID, read_error(e)))
}

fn read_error(e: ReadError) -> anyhow::Error {
    match e {
        ReadError::Validation(report) => anyhow!("invalid log:\n{report}"),
        other => anyhow!(other),
    }
}

fn transform(io: &Transform, op: Operation) -> CliResult {
    let log = load(&io.input)?;
    let out = op.apply(&log).map_err(|e| Failure::new(EXIT_OPERATION, e.into()))?;
    write_output(&io.output, &write_ocel_json(&out))
}

fn info(log: &OcelLog) -> serde_json::Value {
    serde_json::json!({
        "events": log.events.len(),
        "objects": log.objects.len(),
        "e2o": log.e2o.len(),
        "o2o": log.o2o.len(),
        "object_types": log.object_types.keys().map(encode_object_type).collect::<Vec<_>>(),
        "event_types": log.event_types.keys().map(encode_event_type).collect::<Vec<_>>(),
        "catalog": type_catalog(log),
    })
}

fn pretty(value: serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

fn serve(args: ServeArgs) -> CliResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let mut config = ocellens_service::Config::from_env().map_err(|e| Failure::new(EXIT_USAGE, e.into()))?;
    if let Some(addr) = args.addr {
        config.addr = addr;
    }
    if let Some(dir) = args.ui_dir {
        config.ui_dir = Some(dir);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_IO, e.into()))?;
    runtime
        .block_on(ocellens_service::serve(config))
        .context("serving")
        .map_err(|e| Failure::new(EXIT_IO, e))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Validate(input) => {
            let bytes = read_input(&input.input)?;
            let (_, report) =
                read_ocel_json_report(&bytes).map_err(|e| Failure::new(EXIT_INVALID, read_error(e)))?;
            if report.ok {
                println!("valid");
                Ok(())
            } else {
                Err(Failure::new(EXIT_INVALID, anyhow!("invalid log:\n{report}")))
            }
        }
        Command::Info(input) => {
            let log = load(&input)?;
            write_output(Path::new("-"), &pretty(info(&log)))
        }
        Command::DrillDown(a) => transform(
            &a.io,
            Operation::DrillDown {
                object_type: a.object_type,
                attribute: a.attribute,
            },
        ),
        Command::RollUp(a) => transform(
            &a.io,
            Operation::RollUp {
                object_type: a.object_type,
                attribute: a.attribute,
            },
        ),
        Command::Unfold(a) => transform(
            &a.io,
            Operation::Unfold {
                event_type: a.event_type,
                object_type: a.object_type,
                qualifiers: if a.qualifiers.is_empty() {
                    QualifierSet::All
                } else {
                    QualifierSet::Only(a.qualifiers.into_iter().collect())
                },
            },
        ),
        Command::Fold(a) => transform(
            &a.io,
            Operation::Fold {
                event_type: a.event_type,
                object_type: a.object_type,
            },
        ),
        Command::Discover(a) => {
            let log = load(&a.io.input)?;
            let dfg = discover_ocdfg(&log);
            let min = a.min_arc_frequency as usize;
            let bytes = match a.format {
                Format::Dot => render_dot(
                    &dfg,
                    &DotOptions {
                        min_arc_frequency: min,
                        ..Default::default()
                    },
                )
                .into_bytes(),
                Format::Json => pretty(serde_json::to_value(dfg.filtered(min).to_json()).expect("serializable")),
            };
            write_output(&a.io.output, &bytes)
        }
        Command::Serve(args) => serve(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("ocellens: {error:#}");
            ExitCode::from(code)
        }
    }
}
