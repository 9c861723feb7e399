use std::fs;
use std::io::{self, BufReader, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use flowkit::dsl::{parse_bytes, serialize, ParseDiagnostic, Severity};
use flowkit::render::{to_dot, to_trace_snapshot, RenderOptions};
use flowkit::sim::{extract_events, run, EventTrace, Scenario, SimError};
use flowkit::validate::{has_errors, validate, Diagnostic};
use flowkit::Model;

/// Parse, validate, simulate and render Flowthings models.
#[derive(Debug, Parser)]
#[command(name = "flowkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model and report diagnostics.
    Validate {
        file: PathBuf,
        /// Print diagnostics as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario against a model and write its trace.
    Sim(SimArgs),
    /// Write a Graphviz DOT diagram of a model.
    Render(RenderArgs),
    /// Print a model in canonical form.
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// List or print the bundled example models.
    Examples {
        #[arg(long, conflicts_with = "emit")]
        list: bool,
        /// Print a bundled model or scenario file, e.g. `book` or `callcenter-accept.json`.
        #[arg(long, value_name = "NAME")]
        emit: Option<String>,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    file: PathBuf,
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Override the scenario's tick limit.
    #[arg(long, value_name = "N")]
    max_ticks: Option<u64>,
    /// Write the JSONL trace here instead of stdout.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the extracted events document here.
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    file: PathBuf,
    /// Output path, or `-` for stdout.
    #[arg(short = 'o', value_name = "FILE")]
    output: PathBuf,
    /// Highlight the stages active at this tick of `--trace`.
    #[arg(long, value_name = "N", requires = "trace")]
    snapshot_tick: Option<u64>,
    #[arg(long, value_name = "FILE", requires = "snapshot_tick")]
    trace: Option<PathBuf>,
}

const FAILED: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("{}: {err:#}", Style::stderr().paint("error", Severity::Error));
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Validate { file, json } => cmd_validate(&file, json),
        Command::Sim(args) => cmd_sim(&args),
        Command::Render(args) => cmd_render(&args),
        Command::Fmt { file, write } => cmd_fmt(&file, write),
        Command::Examples { emit: Some(name), .. } => cmd_emit(&name),
        Command::Examples { .. } => cmd_list(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Style {
    color: bool,
}

impl Style {
    fn for_stream(is_terminal: bool) -> Style {
        let disabled = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Style { color: is_terminal && !disabled }
    }

    fn stdout() -> Style {
        Style::for_stream(io::stdout().is_terminal())
    }

    fn stderr() -> Style {
        Style::for_stream(io::stderr().is_terminal())
    }

    fn paint(self, text: &str, severity: Severity) -> String {
        if !self.color {
            return text.to_string();
        }
        let code = match severity {
            Severity::Error => "1;31",
            Severity::Warning => "1;33",
        };
        format!("\x1b[{code}m{text}\x1b[0m")
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        io::stdout().write_all(text.as_bytes()).context("cannot write to stdout")
    } else {
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn load(path: &Path) -> Result<Result<Model, Vec<ParseDiagnostic>>> {
    let bytes = read(path)?;
    Ok(parse_bytes(&path.display().to_string(), &bytes))
}

fn print_parse_errors(errors: &[ParseDiagnostic], style: Style) {
    for d in errors {
        let label = style.paint(&d.severity.to_string(), d.severity);
        eprintln!("{}: {label}[{}]: {}", d.span, d.code, d.message);
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn diagnostic_line(file: &Path, d: &Diagnostic, style: Style) -> String {
    let label = style.paint(&d.severity.to_string(), d.severity);
    format!("{}: {label}[{}]: {} ({})", file.display(), d.code, d.message, d.subject_name)
}

fn cmd_validate(file: &Path, json: bool) -> Result<u8> {
    let style = Style::stdout();
    let mut out = io::stdout().lock();
    let diagnostics = match load(file)? {
        Ok(model) => validate(&model),
        Err(errors) => {
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&errors)?)?;
            } else {
                for d in &errors {
                    let label = style.paint(&d.severity.to_string(), d.severity);
                    writeln!(out, "{}: {label}[{}]: {}", d.span, d.code, d.message)?;
                }
                writeln!(out, "{}, 0 warnings", plural(errors.len(), "error"))?;
            }
            return Ok(FAILED);
        }
    };
    if json {
        out.write_all(flowkit::validate::to_json(&diagnostics).as_bytes())?;
    } else {
        for d in &diagnostics {
            writeln!(out, "{}", diagnostic_line(file, d, style))?;
        }
        let errors = diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
        let warnings = diagnostics.len() - errors;
        writeln!(out, "{}, {}", plural(errors, "error"), plural(warnings, "warning"))?;
    }
    Ok(if has_errors(&diagnostics) { FAILED } else { 0 })
}

fn cmd_sim(args: &SimArgs) -> Result<u8> {
    let style = Style::stderr();
    let model = match load(&args.file)? {
        Ok(model) => model,
        Err(errors) => {
            print_parse_errors(&errors, style);
            return Ok(FAILED);
        }
    };
    let diagnostics = validate(&model);
    for d in &diagnostics {
        eprintln!("{}", diagnostic_line(&args.file, d, style));
    }
    if has_errors(&diagnostics) {
        return Ok(FAILED);
    }

    let text = read(&args.scenario)?;
    let text = std::str::from_utf8(&text).with_context(|| format!("{} is not UTF-8", args.scenario.display()))?;
    let mut scenario =
        Scenario::from_json(text).with_context(|| format!("invalid scenario {}", args.scenario.display()))?;
    if let Some(n) = args.max_ticks {
        scenario.max_ticks = n;
    }
    let trace = match run(&model, &scenario) {
        Ok(trace) => trace,
        Err(err @ SimError::InvalidModel(_)) => {
            eprintln!("{}: {err}", style.paint("error", Severity::Error));
            return Ok(FAILED);
        }
        Err(err) => bail!("scenario {}: {err}", args.scenario.display()),
    };
    if trace.truncated {
        eprintln!(
            "{}: run stopped at the tick limit ({}) before quiescence",
            style.paint("warning", Severity::Warning),
            scenario.max_ticks
        );
    }

    match &args.trace {
        Some(path) => write_output(path, &trace.to_jsonl())?,
        None => trace.write_jsonl(io::stdout().lock()).context("cannot write to stdout")?,
    }
    if let Some(path) = &args.events {
        let process = extract_events(&trace, &model)?;
        let mut json = serde_json::to_string_pretty(&process)?;
        json.push('\n');
        write_output(path, &json)?;
    }
    Ok(0)
}

fn cmd_render(args: &RenderArgs) -> Result<u8> {
    let model = match load(&args.file)? {
        Ok(model) => model,
        Err(errors) => {
            print_parse_errors(&errors, Style::stderr());
            return Ok(FAILED);
        }
    };
    let options = RenderOptions::default();
    let dot = match (args.snapshot_tick, &args.trace) {
        (Some(tick), Some(path)) => {
            let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
            let trace = EventTrace::read_jsonl(BufReader::new(file))
                .with_context(|| format!("invalid trace {}", path.display()))?;
            to_trace_snapshot(&model, &trace, tick, &options)?
        }
        _ => to_dot(&model, &options),
    };
    write_output(&args.output, &dot)?;
    Ok(0)
}

fn cmd_fmt(file: &Path, write: bool) -> Result<u8> {
    let model = match load(file)? {
        Ok(model) => model,
        Err(errors) => {
            print_parse_errors(&errors, Style::stderr());
            return Ok(FAILED);
        }
    };
    let text = serialize(&model);
    if write {
        write_output(file, &text)?;
    } else {
        write_output(Path::new("-"), &text)?;
    }
    Ok(0)
}

fn cmd_list() -> Result<u8> {
    let mut out = io::stdout().lock();
    for entry in flowkit::corpus::corpus() {
        let scenarios: Vec<String> = entry.scenarios.iter().map(|s| s.file_name(entry.stem)).collect();
        writeln!(out, "{:<18} {:<16} {}", entry.name, entry.file_name(), scenarios.join(" "))?;
    }
    Ok(0)
}

fn cmd_emit(name: &str) -> Result<u8> {
    let corpus = flowkit::corpus::corpus();
    let scenario = corpus.iter().find_map(|e| e.scenarios.iter().find(|s| s.file_name(e.stem) == name).map(|s| s.json));
    let text = match (flowkit::corpus::find(name), scenario) {
        (Some(entry), _) => entry.source,
        (None, Some(json)) => json,
        (None, None) => bail!("no bundled example named `{name}` (see `flowkit examples --list`)"),
    };
    write_output(Path::new("-"), text)?;
    Ok(0)
}
