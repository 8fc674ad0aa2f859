//! The `tmkit` command line.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::checker::{self, Mode, Verdict};
use crate::diagnostic::{self, Diagnostic, Severity};
use crate::events::{self, Event};
use crate::export;
use crate::model::ThimacId;
use crate::parser::{self, ModelDocument};
use crate::sim::{self, ConservationReport};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tmkit", version, about = "Check, analyze, simulate and export thinging machine models")]
struct Cli {
    /// Color severities and check results with ANSI escapes.
    #[arg(long, global = true)]
    color: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strict,
    Relaxed,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Relaxed => Mode::Relaxed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    DotStatic,
    DotBehavior,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report structural, flow-legality, encapsulation and event diagnostics.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, env = "TMKIT_MODE", default_value = "relaxed", ignore_case = true)]
        mode: ModeArg,
    },
    /// Print the computed OO / NON_OO / LEAF verdict of every thimac.
    Classify { file: PathBuf },
    /// List the thimacs deleted along with one thimac.
    Impact {
        file: PathBuf,
        #[arg(long, value_name = "THIMAC")]
        delete: String,
    },
    /// Validate and run a behavior, printing every firing.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        behavior: String,
        #[arg(long, value_enum, env = "TMKIT_MODE", default_value = "relaxed", ignore_case = true)]
        mode: ModeArg,
        /// Also write the trace as canonical JSON to this file.
        #[arg(long, value_name = "OUT")]
        trace_json: Option<PathBuf>,
    },
    /// Write a DOT view or the canonical JSON form to stdout.
    Export {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long, required_if_eq("format", "dot-behavior"))]
        behavior: Option<String>,
    },
}

struct Out<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    color: bool,
}

enum Failure {
    /// Diagnostics with ERROR severity (already printed).
    Errors,
    Usage(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("output error: {e}"))
    }
}

type CmdResult = Result<i32, Failure>;

impl Out<'_> {
    fn paint(&self, text: &str, ansi: &str) -> String {
        if self.color {
            format!("\x1b[{ansi}m{text}\x1b[0m")
        } else {
            text.to_owned()
        }
    }

    fn severity(&self, s: Severity) -> String {
        match s {
            Severity::Error => self.paint(s.as_str(), "1;31"),
            Severity::Warning => self.paint(s.as_str(), "33"),
        }
    }

    fn diagnostic(&self, d: &Diagnostic) -> String {
        format!("{} {} {}: {}", self.severity(d.severity), d.code, d.subject, d.message)
    }

    fn parse_error(&self, file: &Path, e: &parser::ParseError) -> String {
        format!(
            "{} {} {}:{}:{}: {}",
            self.severity(Severity::Error),
            e.code,
            file.display(),
            e.span.line,
            e.span.column,
            e.message
        )
    }
}

/// Run the command line; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let is_info = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if is_info {
                let _ = stdout.write_all(rendered.as_bytes());
                return EXIT_CLEAN;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    let mut out = Out {
        stdout,
        stderr,
        color: cli.color,
    };
    let result = match &cli.command {
        Command::Check { file, mode } => cmd_check(&mut out, file, (*mode).into()),
        Command::Classify { file } => cmd_classify(&mut out, file),
        Command::Impact { file, delete } => cmd_impact(&mut out, file, delete),
        Command::Simulate {
            file,
            behavior,
            mode,
            trace_json,
        } => cmd_simulate(&mut out, file, behavior, (*mode).into(), trace_json.as_deref()),
        Command::Export {
            file,
            format,
            behavior,
        } => cmd_export(&mut out, file, *format, behavior.as_deref()),
    };
    let code = match result {
        Ok(code) => code,
        Err(Failure::Errors) => EXIT_ERRORS,
        Err(Failure::Usage(message)) => {
            let _ = writeln!(out.stderr, "tmkit: {message}");
            EXIT_USAGE
        }
    };
    let _ = out.stdout.flush();
    code
}

fn read(file: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(file)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
    String::from_utf8(bytes)
        .map_err(|_| Failure::Usage(format!("{} is not valid UTF-8", file.display())))
}

/// Parse, printing errors to `sink` (stdout for `check`, stderr otherwise).
fn load(out: &mut Out<'_>, file: &Path, to_stdout: bool) -> Result<ModelDocument, Failure> {
    let text = read(file)?;
    parser::parse(&text).map_err(|errors| {
        for e in &errors {
            let line = out.parse_error(file, e);
            let sink: &mut dyn Write = if to_stdout { &mut *out.stdout } else { &mut *out.stderr };
            let _ = writeln!(sink, "{line}");
        }
        Failure::Errors
    })
}

/// Every diagnostic `check` reports for a parsed document.
pub fn check_document(doc: &ModelDocument, mode: Mode) -> Vec<Diagnostic> {
    let mut diags = checker::check_flow_legality(&doc.model, mode);
    diags.extend(checker::check_oo_encapsulation(&doc.model));
    for e in &doc.events {
        diags.extend(events::validate_event(&doc.model, e));
    }
    for b in &doc.behaviors {
        let chosen = behavior_events(doc, b);
        if let Ok(deps) = events::derive_dependencies(&doc.model, &chosen) {
            if let Ok(found) = sim::validate_chronology(b, &deps) {
                diags.extend(found);
            }
        }
    }
    diagnostic::sort(&mut diags);
    diags
}

/// The behavior's events in document order.
fn behavior_events(doc: &ModelDocument, b: &sim::BehavioralModel) -> Vec<Event> {
    let wanted: BTreeSet<&str> = b.event_ids.iter().map(String::as_str).collect();
    doc.events
        .iter()
        .filter(|e| wanted.contains(e.id.as_str()))
        .cloned()
        .collect()
}

fn cmd_check(out: &mut Out<'_>, file: &Path, mode: Mode) -> CmdResult {
    let doc = load(out, file, true)?;
    let diags = check_document(&doc, mode);
    for d in &diags {
        writeln!(out.stdout, "{}", out.diagnostic(d))?;
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let warnings = diags.len() - errors;
    writeln!(out.stdout, "errors={errors} warnings={warnings}")?;
    Ok(if errors > 0 { EXIT_ERRORS } else { EXIT_CLEAN })
}

fn cmd_classify(out: &mut Out<'_>, file: &Path) -> CmdResult {
    let doc = load(out, file, false)?;
    let rows = checker::classify(&doc.model);
    let width = rows
        .iter()
        .map(|r| r.thimac.as_str().len())
        .chain(["THIMAC".len()])
        .max()
        .unwrap_or(0);
    writeln!(out.stdout, "{:<width$}  DECLARED  COMPUTED  NOTE", "THIMAC")?;
    for r in rows {
        let declared = doc
            .model
            .thimac(&r.thimac)
            .map(|t| t.declared_oo)
            .unwrap_or(false);
        let mut note = Vec::new();
        if declared && r.verdict == Verdict::NonOo {
            note.push(out.paint("MISMATCH", "1;31"));
        }
        if r.shared_parts_only {
            note.push("shared parts only".to_owned());
        }
        let line = format!(
            "{:<width$}  {:<8}  {:<8}  {}",
            r.thimac.as_str(),
            if declared { "oo" } else { "-" },
            r.verdict.as_str(),
            note.join(", ")
        );
        writeln!(out.stdout, "{}", line.trim_end())?;
    }
    Ok(EXIT_CLEAN)
}

fn cmd_impact(out: &mut Out<'_>, file: &Path, delete: &str) -> CmdResult {
    let doc = load(out, file, false)?;
    let target = ThimacId::new(delete);
    match checker::deletion_impact(&doc.model, &target) {
        Ok(ids) => {
            for id in ids {
                writeln!(out.stdout, "{id}")?;
            }
            Ok(EXIT_CLEAN)
        }
        Err(_) => {
            let line = format!(
                "{} UNKNOWN_THIMAC {delete}: no such thimac",
                out.severity(Severity::Error)
            );
            writeln!(out.stderr, "{line}")?;
            Err(Failure::Errors)
        }
    }
}

fn cmd_simulate(
    out: &mut Out<'_>,
    file: &Path,
    behavior: &str,
    mode: Mode,
    trace_json: Option<&Path>,
) -> CmdResult {
    let doc = load(out, file, false)?;
    let Some(b) = doc.behavior(behavior) else {
        return unknown_behavior(out, behavior);
    };
    let chosen = behavior_events(&doc, b);
    let deps = match events::derive_dependencies(&doc.model, &chosen) {
        Ok(deps) => deps,
        Err(events::EventError::InvalidEvent { diagnostics, .. }) => {
            for d in &diagnostics {
                writeln!(out.stdout, "{}", out.diagnostic(d))?;
            }
            return Err(Failure::Errors);
        }
    };
    let diags = sim::validate_chronology(b, &deps).map_err(|e| {
        Failure::Usage(format!("{} {e}", e.code()))
    })?;
    for d in &diags {
        writeln!(out.stdout, "{}", out.diagnostic(d))?;
    }
    if diagnostic::has_errors(&diags) || b.is_cyclic().unwrap_or(true) {
        writeln!(out.stdout, "not simulated")?;
        return Err(Failure::Errors);
    }
    let trace = match sim::simulate(&doc.model, &chosen, b, mode) {
        Ok(trace) => trace,
        Err(e) => {
            writeln!(out.stdout, "{} {e}", out.severity(Severity::Error))?;
            return Err(Failure::Errors);
        }
    };
    for f in &trace.firings {
        writeln!(
            out.stdout,
            "fire {} {} consumed={} emitted={}",
            f.event,
            f.action,
            ids(&f.consumed),
            ids(&f.emitted)
        )?;
    }
    for e in &trace.exits {
        writeln!(out.stdout, "exit {} {}", e.token, e.action)?;
    }
    for (token, action) in &trace.final_locations {
        writeln!(out.stdout, "final {token} {action}")?;
    }
    writeln!(
        out.stdout,
        "tokens external={} created={} triggered={}",
        trace.count_origin(sim::TokenOrigin::External),
        trace.count_origin(sim::TokenOrigin::Created),
        trace.count_origin(sim::TokenOrigin::Triggered)
    )?;
    let report = sim::conservation_check(&trace);
    write_report(out, &report)?;
    if let Some(path) = trace_json {
        let mut text = export::to_json(&trace);
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if report.all_passed() { EXIT_CLEAN } else { EXIT_ERRORS })
}

fn unknown_behavior(out: &mut Out<'_>, name: &str) -> CmdResult {
    let line = format!(
        "{} UNKNOWN_BEHAVIOR {name}: no such behavior",
        out.severity(Severity::Error)
    );
    writeln!(out.stderr, "{line}")?;
    Err(Failure::Errors)
}

fn ids(list: &[sim::TokenId]) -> String {
    let parts: Vec<String> = list.iter().map(|t| t.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn write_report(out: &mut Out<'_>, report: &ConservationReport) -> std::io::Result<()> {
    for line in report.to_string().lines() {
        let line = if out.color {
            line.replacen(" pass ", &format!(" {} ", out.paint("pass", "32")), 1)
                .replacen(" FAIL ", &format!(" {} ", out.paint("FAIL", "1;31")), 1)
        } else {
            line.to_owned()
        };
        writeln!(out.stdout, "{line}")?;
    }
    Ok(())
}

fn cmd_export(out: &mut Out<'_>, file: &Path, format: Format, behavior: Option<&str>) -> CmdResult {
    let doc = load(out, file, false)?;
    match format {
        Format::DotStatic => write!(out.stdout, "{}", export::to_dot_static(&doc.model))?,
        Format::Json => writeln!(out.stdout, "{}", export::to_json(&doc))?,
        Format::DotBehavior => {
            let name = behavior.expect("clap requires --behavior for dot-behavior");
            let Some(b) = doc.behavior(name) else {
                return unknown_behavior(out, name);
            };
            write!(out.stdout, "{}", export::to_dot_behavior(b))?;
        }
    }
    Ok(EXIT_CLEAN)
}
