//! The `check` pipeline: configuration, analysis of each input, ledger
//! suppression, rendering and exit codes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::coverage::{evidence_diagnostics, merge_evidence, parse_coverage, CoverageMap, EvidenceReport, RuleEvidence};
use crate::effectless::{self, JustificationLedger, Mode};
use crate::flow::analyze;
use crate::frontend::preprocess::PreprocessOptions;
use crate::guidelines::{all_check_ids, run_checks, sort_diagnostics, CheckContext, Diagnostic, Profile, VerdictKind, EFFECTLESS};
use crate::sema::{compile, LibcProfile};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_DEFINITE: i32 = 1;
pub const EXIT_POSSIBLE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Ndjson,
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub defines: Vec<(String, Option<String>)>,
    pub include_paths: Vec<PathBuf>,
    pub profile: Profile,
    pub effectless: Mode,
    pub enable: Vec<String>,
    pub disable: Vec<String>,
    pub coverage: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub format: Format,
    pub dump_cfg: bool,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}:{line}:{col}: error: {message}")]
    Compile { file: String, line: u32, col: u32, message: String },
    #[error("{file}: {message}")]
    Input { file: String, message: String },
}

impl RunConfig {
    /// Reject unknown or contradictory check ids.
    pub fn validate(&self) -> Result<(), DriverError> {
        let known = all_check_ids();
        for id in self.enable.iter().chain(&self.disable) {
            if !known.contains(&id.as_str()) {
                return Err(DriverError::Usage(format!("unknown check id '{id}'")));
            }
        }
        if let Some(id) = self.enable.iter().find(|id| self.disable.contains(id)) {
            return Err(DriverError::Usage(format!("check '{id}' is both enabled and disabled")));
        }
        if self.inputs.is_empty() {
            return Err(DriverError::Usage("no input files".into()));
        }
        Ok(())
    }

    /// With no `--enable`, every check runs; otherwise only the listed ones.
    pub fn is_enabled(&self, id: &str) -> bool {
        (self.enable.is_empty() || self.enable.iter().any(|e| e == id)) && !self.disable.iter().any(|d| d == id)
    }
}

/// Everything `check` produced for a set of inputs.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub diagnostics: Vec<Diagnostic>,
    /// Coverage evidence per input, when a coverage file was given.
    pub evidence: Vec<(String, EvidenceReport)>,
    pub cfg_dump: Option<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.diagnostics)
    }
}

/// 1 if any unsuppressed finding is definite, 2 if only possible ones
/// remain, 0 otherwise.
pub fn exit_code(diags: &[Diagnostic]) -> i32 {
    let live: Vec<&Diagnostic> = diags.iter().filter(|d| d.suppressed_by.is_none()).collect();
    if live.iter().any(|d| d.verdict.kind == VerdictKind::Definite) {
        EXIT_DEFINITE
    } else if live.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_POSSIBLE
    }
}

fn read(path: &Path) -> Result<String, DriverError> {
    std::fs::read_to_string(path).map_err(|e| DriverError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Function names listed one per line; `#` starts a comment.
pub fn parse_annotations(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Side inputs shared by every translation unit.
#[derive(Debug, Clone, Default)]
pub struct SideInputs {
    pub coverage: Option<CoverageMap>,
    pub ledger: JustificationLedger,
    pub annotations: BTreeSet<String>,
}

impl SideInputs {
    pub fn load(config: &RunConfig) -> Result<Self, DriverError> {
        let mut side = SideInputs::default();
        if let Some(p) = &config.coverage {
            let map = parse_coverage(&read(p)?)
                .map_err(|e| DriverError::Input { file: p.display().to_string(), message: e.to_string() })?;
            side.coverage = Some(map);
        }
        if let Some(p) = &config.ledger {
            side.ledger = JustificationLedger::parse(&read(p)?, &all_check_ids())
                .map_err(|e| DriverError::Input { file: p.display().to_string(), message: e.to_string() })?;
        }
        if let Some(p) = &config.annotations {
            side.annotations = parse_annotations(&read(p)?);
        }
        Ok(side)
    }
}

/// Analyze one source text named `name`.
pub fn check_source(
    config: &RunConfig,
    side: &SideInputs,
    name: &str,
    path: Option<&Path>,
    source: &str,
    report: &mut Report,
) -> Result<(), DriverError> {
    let opts = PreprocessOptions {
        defines: config.defines.clone(),
        include_paths: config.include_paths.clone(),
        builtin_macros: Vec::new(),
    };
    let unit = compile(source, name, path, &opts, &LibcProfile::default()).map_err(|e| {
        let span = e.span();
        DriverError::Compile { file: name.to_string(), line: span.line, col: span.column, message: e.message().to_string() }
    })?;
    let flow = analyze(&unit).map_err(|e| DriverError::Compile {
        file: name.to_string(),
        line: e.span.line,
        col: e.span.column,
        message: e.message.clone(),
    })?;
    let enabled = |id: &str| config.is_enabled(id);
    let ctx = CheckContext::new(&unit, &flow, config.profile);
    report.diagnostics.extend(run_checks(&ctx, &enabled));
    if enabled(EFFECTLESS) {
        report.diagnostics.extend(effectless::run(&unit, &flow, &side.ledger, config.effectless));
    }
    let empty = CoverageMap::default();
    let map = side.coverage.as_ref().unwrap_or(&empty);
    let evidence = merge_evidence(&unit, &flow, map, &side.annotations)
        .map_err(|e| DriverError::Input { file: name.to_string(), message: e.to_string() })?;
    report.diagnostics.extend(evidence_diagnostics(&unit, &evidence, side.coverage.is_some(), &enabled));
    if side.coverage.is_some() {
        report.evidence.push((name.to_string(), evidence));
    }
    if config.dump_cfg {
        let dump = report.cfg_dump.get_or_insert_with(String::new);
        for (fname, facts) in &flow.functions {
            let _ = writeln!(dump, "function {fname} ({name})");
            dump.push_str(&facts.cfg.dump());
        }
    }
    Ok(())
}

/// Mark findings covered by a ledger entry; they stay in the report.
pub fn apply_ledger(diags: &mut [Diagnostic], ledger: &JustificationLedger) {
    for d in diags {
        if let Some(e) = ledger.find(&d.file, d.span.line, &d.check_id) {
            d.suppressed_by = Some(format!("ledger:{}", e.source_line));
        }
    }
}

/// Run the whole pipeline over in-memory sources.
pub fn check_sources(config: &RunConfig, side: &SideInputs, sources: &[(String, String)]) -> Result<Report, DriverError> {
    let mut report = Report::default();
    for (name, text) in sources {
        check_source(config, side, name, None, text, &mut report)?;
    }
    apply_ledger(&mut report.diagnostics, &side.ledger);
    sort_diagnostics(&mut report.diagnostics);
    Ok(report)
}

/// Run the whole pipeline over the files named in `config`.
pub fn check(config: &RunConfig) -> Result<Report, DriverError> {
    config.validate()?;
    let side = SideInputs::load(config)?;
    let mut report = Report::default();
    for path in &config.inputs {
        let text = read(path)?;
        let name = path.display().to_string();
        check_source(config, &side, &name, Some(path), &text, &mut report)?;
    }
    apply_ledger(&mut report.diagnostics, &side.ledger);
    sort_diagnostics(&mut report.diagnostics);
    Ok(report)
}

#[derive(Serialize)]
struct DiagLine<'a> {
    rule: &'a str,
    check: &'a str,
    verdict: VerdictKind,
    relation: crate::guidelines::Relation,
    file: &'a str,
    line: u32,
    col: u32,
    message: &'a str,
    origin: String,
    suppressed_by: Option<&'a str>,
}

#[derive(Serialize)]
struct EvidenceLine<'a> {
    evidence: &'a str,
    file: &'a str,
    #[serde(flatten)]
    status: &'a RuleEvidence,
}

#[derive(Serialize)]
struct NoteLine<'a> {
    evidence: &'a str,
    file: &'a str,
    message: &'a str,
}

fn render_rule(out: &mut String, file: &str, rule: &str, ev: &RuleEvidence, format: Format) {
    match format {
        Format::Text => {
            let _ = match ev {
                RuleEvidence::Pass => writeln!(out, "evidence {file}: {rule} pass"),
                RuleEvidence::Open(locs) => {
                    let locs: Vec<String> = locs.iter().map(|l| format!("{}:{}", l.file, l.line)).collect();
                    writeln!(out, "evidence {file}: {rule} open {}", locs.join(" "))
                }
            };
        }
        Format::Ndjson => {
            let line = EvidenceLine { evidence: rule, file, status: ev };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
    }
}

fn render_note(out: &mut String, file: &str, kind: &str, message: &str, format: Format) {
    match format {
        Format::Text => {
            let _ = writeln!(out, "evidence {file}: {kind} {message}");
        }
        Format::Ndjson => {
            let line = NoteLine { evidence: kind, file, message };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
    }
}

/// Diagnostics, then the evidence block, then the CFG dump if requested.
pub fn render(report: &Report, format: Format) -> String {
    let mut out = String::new();
    for d in &report.diagnostics {
        match format {
            Format::Text => {
                let _ = write!(
                    out,
                    "{}:{}:{}: [{}][{}] {} (check: {}, origin: {}",
                    d.file,
                    d.span.line,
                    d.span.column,
                    d.rule_id,
                    d.verdict.kind,
                    d.message,
                    d.check_id,
                    d.origin.render()
                );
                if let Some(s) = &d.suppressed_by {
                    let _ = write!(out, ", suppressed_by: {s}");
                }
                out.push_str(")\n");
            }
            Format::Ndjson => {
                let line = DiagLine {
                    rule: &d.rule_id,
                    check: &d.check_id,
                    verdict: d.verdict.kind,
                    relation: d.verdict.relation,
                    file: &d.file,
                    line: d.span.line,
                    col: d.span.column,
                    message: &d.message,
                    origin: d.origin.render(),
                    suppressed_by: d.suppressed_by.as_deref(),
                };
                out.push_str(&serde_json::to_string(&line).expect("serializable"));
                out.push('\n');
            }
        }
    }
    for (file, ev) in &report.evidence {
        render_rule(&mut out, file, "R2.1", &ev.r2_1, format);
        render_rule(&mut out, file, "R14.3", &ev.r14_3, format);
        if let Some(p) = &ev.provenance {
            render_note(&mut out, file, "provenance", p, format);
        }
        for w in &ev.warnings {
            render_note(&mut out, file, "warning", w, format);
        }
    }
    if let Some(dump) = &report.cfg_dump {
        out.push_str(dump);
    }
    out
}
