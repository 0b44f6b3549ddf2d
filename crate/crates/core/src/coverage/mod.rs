//! Coverage evidence for R2.1 and R14.3: external line/branch counts merged
//! with static reachability.
//!
//! Coverage file records, one per line:
//!
//! ```text
//! S <file> <line> <count>
//! B <file> <line> <index> <count>
//! P <free text describing where the counts came from>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Branch indices
//! follow the CFG: `0` is the true edge and `1` the false edge of a two-way
//! branch; switch edges are numbered by case label in source order, with
//! the default edge (explicit or implicit) in its source position or last.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::effectless::same_file;
use crate::flow::{EdgeKind, FlowFacts, FunctionFacts};
use crate::frontend::ast::*;
use crate::frontend::{MacroOrigin, SourceSpan};
use crate::guidelines::{Diagnostic, Relation, Verdict, COVERAGE_R14_3, COVERAGE_R2_1};
use crate::sema::TypedUnit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("coverage line {line}: {message}")]
pub struct CoverageError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverageMap {
    pub stmt_counts: BTreeMap<(String, u32), u64>,
    pub branch_counts: BTreeMap<(String, u32, u32), u64>,
    pub provenance: Option<String>,
}

impl CoverageMap {
    pub fn add_stmt(&mut self, file: &str, line: u32, count: u64) {
        let c = self.stmt_counts.entry((file.to_string(), line)).or_insert(0);
        *c = c.saturating_add(count);
    }

    pub fn add_branch(&mut self, file: &str, line: u32, index: u32, count: u64) {
        let c = self.branch_counts.entry((file.to_string(), line, index)).or_insert(0);
        *c = c.saturating_add(count);
    }

    /// Sum of the counts of every record whose file names `file`.
    pub fn line_count(&self, file: &str, line: u32) -> Option<u64> {
        let mut total = None;
        for ((f, l), c) in &self.stmt_counts {
            if *l == line && same_file(f, file) {
                total = Some(total.unwrap_or(0u64).saturating_add(*c));
            }
        }
        total
    }

    pub fn branch_count(&self, file: &str, line: u32, index: u32) -> u64 {
        self.branch_counts
            .iter()
            .filter(|((f, l, i), _)| *l == line && *i == index && same_file(f, file))
            .fold(0u64, |a, (_, c)| a.saturating_add(*c))
    }

    pub fn is_empty(&self) -> bool {
        self.stmt_counts.is_empty() && self.branch_counts.is_empty()
    }
}

fn field<T: std::str::FromStr>(value: Option<&str>, what: &str, line: usize) -> Result<T, CoverageError> {
    let v = value.ok_or_else(|| CoverageError { line, message: format!("missing {what}") })?;
    if v.starts_with('-') && v[1..].chars().all(|c| c.is_ascii_digit()) && v.len() > 1 {
        return Err(CoverageError { line, message: format!("negative {what} '{v}'") });
    }
    v.parse().map_err(|_| CoverageError { line, message: format!("invalid {what} '{v}'") })
}

pub fn parse_coverage(text: &str) -> Result<CoverageMap, CoverageError> {
    let mut map = CoverageMap::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let tag = parts.next().unwrap();
        match tag {
            "P" => {
                let text = trimmed[1..].trim().to_string();
                map.provenance = Some(match map.provenance.take() {
                    Some(p) => format!("{p}; {text}"),
                    None => text,
                });
                continue;
            }
            "S" => {
                let file: String = field(parts.next(), "file", line)?;
                let l: u32 = field(parts.next(), "line number", line)?;
                let count: u64 = field(parts.next(), "count", line)?;
                if l == 0 {
                    return Err(CoverageError { line, message: "line numbers start at 1".into() });
                }
                map.add_stmt(&file, l, count);
            }
            "B" => {
                let file: String = field(parts.next(), "file", line)?;
                let l: u32 = field(parts.next(), "line number", line)?;
                let index: u32 = field(parts.next(), "branch index", line)?;
                let count: u64 = field(parts.next(), "count", line)?;
                if l == 0 {
                    return Err(CoverageError { line, message: "line numbers start at 1".into() });
                }
                map.add_branch(&file, l, index, count);
            }
            other => return Err(CoverageError { line, message: format!("unknown record type '{other}'") }),
        }
        if let Some(extra) = parts.next() {
            return Err(CoverageError { line, message: format!("unexpected field '{extra}'") });
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmtStatus {
    Covered,
    UncoveredStaticallyUnreachable,
    UncoveredUnknown,
}

impl fmt::Display for StmtStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StmtStatus::Covered => "covered",
            StmtStatus::UncoveredStaticallyUnreachable => "uncovered-statically-unreachable",
            StmtStatus::UncoveredUnknown => "uncovered-unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchStatus {
    BothTaken,
    OneSideNever,
    StaticallyConstant,
}

impl fmt::Display for BranchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchStatus::BothTaken => "both-taken",
            BranchStatus::OneSideNever => "one-side-never",
            BranchStatus::StaticallyConstant => "statically-constant",
        })
    }
}

/// Why a statement is statically unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unreachable {
    /// Cut off inside its function by control flow and constant conditions.
    InFunction,
    /// Its function is not reachable from any entry point.
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StmtEvidence {
    pub function: String,
    pub stmt: StmtId,
    pub file: String,
    pub line: u32,
    #[serde(skip)]
    pub span: SourceSpan,
    pub count: u64,
    pub unreachable: Option<Unreachable>,
    pub status: StmtStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchEvidence {
    pub function: String,
    pub stmt: StmtId,
    pub file: String,
    pub line: u32,
    #[serde(skip)]
    pub span: SourceSpan,
    pub edges: Vec<String>,
    pub counts: Vec<u64>,
    pub constant: Option<i128>,
    pub status: BranchStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "open")]
pub enum RuleEvidence {
    Pass,
    Open(Vec<Location>),
}

impl RuleEvidence {
    fn from_open(open: BTreeSet<Location>) -> Self {
        if open.is_empty() {
            RuleEvidence::Pass
        } else {
            RuleEvidence::Open(open.into_iter().collect())
        }
    }

    pub fn is_pass(&self) -> bool {
        *self == RuleEvidence::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvidenceReport {
    pub statements: Vec<StmtEvidence>,
    pub branches: Vec<BranchEvidence>,
    pub r2_1: RuleEvidence,
    pub r14_3: RuleEvidence,
    pub entry_points: Vec<String>,
    pub warnings: Vec<String>,
    pub provenance: Option<String>,
}

/// A covered statement that constant folding says cannot run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("internal soundness error: {file}:{line} is covered but statically unreachable in '{function}'")]
pub struct SoundnessError {
    pub function: String,
    pub file: String,
    pub line: u32,
}

/// Statements that count for coverage: executable, and not a declaration
/// without any runtime initialization.
fn counts_for_coverage(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Decl(d) => {
            !matches!(d.specs.storage, Some(StorageClass::Static | StorageClass::Extern | StorageClass::Typedef))
                && d.declarators.iter().any(|i| i.init.is_some())
        }
        _ => s.is_executable(),
    }
}

/// Line a statement is counted on. A control statement stands for its
/// controlling expression.
fn stmt_line(s: &Stmt) -> SourceSpan {
    match &s.kind {
        StmtKind::If { cond, .. }
        | StmtKind::While { cond, .. }
        | StmtKind::DoWhile { cond, .. }
        | StmtKind::Switch { cond, .. }
        | StmtKind::For { cond: Some(cond), .. } => cond.span,
        _ => s.span,
    }
}

/// Invariant conditions that R14.3 itself permits: loops made infinite
/// with a true constant and `do { } while (0)`.
fn exempt_constant(s: &Stmt, value: i128) -> bool {
    match &s.kind {
        StmtKind::While { .. } | StmtKind::For { .. } => value != 0,
        StmtKind::DoWhile { .. } => value == 0,
        _ => false,
    }
}

fn entry_points(unit: &TypedUnit, flow: &FlowFacts<'_>, annotations: &BTreeSet<String>) -> BTreeSet<String> {
    let defined: BTreeSet<&str> = unit.ast.functions().map(|f| f.name()).collect();
    let mut roots: BTreeSet<String> = BTreeSet::new();
    if defined.contains("main") {
        roots.insert("main".into());
    } else {
        // A unit without main is a library: every external function may be
        // called from elsewhere.
        for f in unit.ast.functions() {
            if f.specs.storage != Some(StorageClass::Static) {
                roots.insert(f.name().to_string());
            }
        }
    }
    roots.extend(annotations.iter().filter(|a| defined.contains(a.as_str())).cloned());
    roots.extend(flow.call_graph.address_taken.iter().filter(|a| defined.contains(a.as_str())).cloned());
    roots
}

/// Branch edges leaving a condition, true before false; switch edges keep
/// their CFG order.
fn branch_edges(facts: &FunctionFacts<'_>, stmt: StmtId) -> Vec<EdgeKind> {
    let Some(b) = facts.cfg.block_of(stmt) else { return Vec::new() };
    let mut edges: Vec<EdgeKind> = facts
        .cfg
        .successors(b)
        .filter(|e| matches!(e.kind, EdgeKind::BranchTrue | EdgeKind::BranchFalse | EdgeKind::SwitchCase(_)))
        .map(|e| e.kind)
        .collect();
    edges.sort_by_key(|k| match k {
        EdgeKind::BranchTrue => 0,
        EdgeKind::BranchFalse => 1,
        _ => 2,
    });
    edges
}

/// Merge coverage with static reachability. Annotated functions are extra
/// entry points.
pub fn merge_evidence(
    unit: &TypedUnit,
    flow: &FlowFacts<'_>,
    coverage: &CoverageMap,
    annotations: &BTreeSet<String>,
) -> Result<EvidenceReport, SoundnessError> {
    let mut warnings = Vec::new();
    let defined: BTreeSet<&str> = unit.ast.functions().map(|f| f.name()).collect();
    for a in annotations {
        if !defined.contains(a.as_str()) {
            warnings.push(format!("annotated function '{a}' is not defined in this unit"));
        }
    }
    let roots = entry_points(unit, flow, annotations);
    let live_functions = flow.call_graph.reachable_from(roots.iter().map(|s| s.as_str()));

    let mut statements = Vec::new();
    let mut branches = Vec::new();
    for f in unit.ast.functions() {
        let name = f.name().to_string();
        let Some(facts) = flow.functions.get(&name) else { continue };
        let fn_live = live_functions.contains(&name);
        let mut ids: Vec<StmtId> = facts.cfg.all_stmts().collect();
        ids.sort();
        for id in ids {
            let s = facts.stmts[&id];
            if !counts_for_coverage(s) {
                continue;
            }
            let span = stmt_line(s);
            let file = unit.file_name(span).to_string();
            let unreachable = if facts.reach.unreachable.contains(&id) {
                Some(Unreachable::InFunction)
            } else if !fn_live {
                Some(Unreachable::Function)
            } else {
                None
            };
            statements.push(StmtEvidence {
                function: name.clone(),
                stmt: id,
                file,
                line: span.line,
                span,
                count: 0,
                unreachable,
                status: StmtStatus::UncoveredUnknown,
            });
            if s.is_condition() {
                let edges = branch_edges(facts, id);
                if edges.len() < 2 {
                    continue;
                }
                let constant = facts.reach.constant_conditions.get(&id).copied();
                if constant.is_some_and(|v| exempt_constant(s, v)) {
                    continue;
                }
                let file = unit.file_name(span).to_string();
                let counts: Vec<u64> = (0..edges.len() as u32).map(|i| coverage.branch_count(&file, span.line, i)).collect();
                let status = if constant.is_some() {
                    BranchStatus::StaticallyConstant
                } else if counts.iter().all(|&c| c > 0) {
                    BranchStatus::BothTaken
                } else {
                    BranchStatus::OneSideNever
                };
                branches.push(BranchEvidence {
                    function: name.clone(),
                    stmt: id,
                    file,
                    line: span.line,
                    span,
                    edges: edges.iter().map(|k| k.to_string()).collect(),
                    counts,
                    constant,
                    status,
                });
            }
        }
    }

    // A line count covers the line's statements that can run; it only
    // contradicts folding when every statement on the line is cut off.
    let mut by_line: BTreeMap<(String, u32), Vec<usize>> = BTreeMap::new();
    for (i, s) in statements.iter().enumerate() {
        by_line.entry((s.file.clone(), s.line)).or_default().push(i);
    }
    for ((file, line), idx) in &by_line {
        let count = coverage.line_count(file, *line).unwrap_or(0);
        for &i in idx {
            statements[i].count = count;
        }
        if count == 0 {
            for &i in idx {
                statements[i].status = match statements[i].unreachable {
                    Some(_) => StmtStatus::UncoveredStaticallyUnreachable,
                    None => StmtStatus::UncoveredUnknown,
                };
            }
            continue;
        }
        let folded = |i: &usize| statements[*i].unreachable == Some(Unreachable::InFunction);
        if idx.iter().all(folded) {
            let s = &statements[idx[0]];
            return Err(SoundnessError { function: s.function.clone(), file: file.clone(), line: *line });
        }
        for &i in idx {
            match statements[i].unreachable {
                Some(Unreachable::InFunction) => statements[i].status = StmtStatus::UncoveredStaticallyUnreachable,
                Some(Unreachable::Function) => {
                    statements[i].status = StmtStatus::Covered;
                    warnings.push(format!(
                        "{file}:{line}: '{}' executed but not reachable from any entry point; consider annotating it",
                        statements[i].function
                    ));
                }
                None => statements[i].status = StmtStatus::Covered,
            }
        }
    }

    let stmt_lines: BTreeSet<(String, u32)> = by_line.keys().cloned().collect();
    // Records for files outside this unit belong to other units.
    let unit_files: Vec<&str> = unit.pre.sources.files().map(|(_, f)| f.name.as_str()).collect();
    let in_unit = |f: &str| unit_files.iter().any(|u| same_file(f, u));
    for (f, l) in coverage.stmt_counts.keys().filter(|(f, _)| in_unit(f)) {
        if !stmt_lines.iter().any(|(sf, sl)| sl == l && same_file(f, sf)) {
            warnings.push(format!("{f}:{l}: coverage record for a line with no statement"));
        }
    }
    for (f, l, i) in coverage.branch_counts.keys().filter(|(f, _, _)| in_unit(f)) {
        let known = branches.iter().any(|b| b.line == *l && same_file(f, &b.file) && (*i as usize) < b.edges.len());
        if !known {
            warnings.push(format!("{f}:{l}: branch record {i} matches no branch"));
        }
    }
    warnings.sort();
    warnings.dedup();

    let r2_1 = RuleEvidence::from_open(
        statements
            .iter()
            .filter(|s| s.status != StmtStatus::Covered)
            .map(|s| Location { file: s.file.clone(), line: s.line })
            .collect(),
    );
    let r14_3 = RuleEvidence::from_open(
        branches
            .iter()
            .filter(|b| b.status != BranchStatus::BothTaken)
            .map(|b| Location { file: b.file.clone(), line: b.line })
            .collect(),
    );
    Ok(EvidenceReport {
        statements,
        branches,
        r2_1,
        r14_3,
        entry_points: roots.into_iter().collect(),
        warnings,
        provenance: coverage.provenance.clone(),
    })
}

/// Diagnostics for R2.1 and R14.3. Static findings are always produced;
/// findings that only reflect missing evidence need `with_coverage`.
pub fn evidence_diagnostics(
    unit: &TypedUnit,
    report: &EvidenceReport,
    with_coverage: bool,
    enabled: &dyn Fn(&str) -> bool,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |rule: &str, check: &str, verdict: Verdict, span: SourceSpan, msg: String| {
        Diagnostic::new(unit, rule, check, verdict, span, MacroOrigin::default(), msg)
    };
    if enabled(COVERAGE_R2_1) {
        let mut reported_functions = BTreeSet::new();
        for s in &report.statements {
            match (s.unreachable, s.status) {
                (Some(Unreachable::InFunction), _) => out.push(diag(
                    "R2.1",
                    COVERAGE_R2_1,
                    Verdict::definite(Relation::UnderApprox),
                    s.span,
                    "statement is unreachable".into(),
                )),
                (Some(Unreachable::Function), StmtStatus::UncoveredStaticallyUnreachable) => {
                    if reported_functions.insert(s.function.clone()) {
                        let span = unit.ast.function(&s.function).map_or(s.span, |f| f.span);
                        out.push(diag(
                            "R2.1",
                            COVERAGE_R2_1,
                            Verdict::possible(Relation::OverApprox),
                            span,
                            format!("function '{}' is not reachable from any entry point", s.function),
                        ));
                    }
                }
                (None, StmtStatus::UncoveredUnknown) if with_coverage => out.push(diag(
                    "R2.1",
                    COVERAGE_R2_1,
                    Verdict::possible(Relation::OverApprox),
                    s.span,
                    "no coverage evidence that this statement is reachable".into(),
                )),
                _ => {}
            }
        }
    }
    if enabled(COVERAGE_R14_3) {
        for b in &report.branches {
            match b.status {
                BranchStatus::StaticallyConstant => out.push(diag(
                    "R14.3",
                    COVERAGE_R14_3,
                    Verdict::definite(Relation::UnderApprox),
                    b.span,
                    format!("controlling expression is invariant (always {})", b.constant.unwrap_or_default()),
                )),
                BranchStatus::OneSideNever if with_coverage => {
                    let never: Vec<&str> = b
                        .edges
                        .iter()
                        .zip(&b.counts)
                        .filter(|(_, &c)| c == 0)
                        .map(|(e, _)| e.as_str())
                        .collect();
                    out.push(diag(
                        "R14.3",
                        COVERAGE_R14_3,
                        Verdict::possible(Relation::OverApprox),
                        b.span,
                        format!("controlling expression may be invariant: never took {}", never.join(", ")),
                    ));
                }
                _ => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
