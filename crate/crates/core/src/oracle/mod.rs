//! Fuel-bounded interpreter for MiniC, used as ground truth by the tests.
//!
//! Every execution of an executable statement costs one unit of fuel and is
//! appended to the trace; a control statement is recorded each time its
//! controlling expression is evaluated. Undefined behavior that the dialect
//! does not define stops the run with a runtime error. Calls to functions
//! with no body in the unit and no simulation stop the run as inconclusive.

mod interp;
mod libc;
pub mod memory;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::StmtId;
use crate::frontend::SourceSpan;
use crate::sema::{SymbolId, TypedUnit};

/// Native stack for one interpreter thread; nested C calls recurse in Rust.
const STACK_BYTES: usize = 256 << 20;
/// Deepest C call chain before a run stops.
pub const MAX_CALL_DEPTH: usize = 1000;
pub const DEFAULT_GRID: std::ops::RangeInclusive<i64> = -2..=2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeErrorKind {
    DivisionByZero,
    SignedOverflow,
    UninitializedRead,
    NullDeref,
    OobAccess,
    BadFree,
    UseAfterFree,
    InvalidShift,
    ConversionOverflow,
    LibraryDomain,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeErrorKind::DivisionByZero => "division-by-zero",
            RuntimeErrorKind::SignedOverflow => "signed-overflow",
            RuntimeErrorKind::UninitializedRead => "uninitialized-read",
            RuntimeErrorKind::NullDeref => "null-deref",
            RuntimeErrorKind::OobAccess => "oob-access",
            RuntimeErrorKind::BadFree => "bad-free",
            RuntimeErrorKind::UseAfterFree => "use-after-free",
            RuntimeErrorKind::InvalidShift => "invalid-shift",
            RuntimeErrorKind::ConversionOverflow => "conversion-overflow",
            RuntimeErrorKind::LibraryDomain => "library-domain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub stmt: Option<StmtId>,
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum Outcome {
    Terminated { code: i64 },
    FuelExhausted,
    RuntimeError(RuntimeError),
    /// A call to an unknown external function; the trace says nothing about
    /// what would have followed.
    Inconclusive { function: String, span: SourceSpan },
    Unsupported { message: String, span: SourceSpan },
    CallDepthExceeded,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Terminated { code } => write!(f, "terminated {code}"),
            Outcome::FuelExhausted => f.write_str("fuel-exhausted"),
            Outcome::RuntimeError(e) => write!(f, "runtime-error {} at {}: {}", e.kind, e.span, e.message),
            Outcome::Inconclusive { function, span } => write!(f, "inconclusive environment call '{function}' at {span}"),
            Outcome::Unsupported { message, span } => write!(f, "unsupported at {span}: {message}"),
            Outcome::CallDepthExceeded => write!(f, "call-depth-exceeded {MAX_CALL_DEPTH}"),
        }
    }
}

/// One store to a tracked scalar and whether it was read before being
/// overwritten or going out of scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreEvent {
    pub stmt: StmtId,
    pub sym: SymbolId,
    pub read_back: bool,
}

/// A heap block or stream still held when the program terminated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpenResource {
    pub kind: &'static str,
    pub site: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionTrace {
    pub executed: Vec<StmtId>,
    pub store_events: Vec<StoreEvent>,
    pub outcome: Outcome,
    /// Bytes written to stdout.
    #[serde(skip)]
    pub output: Vec<u8>,
    /// Resources not released at normal termination.
    pub open_resources: Vec<OpenResource>,
}

impl ExecutionTrace {
    /// `EXEC id` / `STORE id sym live|dead` / `OUTCOME ...` lines.
    pub fn dump(&self, unit: &TypedUnit) -> String {
        let mut out = String::new();
        for s in &self.executed {
            out.push_str(&format!("EXEC {s}\n"));
        }
        for e in &self.store_events {
            let state = if e.read_back { "live" } else { "dead" };
            out.push_str(&format!("STORE {} {} {}\n", e.stmt, unit.symbol(e.sym).name, state));
        }
        for r in &self.open_resources {
            out.push_str(&format!("OPEN {} {}\n", r.kind, r.site));
        }
        out.push_str(&format!("OUTCOME {}\n", self.outcome));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("no function named '{0}' is defined")]
    UnknownEntry(String),
    #[error("'{name}' takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("parameter {index} of '{name}' is not an integer")]
    NonIntegerParam { name: String, index: usize },
    #[error("fuel must be positive")]
    NoFuel,
    #[error("sweep supports at most 3 parameters, '{name}' has {count}")]
    TooManyParams { name: String, count: usize },
    #[error("interpreter thread failed: {0}")]
    Thread(String),
}

fn check_entry(unit: &TypedUnit, entry: &str, inputs: usize, fuel: u64) -> Result<(), RunError> {
    if fuel == 0 {
        return Err(RunError::NoFuel);
    }
    let Some(info) = unit.function_info(entry).filter(|_| unit.ast.function(entry).is_some()) else {
        return Err(RunError::UnknownEntry(entry.to_string()));
    };
    if info.params.len() != inputs {
        return Err(RunError::Arity { name: entry.to_string(), expected: info.params.len(), got: inputs });
    }
    for (i, p) in info.params.iter().enumerate() {
        if !unit.symbol(*p).ty.is_integer() {
            return Err(RunError::NonIntegerParam { name: entry.to_string(), index: i });
        }
    }
    Ok(())
}

fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("minicheck-oracle".into())
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, f)
            .map_err(|e| RunError::Thread(e.to_string()))?
            .join()
            .map_err(|_| RunError::Thread("interpreter panicked".into()))
    })
}

/// Execute `entry` with integer `inputs`, stopping after `fuel` statements.
pub fn run(unit: &TypedUnit, entry: &str, inputs: &[i64], fuel: u64) -> Result<ExecutionTrace, RunError> {
    check_entry(unit, entry, inputs.len(), fuel)?;
    on_big_stack(|| interp::execute(unit, entry, inputs, fuel))
}

/// Facts aggregated over a grid of inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepFacts {
    pub ever_executed: BTreeSet<StmtId>,
    pub witnessed_live_stores: BTreeSet<(StmtId, SymbolId)>,
    pub runs: Vec<(Vec<i64>, Outcome)>,
}

impl SweepFacts {
    pub fn absorb(&mut self, inputs: Vec<i64>, trace: &ExecutionTrace) {
        self.ever_executed.extend(trace.executed.iter().copied());
        self.witnessed_live_stores
            .extend(trace.store_events.iter().filter(|e| e.read_back).map(|e| (e.stmt, e.sym)));
        self.runs.push((inputs, trace.outcome.clone()));
    }
}

/// Run `entry` on every point of `grid`^arity and union the traces.
pub fn sweep(
    unit: &TypedUnit,
    entry: &str,
    grid: std::ops::RangeInclusive<i64>,
    fuel: u64,
) -> Result<SweepFacts, RunError> {
    let arity = unit.function_info(entry).map_or(0, |f| f.params.len());
    if arity > 3 {
        return Err(RunError::TooManyParams { name: entry.to_string(), count: arity });
    }
    check_entry(unit, entry, arity, fuel)?;
    let points: Vec<i64> = grid.collect();
    let mut inputs: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..arity {
        inputs = inputs
            .into_iter()
            .flat_map(|prefix| {
                points.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    on_big_stack(|| {
        let mut facts = SweepFacts::default();
        for args in inputs {
            let trace = interp::execute(unit, entry, &args, fuel);
            facts.absorb(args, &trace);
        }
        facts
    })
}

#[cfg(test)]
mod tests;
