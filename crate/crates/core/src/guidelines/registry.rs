//! The undecidable MISRA C:2012 rules with their undecidability causes and
//! available approximations.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Mandatory,
    Required,
    Advisory,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Mandatory => "mandatory",
            Category::Required => "required",
            Category::Advisory => "advisory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    Flow,
    Numeric,
    Pointee,
    SideEffects,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cause::Flow => "flow",
            Cause::Numeric => "numeric",
            Cause::Pointee => "pointee",
            Cause::SideEffects => "side-effects",
        })
    }
}

/// How easy it is to live with an approximation: one circle means
/// occasional troublesome violations, three means fixing the code is
/// straightforward and deviating is never advisable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grade {
    None,
    One,
    Two,
    Three,
}

impl Grade {
    pub fn circles(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::None => f.write_str("-"),
            g => f.write_str(&"o".repeat(g.circles())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Approximations {
    pub flow_insensitive: Grade,
    pub type_based: Grade,
    pub other: Grade,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuidelineInfo {
    pub id: &'static str,
    pub category: Category,
    pub causes: &'static [Cause],
    pub approx: Approximations,
    pub needs_coverage: bool,
    pub not_provable: bool,
    pub definition_issues: bool,
    pub implemented_check: Option<&'static str>,
}

impl GuidelineInfo {
    pub fn has_cause(&self, c: Cause) -> bool {
        self.causes.contains(&c)
    }
}

use Category::{Advisory as A, Mandatory as M, Required as R};
use Cause::{Flow as F, Numeric as N, Pointee as P, SideEffects as S};
use Grade::{None as Z, One as G1, Two as G2, Three as G3};

const fn ap(flow_insensitive: Grade, type_based: Grade, other: Grade) -> Approximations {
    Approximations { flow_insensitive, type_based, other }
}

const NONE: Approximations = ap(Z, Z, Z);

#[allow(clippy::too_many_arguments)]
const fn row(
    id: &'static str,
    category: Category,
    causes: &'static [Cause],
    approx: Approximations,
    needs_coverage: bool,
    not_provable: bool,
    definition_issues: bool,
    implemented_check: Option<&'static str>,
) -> GuidelineInfo {
    GuidelineInfo { id, category, causes, approx, needs_coverage, not_provable, definition_issues, implemented_check }
}

static REGISTRY: [GuidelineInfo; 37] = [
    row("R1.2", A, &[], NONE, false, false, true, None),
    row("R1.3", R, &[F, N, P, S], NONE, false, false, false, None),
    row("R2.1", R, &[F], NONE, true, false, false, Some("coverage-r2-1")),
    row("R2.2", R, &[F], NONE, false, true, true, Some("effectless")),
    row("R8.13", A, &[F], ap(Z, G3, Z), false, false, false, Some("const-candidates-r8-13")),
    row("R9.1", M, &[F, P], ap(Z, Z, G1), false, false, false, Some("init-at-decl-r9-1")),
    row("R12.2", R, &[F, N], NONE, false, false, false, None),
    row("R13.1", R, &[F, S], ap(G1, Z, G3), false, false, false, None),
    row("R13.2", R, &[F, P, S], ap(Z, Z, G1), false, false, true, None),
    row("R13.5", R, &[F, S], ap(G1, Z, G3), false, false, false, None),
    row("R14.1", R, &[F, N], ap(Z, Z, G1), false, false, false, Some("determinate-for-r14-1-2")),
    row("R14.2", R, &[F, N, P], ap(Z, Z, G1), false, false, false, Some("determinate-for-r14-1-2")),
    row("R14.3", R, &[F], NONE, true, false, false, Some("coverage-r14-3")),
    row("R17.2", R, &[F, P], ap(Z, G1, Z), false, false, false, Some("no-recursion-r17-2")),
    row("R17.5", A, &[F, P], NONE, false, false, false, None),
    row("R17.8", A, &[F, P], ap(Z, G3, Z), false, false, false, Some("readonly-params-r17-8")),
    row("R18.1", R, &[F, N, P], NONE, false, false, false, None),
    row("R18.2", R, &[F, P], ap(G1, Z, Z), false, false, false, None),
    row("R18.3", R, &[F, P], ap(G1, Z, Z), false, false, false, None),
    row("R18.6", R, &[F, P], ap(Z, Z, G1), false, false, false, None),
    row("R19.1", M, &[F, P], ap(G1, Z, Z), false, false, false, None),
    row("R21.13", M, &[F, N], ap(Z, G2, Z), false, false, false, Some("eof-domain-r21-13")),
    row("R21.14", R, &[F, P], ap(Z, G2, Z), false, false, false, Some("cstring-r21-14-19")),
    row("R21.17", M, &[F, N, P], NONE, false, false, false, None),
    row("R21.18", M, &[F, N, P], NONE, false, false, false, None),
    row("R21.19", M, &[F, P], ap(Z, G2, Z), false, false, false, Some("cstring-r21-14-19")),
    row("R21.20", M, &[F, P], NONE, false, false, false, None),
    row("R22.1", R, &[F, P], ap(Z, Z, G1), false, false, false, Some("stream-ownership-r22-1")),
    row("R22.2", M, &[F, P], ap(Z, Z, G1), false, false, false, None),
    row("R22.3", R, &[F], NONE, false, false, true, None),
    row("R22.4", M, &[F, P], ap(Z, G2, Z), false, false, false, None),
    row("R22.5", M, &[F], ap(G2, Z, Z), false, false, false, Some("file-deref-r22-5")),
    row("R22.6", M, &[F], ap(Z, Z, G1), false, false, false, None),
    row("R22.7", R, &[F], ap(Z, G2, Z), false, false, false, None),
    row("R22.8", R, &[F], ap(Z, Z, G2), false, false, false, Some("errno-protocol-r22-8-9-10")),
    row("R22.9", R, &[F], ap(Z, Z, G2), false, false, false, Some("errno-protocol-r22-8-9-10")),
    row("R22.10", R, &[F], ap(Z, Z, G2), false, false, false, Some("errno-protocol-r22-8-9-10")),
];

/// All undecidable rules, in table order.
pub fn registry() -> &'static [GuidelineInfo] {
    &REGISTRY
}

pub fn lookup(id: &str) -> Option<&'static GuidelineInfo> {
    REGISTRY.iter().find(|g| g.id == id)
}

/// Aligned text table, one row per rule.
pub fn render_registry() -> String {
    let mut out = format!(
        "{:<7} {:<9} {:<33} {:<5} {:<5} {:<5} {:<3} {:<3} {:<3} {}\n",
        "rule", "category", "causes", "fins", "type", "other", "cov", "np", "def", "check"
    );
    let flag = |b: bool| if b { "x" } else { "-" };
    for g in registry() {
        let causes: Vec<String> = g.causes.iter().map(|c| c.to_string()).collect();
        let causes = if causes.is_empty() { "-".to_string() } else { causes.join(",") };
        out.push_str(&format!(
            "{:<7} {:<9} {:<33} {:<5} {:<5} {:<5} {:<3} {:<3} {:<3} {}\n",
            g.id,
            g.category.to_string(),
            causes,
            g.approx.flow_insensitive.to_string(),
            g.approx.type_based.to_string(),
            g.approx.other.to_string(),
            flag(g.needs_coverage),
            flag(g.not_provable),
            flag(g.definition_issues),
            g.implemented_check.unwrap_or("-"),
        ));
    }
    out
}
