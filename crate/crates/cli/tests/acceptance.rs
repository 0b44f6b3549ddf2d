//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use minicheck::coverage::{parse_coverage, Location, RuleEvidence};
use minicheck::driver::{self, render, Format, Report, RunConfig, SideInputs};
use minicheck::effectless::Mode;
use minicheck::flow::analyze;
use minicheck::guidelines::{
    Diagnostic, Profile, VerdictKind, COVERAGE_R14_3, DETERMINATE_FOR, EFFECTLESS, FILE_DEREF, READONLY_PARAMS,
};
use minicheck::oracle::{sweep, DEFAULT_GRID};
use minicheck::sema::compile_str;

use common::{corpus_dir, corpus_files, generate};

const JUSTIFIED_STRICT_FINDINGS: usize = 5;
const GENERATED_PROGRAMS: u64 = 120;
const ORACLE_FUEL: u64 = 10_000;

type Outcome = Result<String, String>;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minicheck"))
}

fn corpus(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

fn check_file(path: &Path, profile: Profile, effectless: Mode) -> Report {
    let config = RunConfig { inputs: vec![path.to_path_buf()], profile, effectless, ..RunConfig::default() };
    driver::check(&config).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn count(report: &Report, check: &str, kind: Option<VerdictKind>) -> usize {
    report
        .diagnostics
        .iter()
        .filter(|d| d.check_id == check && d.suppressed_by.is_none() && kind.is_none_or(|k| d.verdict.kind == k))
        .count()
}

fn expect(what: &str, got: usize, want: usize, failures: &mut Vec<String>) {
    if got != want {
        failures.push(format!("{what}: got {got}, want {want}"));
    }
}

// 1. Registry against the hand-transcribed table.

struct Row {
    rule: String,
    category: &'static str,
    causes: BTreeSet<&'static str>,
    grades: [usize; 3],
    flags: BTreeSet<&'static str>,
}

fn fixture_rows() -> Vec<Row> {
    let text = std::fs::read_to_string(corpus("undecidable_rules.txt")).expect("undecidable_rules.txt");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            assert_eq!(f.len(), 7, "bad fixture row {l}");
            let category = match f[1] {
                "M" => "mandatory",
                "R" => "required",
                "A" => "advisory",
                c => panic!("category {c}"),
            };
            let causes = f[2]
                .chars()
                .filter(|c| *c != '-')
                .map(|c| match c {
                    'F' => "flow",
                    'N' => "numeric",
                    'P' => "pointee",
                    'S' => "side-effects",
                    c => panic!("cause {c}"),
                })
                .collect();
            let g = |s: &str| s.parse::<usize>().expect("grade");
            let flags = match f[6] {
                "-" => BTreeSet::new(),
                s => s
                    .split(',')
                    .map(|x| match x {
                        "cov" => "cov",
                        "np" => "np",
                        "def" => "def",
                        x => panic!("flag {x}"),
                    })
                    .collect(),
            };
            Row { rule: f[0].to_string(), category, causes, grades: [g(f[3]), g(f[4]), g(f[5])], flags }
        })
        .collect()
}

fn registry_fidelity() -> Outcome {
    let out = bin().arg("registry").output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("registry exited with {}", out.status));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    let want_header = ["rule", "category", "causes", "fins", "type", "other", "cov", "np", "def", "check"];
    if header != want_header {
        return Err(format!("header {header:?}"));
    }
    let grade = |s: &str| if s == "-" { Some(0) } else if s.chars().all(|c| c == 'o') { Some(s.len()) } else { None };
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 10 {
            return Err(format!("malformed row {l:?}"));
        }
        rows.push(f);
    }
    let fixture = fixture_rows();
    expect("rows", rows.len(), 37, &mut failures);
    expect("fixture rows", fixture.len(), 37, &mut failures);
    for (cat, want) in [("mandatory", 11), ("required", 22), ("advisory", 4)] {
        expect(cat, rows.iter().filter(|r| r[1] == cat).count(), want, &mut failures);
    }
    for (r, want) in rows.iter().zip(&fixture) {
        let causes: BTreeSet<&str> = if r[2] == "-" { BTreeSet::new() } else { r[2].split(',').collect() };
        let grades = [grade(r[3]), grade(r[4]), grade(r[5])];
        let flags: BTreeSet<&str> =
            [("cov", r[6]), ("np", r[7]), ("def", r[8])].into_iter().filter(|(_, v)| *v == "x").map(|(k, _)| k).collect();
        if r[0] != want.rule
            || r[1] != want.category
            || causes != want.causes
            || grades != want.grades.map(Some)
            || flags != want.flags
        {
            failures.push(format!("row {} differs from fixture {}", r.join(" "), want.rule));
        }
    }
    if failures.is_empty() {
        Ok("37 rows, 11/22/4, causes, grades and flags match".into())
    } else {
        Err(failures.join("; "))
    }
}

// 2. Golden corpus of listings.

fn golden_corpus() -> Outcome {
    let mut failures = Vec::new();
    let strict = |n: &str| check_file(&corpus(n), Profile::Strict, Mode::Directive);

    let r = strict("r22_5.c");
    expect("r22_5 file-deref definite", count(&r, FILE_DEREF, Some(VerdictKind::Definite)), 1, &mut failures);
    expect("r22_5 total", r.diagnostics.len(), 1, &mut failures);

    for n in ["r17_8_ex1.c", "r17_8_ex2.c"] {
        let r = strict(n);
        expect(n, count(&r, READONLY_PARAMS, Some(VerdictKind::Definite)), 1, &mut failures);
    }

    let r = strict("transmit_octet.c");
    expect("transmit_octet effectless", count(&r, EFFECTLESS, None), 0, &mut failures);
    expect("transmit_octet determinate-for", count(&r, DETERMINATE_FOR, None), 0, &mut failures);

    let justified = corpus("justified_constructs.c");
    let r = check_file(&justified, Profile::Strict, Mode::Directive);
    expect("justified directive", count(&r, EFFECTLESS, None), 0, &mut failures);
    let r = check_file(&justified, Profile::Strict, Mode::StrictR22);
    expect("justified strict-r2-2", count(&r, EFFECTLESS, None), JUSTIFIED_STRICT_FINDINGS, &mut failures);

    let neutral = corpus("neutral_operands.c");
    let src = std::fs::read_to_string(&neutral).map_err(|e| e.to_string())?;
    let r = check_file(&neutral, Profile::Strict, Mode::Directive);
    let mut flagged: Vec<&str> = r
        .diagnostics
        .iter()
        .filter(|d| d.check_id == EFFECTLESS && d.suppressed_by.is_none())
        .map(|d| src.lines().nth(d.span.line as usize - 1).unwrap_or("").split("//").next().unwrap_or("").trim())
        .collect();
    flagged.sort();
    if flagged != ["x * 1;", "x + 0;"] {
        failures.push(format!("neutral directive flagged {flagged:?}"));
    }

    if failures.is_empty() {
        Ok(format!("7 listings exact, justified strict-r2-2 = {JUSTIFIED_STRICT_FINDINGS}"))
    } else {
        Err(failures.join("; "))
    }
}

// 3. Static facts never contradict an observed execution.

fn oracle_soundness() -> Outcome {
    let mut violations = Vec::new();
    let mut runs = 0usize;
    let mut executed = 0usize;
    for seed in 0..GENERATED_PROGRAMS {
        let g = generate(seed);
        if g.params > 3 || g.statements > 40 {
            return Err(format!("seed {seed}: generator out of bounds"));
        }
        let unit = compile_str(&g.source).map_err(|e| format!("seed {seed}: {}\n{}", e.message(), g.source))?;
        let flow = analyze(&unit).map_err(|e| format!("seed {seed}: {}", e.message))?;
        let facts = sweep(&unit, g.entry, DEFAULT_GRID, ORACLE_FUEL).map_err(|e| format!("seed {seed}: {e}"))?;
        runs += facts.runs.len();
        executed += facts.ever_executed.len();
        for f in flow.functions.values() {
            for s in facts.ever_executed.intersection(&f.reach.unreachable) {
                violations.push(format!("seed {seed}: executed unreachable {s}"));
            }
            for (s, sym) in &facts.witnessed_live_stores {
                if f.liveness.dead_stores.contains(&(*s, *sym)) {
                    violations.push(format!("seed {seed}: read store {s} reported dead"));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("{GENERATED_PROGRAMS} programs, {runs} runs, {executed} distinct statements executed, 0 violations"))
    } else {
        Err(violations.join("; "))
    }
}

// 4. Coverage evidence.

fn evidence_for(name: &str, source: &str, coverage: &str) -> Report {
    let side = SideInputs { coverage: Some(parse_coverage(coverage).expect("coverage")), ..SideInputs::default() };
    let config = RunConfig { inputs: vec![name.into()], ..RunConfig::default() };
    driver::check_sources(&config, &side, &[(name.to_string(), source.to_string())]).expect("check")
}

fn coverage_evidence() -> Outcome {
    let src = std::fs::read_to_string(corpus("classify.c")).map_err(|e| e.to_string())?;
    let cov = std::fs::read_to_string(corpus("classify.cov")).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();

    let full = render(&evidence_for("classify.c", &src, &cov), Format::Text);
    let want = "evidence classify.c: R2.1 pass\nevidence classify.c: R14.3 pass\nevidence classify.c: provenance unit tests\n";
    if full != want {
        failures.push(format!("full coverage report {full:?}"));
    }

    let s_records: Vec<&str> = cov.lines().filter(|l| l.starts_with("S ")).collect();
    for removed in &s_records {
        let line: u32 = removed.split_whitespace().nth(2).and_then(|n| n.parse().ok()).expect("S record line");
        let trimmed: String = cov.lines().filter(|l| l != removed).map(|l| format!("{l}\n")).collect();
        let r = evidence_for("classify.c", &src, &trimmed);
        let ev = &r.evidence[0].1;
        let want = RuleEvidence::Open(vec![Location { file: "classify.c".into(), line }]);
        if ev.r2_1 != want {
            failures.push(format!("without '{removed}': r2_1 = {:?}", ev.r2_1));
        }
    }

    let if_zero = std::fs::read_to_string(corpus("if_zero.c")).map_err(|e| e.to_string())?;
    let covers = ["", "S if_zero.c 3 1\nS if_zero.c 6 1\n", "S if_zero.c 3 4\nS if_zero.c 6 4\nB if_zero.c 3 0 0\nB if_zero.c 3 1 4\n"];
    for c in covers {
        let side = SideInputs { coverage: Some(parse_coverage(c).expect("coverage")), ..SideInputs::default() };
        for side in [side, SideInputs::default()] {
            let config = RunConfig { inputs: vec!["if_zero.c".into()], ..RunConfig::default() };
            let r = driver::check_sources(&config, &side, &[("if_zero.c".into(), if_zero.clone())]).expect("check");
            let hits: Vec<u32> = r
                .diagnostics
                .iter()
                .filter(|d| d.check_id == COVERAGE_R14_3 && d.verdict.kind == VerdictKind::Definite)
                .map(|d| d.span.line)
                .collect();
            if hits != [3] {
                failures.push(format!("if_zero under {c:?}: definite R14.3 at {hits:?}"));
            }
        }
    }

    // A record claiming the constant-false body ran contradicts the static facts.
    let bogus = SideInputs { coverage: Some(parse_coverage("S if_zero.c 4 1\n").expect("coverage")), ..SideInputs::default() };
    let config = RunConfig { inputs: vec!["if_zero.c".into()], ..RunConfig::default() };
    if driver::check_sources(&config, &bogus, &[("if_zero.c".into(), if_zero.clone())]).is_ok() {
        failures.push("coverage of the if (0) body was accepted".into());
    }

    if failures.is_empty() {
        Ok(format!("full coverage passes, {} single-record deletions open exactly one line, if (0) definite", s_records.len()))
    } else {
        Err(failures.join("; "))
    }
}

// 5. Strict contains heuristic; strict-r2-2 contains directive.

type Key = (String, u32, u32, String);

fn keys(r: &Report, pred: impl Fn(&Diagnostic) -> bool) -> BTreeSet<Key> {
    r.diagnostics
        .iter()
        .filter(|d| pred(d))
        .map(|d| (d.file.clone(), d.span.line, d.span.column, d.check_id.clone()))
        .collect()
}

fn profile_containment() -> Outcome {
    let mut failures = Vec::new();
    let files = corpus_files();
    for f in &files {
        let strict = check_file(f, Profile::Strict, Mode::Directive);
        let heur = check_file(f, Profile::Heuristic, Mode::Directive);
        let definite = keys(&heur, |d| d.verdict.kind == VerdictKind::Definite);
        let all_strict = keys(&strict, |_| true);
        for k in definite.difference(&all_strict) {
            failures.push(format!("heuristic-only definite {k:?}"));
        }
        let is_eff = |d: &Diagnostic| d.check_id == EFFECTLESS;
        let directive = keys(&strict, is_eff);
        let strict22 = keys(&check_file(f, Profile::Strict, Mode::StrictR22), is_eff);
        for k in directive.difference(&strict22) {
            failures.push(format!("directive-only effectless {k:?}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} corpus files, both containments hold", files.len()))
    } else {
        Err(failures.join("; "))
    }
}

// 6. Byte-identical ndjson across runs.

fn ndjson_digest() -> Result<String, String> {
    let out = bin()
        .arg("check")
        .args(["--format", "ndjson"])
        .args(corpus_files())
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0..=2) => {}
        c => return Err(format!("check exited with {c:?}: {}", String::from_utf8_lossy(&out.stderr))),
    }
    if out.stdout.is_empty() {
        return Err("empty output".into());
    }
    Ok(format!("{:x}", Sha256::digest(&out.stdout)))
}

fn determinism() -> Outcome {
    let a = ndjson_digest()?;
    let b = ndjson_digest()?;
    if a == b {
        Ok(format!("sha256 {}", &a[..16]))
    } else {
        Err(format!("{a} != {b}"))
    }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 6] = [
        ("registry fidelity", Duration::from_secs(1), registry_fidelity),
        ("golden corpus", Duration::from_secs(5), golden_corpus),
        ("oracle soundness", Duration::from_secs(60), oracle_soundness),
        ("coverage evidence", Duration::from_secs(5), coverage_evidence),
        ("profile containment", Duration::from_secs(10), profile_containment),
        ("determinism", Duration::from_secs(10), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("acceptance {}: {name}: PASS ({detail}; {took:.2?} < {limit:?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {}: {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
