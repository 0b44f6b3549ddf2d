//! Shared helpers for the integration tests: corpus paths and a seeded
//! generator of small MiniC programs.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.c` file in the corpus, sorted by name.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    v.sort();
    v
}

pub struct Generated {
    pub source: String,
    pub entry: &'static str,
    pub params: usize,
    pub statements: usize,
}

const MAX_STATEMENTS: usize = 40;

struct Gen {
    rng: ChaCha8Rng,
    params: Vec<&'static str>,
    loops: usize,
    budget: usize,
    uses_label: bool,
    out: String,
}

impl Gen {
    fn var(&mut self) -> &'static str {
        ["x", "y", "z"][self.rng.gen_range(0..3)]
    }

    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 => self.var().to_string(),
            4..=6 => self.params[self.rng.gen_range(0..self.params.len())].to_string(),
            _ => self.rng.gen_range(0..5).to_string(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.atom();
        }
        let l = self.expr(depth - 1);
        let r = self.expr(depth - 1);
        match self.rng.gen_range(0..12) {
            0 => format!("({l} + {r})"),
            1 => format!("({l} - {r})"),
            2 => format!("({l} * {r})"),
            3 => format!("({l} / ({r} | 1))"),
            4 => format!("({l} < {r})"),
            5 => format!("({l} == {r})"),
            6 => format!("({l} && {r})"),
            7 => format!("({l} || {r})"),
            8 => format!("({l} > {r} ? {l} : {r})"),
            9 => format!("step({l})"),
            10 => format!("({l} & 7)"),
            _ => format!("!{l}"),
        }
    }

    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn block(&mut self, indent: usize, depth: u32) {
        let n = self.rng.gen_range(1..=4);
        for _ in 0..n {
            if self.budget == 0 {
                return;
            }
            self.stmt(indent, depth);
        }
    }

    fn stmt(&mut self, indent: usize, depth: u32) {
        self.budget -= 1;
        let nested = depth > 0 && self.budget > 2;
        let choice = if nested { self.rng.gen_range(0..14) } else { self.rng.gen_range(0..4) };
        match choice {
            0..=2 => {
                let v = self.var();
                let e = self.expr(2);
                self.line(indent, &format!("{v} = {e};"));
            }
            3 => {
                let v = self.var();
                let op = ["+=", "-=", "*="][self.rng.gen_range(0..3)];
                let e = self.atom();
                self.line(indent, &format!("{v} {op} {e};"));
            }
            4 | 5 => {
                let c = self.expr(2);
                self.line(indent, &format!("if ({c}) {{"));
                self.block(indent + 1, depth - 1);
                if self.rng.gen_bool(0.5) && self.budget > 0 {
                    self.line(indent, "} else {");
                    self.block(indent + 1, depth - 1);
                }
                self.line(indent, "}");
            }
            6 | 7 => {
                let i = format!("i{}", self.loops);
                self.loops += 1;
                let bound = if self.rng.gen_bool(0.5) { self.rng.gen_range(0..4).to_string() } else { format!("({} & 3)", self.atom()) };
                self.line(indent, &format!("for ({i} = 0; {i} < {bound}; {i}++) {{"));
                self.block(indent + 1, depth - 1);
                self.line(indent, "}");
            }
            8 => {
                let k = self.rng.gen_range(0..2);
                self.line(indent, &format!("if ({k}) {{"));
                self.block(indent + 1, depth - 1);
                self.line(indent, "}");
            }
            9 => {
                let c = self.expr(1);
                self.line(indent, "while (1) {");
                self.block(indent + 1, depth - 1);
                self.line(indent + 1, &format!("if ({c} || 1) break;"));
                self.line(indent, "}");
            }
            10 => {
                let p = self.params[self.rng.gen_range(0..self.params.len())];
                self.line(indent, &format!("switch ({p}) {{"));
                for k in -1..=1 {
                    self.line(indent, &format!("case {k}:"));
                    self.block(indent + 1, depth - 1);
                    if self.rng.gen_bool(0.7) {
                        self.line(indent + 1, "break;");
                    }
                }
                self.line(indent, "default:");
                self.line(indent + 1, "break;");
                self.line(indent, "}");
            }
            11 => {
                let c = self.expr(1);
                let v = self.var();
                self.line(indent, &format!("if ({c}) return {v};"));
            }
            12 => {
                let c = self.expr(1);
                self.uses_label = true;
                self.line(indent, &format!("if ({c}) goto done;"));
            }
            _ => {
                let v = self.var();
                let e = self.expr(1);
                self.line(indent, &format!("do {{ {v} = {v} - 1; }} while ({v} > {e} && {v} > 0);"));
            }
        }
    }
}

/// A program with entry `f`, 1 to 3 int parameters and at most 40
/// generated statements, deterministic in `seed`.
pub fn generate(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arity = rng.gen_range(1..=3);
    let params = ["a", "b", "c"][..arity].to_vec();
    let mut g = Gen { rng, params: params.clone(), loops: 0, budget: MAX_STATEMENTS, uses_label: false, out: String::new() };
    g.block(1, 3);
    while g.budget > MAX_STATEMENTS - 3 {
        g.stmt(1, 2);
    }
    let body = std::mem::take(&mut g.out);
    let statements = MAX_STATEMENTS - g.budget;
    let mut src = String::from("static int step(int v) {\n  return (v & 15) + 1;\n}\n\n");
    let plist: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
    src.push_str(&format!("int f({}) {{\n", plist.join(", ")));
    src.push_str("  int x = 0;\n  int y = 1;\n  int z = 2;\n");
    for i in 0..g.loops {
        src.push_str(&format!("  int i{i};\n"));
    }
    src.push_str(&body);
    if g.uses_label {
        src.push_str("done:\n");
    }
    src.push_str("  return x + y + z;\n}\n");
    Generated { source: src, entry: "f", params: arity, statements }
}
