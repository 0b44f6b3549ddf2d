use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use minicheck::driver::{self, Format, RunConfig, EXIT_ERROR};
use minicheck::effectless::Mode;
use minicheck::guidelines::{render_registry, Profile};
use minicheck::oracle;
use minicheck::sema::{compile, LibcProfile};
use minicheck::frontend::preprocess::PreprocessOptions;

#[derive(Parser)]
#[command(name = "minicheck", version, about = "Guideline checker for a C subset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Strict,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum EffectlessArg {
    Directive,
    #[value(name = "strict-r2-2")]
    StrictR22,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Ndjson,
}

#[derive(Subcommand)]
enum Command {
    /// Check source files and report findings.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Define a macro: NAME or NAME=VALUE.
        #[arg(short = 'D', value_name = "NAME[=VALUE]")]
        define: Vec<String>,
        /// Add a directory to the include search path.
        #[arg(short = 'I', value_name = "DIR")]
        include: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "strict")]
        profile: ProfileArg,
        #[arg(long, value_enum, default_value = "directive")]
        effectless: EffectlessArg,
        /// Run only these checks (repeatable).
        #[arg(long, value_name = "ID")]
        enable: Vec<String>,
        /// Skip these checks (repeatable).
        #[arg(long, value_name = "ID")]
        disable: Vec<String>,
        /// Coverage records to merge as evidence.
        #[arg(long, value_name = "FILE")]
        coverage: Option<PathBuf>,
        /// Justification ledger.
        #[arg(long, value_name = "FILE")]
        ledger: Option<PathBuf>,
        /// Extra entry points, one function name per line.
        #[arg(long, value_name = "FILE")]
        annotations: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Print the control-flow graph of every function.
        #[arg(long)]
        dump_cfg: bool,
    },
    /// Execute a function in the interpreter and print its trace.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "main")]
        entry: String,
        /// Comma-separated integer arguments.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        args: Vec<i64>,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
    },
    /// Print the table of undecidable rules.
    Registry,
}

fn parse_define(s: &str) -> (String, Option<String>) {
    match s.split_once('=') {
        Some((n, v)) => (n.to_string(), Some(v.to_string())),
        None => (s.to_string(), None),
    }
}

fn run_check(config: RunConfig) -> u8 {
    let report = match driver::check(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("minicheck: {e}");
            return EXIT_ERROR as u8;
        }
    };
    let text = driver::render(&report, config.format);
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).and_then(|()| out.flush()).is_err() {
        return EXIT_ERROR as u8;
    }
    report.exit_code() as u8
}

fn run_oracle(file: PathBuf, entry: &str, args: &[i64], fuel: u64) -> u8 {
    let name = file.display().to_string();
    let source = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("minicheck: {name}: {e}");
            return EXIT_ERROR as u8;
        }
    };
    let unit = match compile(&source, &name, Some(&file), &PreprocessOptions::default(), &LibcProfile::default()) {
        Ok(u) => u,
        Err(e) => {
            let s = e.span();
            eprintln!("minicheck: {name}:{}:{}: error: {}", s.line, s.column, e.message());
            return EXIT_ERROR as u8;
        }
    };
    match oracle::run(&unit, entry, args, fuel) {
        Ok(trace) => {
            print!("{}", trace.dump(&unit));
            0
        }
        Err(e) => {
            eprintln!("minicheck: {e}");
            EXIT_ERROR as u8
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_ERROR as u8 } else { 0 };
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Check {
            files,
            define,
            include,
            profile,
            effectless,
            enable,
            disable,
            coverage,
            ledger,
            annotations,
            format,
            dump_cfg,
        } => run_check(RunConfig {
            inputs: files,
            defines: define.iter().map(|d| parse_define(d)).collect(),
            include_paths: include,
            profile: match profile {
                ProfileArg::Strict => Profile::Strict,
                ProfileArg::Heuristic => Profile::Heuristic,
            },
            effectless: match effectless {
                EffectlessArg::Directive => Mode::Directive,
                EffectlessArg::StrictR22 => Mode::StrictR22,
                EffectlessArg::Off => Mode::Off,
            },
            enable,
            disable,
            coverage,
            ledger,
            annotations,
            format: match format {
                FormatArg::Text => Format::Text,
                FormatArg::Ndjson => Format::Ndjson,
            },
            dump_cfg,
        }),
        Command::Run { file, entry, args, fuel } => run_oracle(file, &entry, &args, fuel),
        Command::Registry => {
            print!("{}", render_registry());
            0
        }
    };
    ExitCode::from(code)
}
