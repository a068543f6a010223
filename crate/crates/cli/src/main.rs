//! `sdbgen`: generate path-covering test inputs for SimpleDB models.

use clap::{Args, Parser, Subcommand};
use simpledb::cfg::{build_cfg, enumerate_paths, Path, PathBounds, PathCodec};
use simpledb::frontend::{load_model, CheckedModel};
use simpledb::interp::TestInput;
use simpledb::ir::emit_constraints_text;
use simpledb::solver::{solve_with_stats, Scope, SolveError, SolveResult};
use simpledb::symexec::symexec;
use simpledb::testgen::{self, GenSettings, TestSuite, TestgenError, Timings, Verdict};
use simpledb::Bitwidth;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DIAGNOSTICS: u8 = 2;
const EXIT_UNSAT: u8 = 3;
const EXIT_UNSOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "sdbgen", version, about = "Test-input generation for SimpleDB models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a model.
    Check { model: PathBuf },
    /// Enumerate control-flow paths.
    Paths {
        model: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
        /// Print paths as a JSON array.
        #[arg(long)]
        json: bool,
        /// Write each path to DIR/path-NNN.json.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Emit the constraint system of one path.
    Symexec {
        model: PathBuf,
        #[command(flatten)]
        path: PathArg,
        #[command(flatten)]
        settings: SettingsArgs,
        /// Output .als file; standard output if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the constraints of one path and print the test input.
    Solve {
        model: PathBuf,
        #[command(flatten)]
        path: PathArg,
        #[command(flatten)]
        settings: SettingsArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate and verify a test for every path.
    Testgen {
        model: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
        /// Suite file; timings go next to it in NAME.timings.json.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a test input and compare its trace with a path.
    Verify {
        model: PathBuf,
        path: PathBuf,
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        bitwidth: u32,
    },
    /// Statistics table over test suites.
    Report { suites: Vec<PathBuf> },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PathArg {
    /// Path JSON file.
    #[arg(long = "path", value_name = "FILE")]
    file: Option<PathBuf>,
    /// Index into the path enumeration.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Args, Default)]
struct SettingsArgs {
    /// JSON file with `scope` and `bounds`; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bitwidth: Option<u32>,
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long)]
    max_list_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-solve wall-clock cap; 0 disables it.
    #[arg(long)]
    time_budget_ms: Option<u64>,
    #[arg(long)]
    loops: Option<u32>,
    #[arg(long)]
    no_exceptions: bool,
    #[arg(long)]
    max_paths: Option<usize>,
}

/// Failure carrying its exit status.
struct Fail(u8, String);

type Res<T> = Result<T, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

fn diag(msg: impl Into<String>) -> Fail {
    Fail(EXIT_DIAGNOSTICS, msg.into())
}

fn read(path: &FsPath) -> Res<String> {
    fs::read_to_string(path).map_err(|e| diag(format!("{}: {e}", path.display())))
}

fn write(path: &FsPath, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| diag(format!("{}: {e}", path.display())))
}

fn model(path: &FsPath) -> Res<CheckedModel> {
    load_model(&read(path)?).map_err(|ds| {
        let file = path.display().to_string();
        diag(ds.iter().map(|d| d.render(&file)).collect::<Vec<_>>().join("\n"))
    })
}

impl SettingsArgs {
    fn resolve(&self) -> Res<GenSettings> {
        let mut s = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?)
                .map_err(|e| diag(format!("{}: {e}", p.display())))?,
            None => GenSettings::default(),
        };
        if let Some(b) = self.bitwidth {
            s.scope.bitwidth = Bitwidth::new(b).ok_or_else(|| usage(format!("unsupported bitwidth {b}")))?;
        }
        if let Some(n) = self.max_rows {
            s.scope.max_rows = n;
        }
        if let Some(n) = self.max_list_len {
            s.scope.max_list_len = n;
        }
        if let Some(n) = self.seed {
            s.scope.seed = n;
        }
        if let Some(ms) = self.time_budget_ms {
            s.scope.time_budget_ms = (ms > 0).then_some(ms);
        }
        if let Some(n) = self.loops {
            s.bounds.max_loop_iterations = n;
        }
        if self.no_exceptions {
            s.bounds.include_exception_paths = false;
        }
        if let Some(n) = self.max_paths {
            s.bounds.max_paths = n;
        }
        Ok(s)
    }
}

fn pick_path(m: &CheckedModel, arg: &PathArg, bounds: &PathBounds) -> Res<Path> {
    if let Some(f) = &arg.file {
        return PathCodec::new(m)
            .decode(&read(f)?)
            .map_err(|e| diag(format!("{}: {e}", f.display())));
    }
    let i = arg.index.expect("clap enforces one of --path and --index");
    let mut paths = enumerate_paths(&build_cfg(m), bounds).paths;
    if i >= paths.len() {
        return Err(usage(format!("path index {i} out of range ({} paths)", paths.len())));
    }
    Ok(paths.swap_remove(i))
}

fn solve_error(e: SolveError) -> Fail {
    Fail(EXIT_UNSOUND, e.to_string())
}

fn timings_path(suite: &FsPath) -> PathBuf {
    suite.with_extension("timings.json")
}

fn run(cli: Cli) -> Res<u8> {
    match cli.command {
        Command::Check { model: file } => {
            let m = model(&file)?;
            let name = file.display().to_string();
            for w in m.literal_warnings(Bitwidth::default()) {
                eprintln!("{}", w.render(&name));
            }
            println!(
                "{name}: model {} ok, {} tables, {} statements",
                m.model.name,
                m.schema.tables.len(),
                m.model.interior_len()
            );
            Ok(0)
        }
        Command::Paths {
            model: file,
            settings,
            json,
            out_dir,
        } => {
            let m = model(&file)?;
            let s = settings.resolve()?;
            let e = enumerate_paths(&build_cfg(&m), &s.bounds);
            let codec = PathCodec::new(&m);
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).map_err(|e| diag(format!("{}: {e}", dir.display())))?;
                for (i, p) in e.paths.iter().enumerate() {
                    write(&dir.join(format!("path-{i:03}.json")), &codec.encode(p))?;
                }
            }
            if json {
                let all: Vec<_> = e.paths.iter().map(|p| codec.to_json(p)).collect();
                println!("{}", serde_json::to_string_pretty(&all).expect("json"));
            } else {
                for (i, p) in e.paths.iter().enumerate() {
                    println!("{i:>4} {p}");
                }
            }
            if e.truncated {
                eprintln!("warning: stopped after {} paths", e.paths.len());
            }
            Ok(0)
        }
        Command::Symexec {
            model: file,
            path,
            settings,
            output,
        } => {
            let m = model(&file)?;
            let s = settings.resolve()?;
            let p = pick_path(&m, &path, &s.bounds)?;
            let cs = symexec(&m, &p).map_err(|e| diag(e.to_string()))?;
            let text = emit_constraints_text(&cs);
            match output {
                Some(o) => write(&o, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Solve {
            model: file,
            path,
            settings,
            output,
        } => {
            let m = model(&file)?;
            let s = settings.resolve()?;
            let p = pick_path(&m, &path, &s.bounds)?;
            let cs = symexec(&m, &p).map_err(|e| diag(e.to_string()))?;
            let (r, stats) = solve_with_stats(&cs, &s.scope).map_err(solve_error)?;
            eprintln!(
                "{} vars, {} facts, {} sat vars, {} clauses, {} ms",
                cs.vars.len(),
                cs.facts.len(),
                stats.sat_vars,
                stats.sat_clauses,
                stats.millis
            );
            match r {
                SolveResult::Sat { input, .. } => {
                    if let Verdict::Fail(d) = testgen::verify(&m, &p, &input, &s.scope) {
                        return Err(Fail(EXIT_UNSOUND, format!("solution does not follow the path: {d}")));
                    }
                    let text = input.to_json();
                    match output {
                        Some(o) => write(&o, &text)?,
                        None => println!("{text}"),
                    }
                    Ok(0)
                }
                SolveResult::Unsat {
                    refuted_without_search,
                } => {
                    println!(
                        "unsat within scope{}",
                        if refuted_without_search {
                            " (refuted by propagation, no search)"
                        } else {
                            ""
                        }
                    );
                    Ok(EXIT_UNSAT)
                }
                SolveResult::ResourceExhausted => {
                    println!("resource-exhausted");
                    Ok(EXIT_UNSAT)
                }
            }
        }
        Command::Testgen {
            model: file,
            settings,
            output,
        } => {
            let m = model(&file)?;
            let s = settings.resolve()?;
            let suite = testgen::generate_tests(&m, &s.bounds, &s.scope).map_err(|e| match e {
                TestgenError::Symexec { .. } => diag(e.to_string()),
                TestgenError::Solve { .. } | TestgenError::Unsound { .. } => {
                    Fail(EXIT_UNSOUND, e.to_string())
                }
            })?;
            let text = suite.to_json();
            match &output {
                Some(o) => {
                    write(o, &text)?;
                    let t = serde_json::to_string_pretty(&suite.timings()).expect("json");
                    write(&timings_path(o), &(t + "\n"))?;
                }
                None => print!("{text}"),
            }
            eprintln!(
                "{} paths: {} sat (verified), {} unsat within scope, {} resource-exhausted",
                suite.cases.len(),
                suite.count("sat"),
                suite.count("unsat"),
                suite.count("resource-exhausted")
            );
            if !suite.cases.is_empty() && suite.count("sat") == 0 {
                Ok(EXIT_UNSAT)
            } else {
                Ok(0)
            }
        }
        Command::Verify {
            model: file,
            path,
            input,
            bitwidth,
        } => {
            let m = model(&file)?;
            let p = PathCodec::new(&m)
                .decode(&read(&path)?)
                .map_err(|e| diag(format!("{}: {e}", path.display())))?;
            let i = TestInput::from_json(&read(&input)?)
                .map_err(|e| diag(format!("{}: {e}", input.display())))?;
            let scope = Scope {
                bitwidth: Bitwidth::new(bitwidth).ok_or_else(|| usage(format!("unsupported bitwidth {bitwidth}")))?,
                ..Scope::default()
            };
            match testgen::verify(&m, &p, &i, &scope) {
                Verdict::Pass => {
                    println!("pass");
                    Ok(0)
                }
                Verdict::Fail(d) => {
                    println!("fail: {d}");
                    Ok(EXIT_DIAGNOSTICS)
                }
            }
        }
        Command::Report { suites } => {
            let mut all = Vec::new();
            for f in &suites {
                let mut s = TestSuite::from_json(&read(f)?)
                    .map_err(|e| diag(format!("{}: {e}", f.display())))?;
                let side = timings_path(f);
                if side.exists() {
                    let t: Timings = serde_json::from_str(&read(&side)?)
                        .map_err(|e| diag(format!("{}: {e}", side.display())))?;
                    s.solve_ms = t.solve_ms;
                }
                all.push(s);
            }
            print!("{}", testgen::report(&all));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
