//! Acceptance criteria 1-7; prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use simpledb::cfg::{build_cfg, enumerate_paths, Label, Path, PathBounds, PathStep, Terminal};
use simpledb::frontend::{load_model, CheckedModel};
use simpledb::interp::TestInput;
use simpledb::ir::{check_model, complete_assignment, emit_constraints_text, input_values};
use simpledb::randgen::{random_model, random_models, GenConfig};
use simpledb::solver::{
    count_initial_dbs, oracle_many, solve, solve_with_stats, Scope, SolveResult,
};
use simpledb::symexec::symexec;
use simpledb::testgen::{generate_tests, report, test_path, verify, TestCase, TestSuite, Verdict};
use simpledb::Bitwidth;
use rand::SeedableRng;
use std::path::PathBuf;
use std::time::{Duration, Instant};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn corpus() -> Vec<(String, CheckedModel)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "sdb"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            let src = std::fs::read_to_string(f).unwrap();
            let m = load_model(&src).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            (name, m)
        })
        .collect()
}

fn plays() -> CheckedModel {
    load_model(include_str!("../corpus/plays.sdb")).unwrap()
}

/// One loop iteration, NEXT throws, both THEN branches, both INSERTs succeed.
fn worked_path() -> Path {
    Path {
        steps: vec![
            PathStep::new(2, Label::Enter),
            PathStep::new(6, Label::Exn(None)),
            PathStep::new(7, Label::Then),
            PathStep::new(8, Label::Ok),
            PathStep::new(10, Label::Ok),
            PathStep::new(11, Label::Then),
            PathStep::new(2, Label::Exit),
        ],
        terminal: Terminal::Exit,
    }
}

fn published_solution() -> TestInput {
    TestInput::from_json(r#"{"tables":{"author":[],"play":[]},"reads":[7],"loads":[[7]]}"#).unwrap()
}

const GOLDEN: &str = include_str!("golden/worked_path.als");

/// Top-level items of an .als document; continuation lines join the item
/// they follow.
fn items(doc: &str) -> Vec<String> {
    let starts = ["module", "sig", "one sig", "pred", "fact", "assert", "check"];
    let mut out: Vec<String> = Vec::new();
    for line in doc.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if starts.iter().any(|s| line.starts_with(s)) || out.is_empty() {
            out.push(line.to_string());
        } else {
            let last = out.last_mut().unwrap();
            last.push(' ');
            last.push_str(line);
        }
    }
    out
}

/// Whitespace removed and fresh names renumbered by first occurrence.
fn normalize(items: &[String]) -> Vec<String> {
    const KINDS: [&str; 4] = ["INPUTDB", "INTERNALDB", "INPUTPROG", "INTERNALPROG"];
    let mut names: Vec<String> = Vec::new();
    items
        .iter()
        .map(|item| {
            let squashed: String = item.chars().filter(|c| !c.is_whitespace()).collect();
            let mut out = String::new();
            let mut word = String::new();
            let mut flush = |word: &mut String, out: &mut String| {
                let digits = word.trim_end_matches(|c: char| c.is_ascii_digit());
                let fresh = digits.len() < word.len()
                    && KINDS.iter().any(|k| digits.ends_with(k) && digits.len() > k.len());
                if fresh {
                    let i = match names.iter().position(|n| n == word) {
                        Some(i) => i,
                        None => {
                            names.push(word.clone());
                            names.len() - 1
                        }
                    };
                    out.push_str(&format!("$v{i}"));
                } else {
                    out.push_str(word);
                }
                word.clear();
            };
            for c in squashed.chars() {
                if c.is_ascii_alphanumeric() {
                    word.push(c);
                } else {
                    flush(&mut word, &mut out);
                    out.push(c);
                }
            }
            flush(&mut word, &mut out);
            out
        })
        .collect()
}

type Outcome = Result<String, String>;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = plays();
    let cs = symexec(&m, &worked_path()).map_err(|e| e.to_string())?;
    let text = emit_constraints_text(&cs);
    let took = start.elapsed();
    let got = normalize(&items(&text));
    let want = normalize(&items(GOLDEN));
    let missing: Vec<&String> = want.iter().filter(|w| !got.contains(w)).collect();
    let extra: Vec<&String> = got.iter().filter(|g| !want.contains(g)).collect();
    if !missing.is_empty() || !extra.is_empty() || got != want {
        return Err(format!("missing {missing:?}, unexpected {extra:?}"));
    }
    if took >= Duration::from_secs(1) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{} items identical to the golden listing, {took:?}", want.len()))
}

fn criterion_2() -> Outcome {
    let m = plays();
    let path = worked_path();
    let cs = symexec(&m, &path).map_err(|e| e.to_string())?;
    let input = published_solution();
    let w = Bitwidth::default();
    let a = complete_assignment(&cs, w, &input_values(&cs, &input)).map_err(|e| e.to_string())?;
    if !check_model(&cs, &a).map_err(|e| e.to_string())? {
        return Err("check_model rejected the published solution".into());
    }
    match verify(&m, &path, &input, &Scope::default()) {
        Verdict::Pass => Ok("check_model true, verify pass".into()),
        Verdict::Fail(d) => Err(format!("verify: {d}")),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let models = random_models(2024, 100, &GenConfig::default());
    let (mut paths, mut sat) = (0, 0);
    for (i, m) in models.iter().enumerate() {
        // generate_tests replays every sat solution and fails on divergence.
        let s = generate_tests(m, &PathBounds::with_loops(2), &Scope::default())
            .map_err(|e| format!("model {i}: {e}"))?;
        paths += s.cases.len();
        sat += s.count("sat");
    }
    let took = start.elapsed();
    if took >= Duration::from_secs(600) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("100 models, {paths} paths, {sat} sat inputs all verified, {took:?}"))
}

/// Disagreements between the solver and the oracle over all paths of `m`.
fn disagreements(name: &str, m: &CheckedModel, bounds: &PathBounds, scope: &Scope) -> Result<(usize, usize, Vec<String>), String> {
    let paths = enumerate_paths(&build_cfg(m), bounds).paths;
    let found = oracle_many(m, &paths, scope);
    let mut bad = Vec::new();
    let mut sat = 0;
    for (i, (p, f)) in paths.iter().zip(&found).enumerate() {
        let cs = symexec(m, p).map_err(|e| format!("{name} path {i}: {e}"))?;
        let r = solve(&cs, scope).map_err(|e| format!("{name} path {i}: {e}"))?;
        if matches!(r, SolveResult::ResourceExhausted) {
            bad.push(format!("{name} path {i}: solver ran out of budget"));
            continue;
        }
        if r.is_sat() {
            sat += 1;
        }
        if r.is_sat() != f.is_some() {
            bad.push(format!("{name} path {i} {p}: solver {}, oracle {}", r.label(), f.is_some()));
        }
        if let Some(input) = f {
            if !verify(m, p, input, scope).is_pass() {
                bad.push(format!("{name} path {i}: oracle input does not replay"));
            }
        }
    }
    Ok((paths.len(), sat, bad))
}

const ORACLE_DB_LIMIT: usize = 5000;

fn criterion_4() -> Outcome {
    let scope = Scope::tiny();
    let mut bad = Vec::new();
    let (mut paths, mut sat) = (0, 0);
    for (name, m) in corpus() {
        let (n, s, b) = disagreements(&name, &m, &PathBounds::with_loops(1), &scope)?;
        paths += n;
        sat += s;
        bad.extend(b);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut taken = 0;
    while taken < 50 {
        let m = random_model(&mut rng, &GenConfig::default());
        if count_initial_dbs(&m, &scope, ORACLE_DB_LIMIT) > ORACLE_DB_LIMIT {
            continue;
        }
        let (n, s, b) = disagreements(&format!("random {taken}"), &m, &PathBounds::with_loops(2), &scope)?;
        paths += n;
        sat += s;
        bad.extend(b);
        taken += 1;
    }
    if bad.is_empty() {
        Ok(format!("corpus + 50 random models, {paths} paths ({sat} sat), exact agreement"))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_5() -> Outcome {
    let src = std::fs::read_to_string(corpus_dir().join("guard.sdb")).unwrap();
    let m = load_model(&src).unwrap();
    let suite = generate_tests(&m, &PathBounds::default(), &Scope::default()).map_err(|e| e.to_string())?;
    let codec = simpledb::cfg::PathCodec::new(&m);
    let contradictory: Vec<&TestCase> = suite
        .cases
        .iter()
        .filter(|c| {
            let p = codec.from_json(&c.path).unwrap();
            p.steps.first() == Some(&PathStep::new(3, Label::Then))
        })
        .collect();
    if contradictory.is_empty() {
        return Err("no path takes the contradictory branch".into());
    }
    for c in &contradictory {
        if c.result != "unsat" || c.unsat_without_search != Some(true) {
            return Err(format!("path {} reported {} ({:?})", c.index, c.result, c.unsat_without_search));
        }
    }
    Ok(format!(
        "{} contradictory-branch paths unsat, refuted without search",
        contradictory.len()
    ))
}

fn criterion_6() -> Outcome {
    let m = plays();
    let scope = Scope::default();
    let r = test_path(&m, 0, &worked_path(), &scope).map_err(|e| e.to_string())?;
    let golden = items(GOLDEN);
    let golden_facts = golden.iter().filter(|i| i.starts_with("fact")).count();
    let golden_vars = golden
        .iter()
        .filter(|i| i.contains("sig ") && (i.contains("INPUT") || i.contains("INTERNAL")))
        .count();
    let single = TestSuite {
        model: m.model.name.clone(),
        statements: m.model.interior_len(),
        scope,
        bounds: PathBounds::default(),
        truncated: false,
        cases: vec![TestCase {
            index: 0,
            path: simpledb::cfg::PathCodec::new(&m).to_json(&worked_path()),
            result: r.result.label().into(),
            unsat_without_search: None,
            input: None,
            verdict: Some("pass".into()),
            sym_vars: r.sym_vars,
            facts: r.facts,
        }],
        solve_ms: vec![r.millis],
    };
    let table = report(&[single]);
    let lines: Vec<&str> = table.lines().collect();
    let head: Vec<&str> = lines[0].split('|').map(str::trim).collect();
    let sub: Vec<&str> = lines[1].split_whitespace().filter(|s| *s != "|").collect();
    let want_head = [
        "Model",
        "Tested paths",
        "Symbolic variables",
        "Relational constraints",
        "Constraints solving time",
    ];
    if head != want_head || sub != ["Min", "Max", "Min", "Max", "Min", "Max"] {
        return Err(format!("header {head:?} / {sub:?}"));
    }
    let row: Vec<&str> = lines[3].split('|').map(str::trim).collect();
    let nums: Vec<&str> = row[2..4].iter().flat_map(|c| c.split_whitespace()).collect();
    let want = [golden_vars, golden_vars, golden_facts, golden_facts].map(|n| n.to_string());
    if row[0] != "example" || row[1] != "1" || nums != want {
        return Err(format!("row {row:?}, wanted counts {want:?}"));
    }
    let mut suites = Vec::new();
    for (_, m) in corpus().into_iter().take(3) {
        suites.push(generate_tests(&m, &PathBounds::default(), &scope).map_err(|e| e.to_string())?);
    }
    let rows = report(&suites).lines().count() - 3;
    if rows != 3 {
        return Err(format!("three suites gave {rows} rows"));
    }
    Ok(format!("five report columns; worked path {golden_vars} vars, {golden_facts} facts"))
}

fn criterion_7() -> Outcome {
    let scope = Scope::default();
    let mut worst = (0u64, String::new());
    let mut n = 0;
    for (name, m) in corpus() {
        for (i, p) in enumerate_paths(&build_cfg(&m), &PathBounds::default()).paths.iter().enumerate() {
            let cs = symexec(&m, p).map_err(|e| e.to_string())?;
            let (r, stats) = solve_with_stats(&cs, &scope).map_err(|e| e.to_string())?;
            if matches!(r, SolveResult::ResourceExhausted) || stats.millis >= 60_000 {
                return Err(format!("{name} path {i}: {} after {} ms", r.label(), stats.millis));
            }
            if stats.millis >= worst.0 {
                worst = (stats.millis, format!("{name} path {i}"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} solves, slowest {} ms ({})", worst.0, worst.1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("worked example reproduction", criterion_1),
        ("published solution validation", criterion_2),
        ("end-to-end soundness", criterion_3),
        ("oracle equivalence", criterion_4),
        ("infeasible path detection", criterion_5),
        ("statistics reporting", criterion_6),
        ("desk-scale performance", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
