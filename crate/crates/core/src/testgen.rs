//! End-to-end test generation: enumerate, execute symbolically, solve,
//! replay.

use crate::cfg::{build_cfg, enumerate_paths, Path, PathBounds, PathCodec, PathStep, Terminal};
use crate::frontend::CheckedModel;
use crate::interp::{run, RunConfig, TestInput};
use crate::solver::{solve_with_stats, Scope, SolveError, SolveResult};
use crate::symexec::{symexec, SymexecError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use std::fmt;
use thiserror::Error;

/// Settings accepted from a JSON config file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSettings {
    pub scope: Scope,
    pub bounds: PathBounds,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub index: usize,
    pub path: Json,
    /// `sat`, `unsat` or `resource-exhausted`.
    pub result: String,
    /// For unsat cases: refuted by unit propagation before any search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsat_without_search: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<TestInput>,
    /// `pass` for every sat case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub sym_vars: usize,
    pub facts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub model: String,
    /// Interior statement count.
    pub statements: usize,
    pub scope: Scope,
    pub bounds: PathBounds,
    /// Path enumeration hit `bounds.max_paths`.
    pub truncated: bool,
    pub cases: Vec<TestCase>,
    /// Solve milliseconds per case; kept out of the suite file.
    #[serde(skip)]
    pub solve_ms: Vec<u64>,
}

/// Sidecar holding the non-deterministic part of a suite.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub model: String,
    pub solve_ms: Vec<u64>,
}

impl TestSuite {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("suite serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<TestSuite, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn timings(&self) -> Timings {
        Timings {
            model: self.model.clone(),
            solve_ms: self.solve_ms.clone(),
        }
    }

    pub fn count(&self, result: &str) -> usize {
        self.cases.iter().filter(|c| c.result == result).count()
    }
}

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("path {index}: {source}")]
    Symexec {
        index: usize,
        source: SymexecError,
    },
    #[error("path {index}: {source}")]
    Solve { index: usize, source: SolveError },
    /// A decoded solution does not drive the program along its path.
    #[error("path {index}: generated input does not follow the path: {divergence}")]
    Unsound {
        index: usize,
        divergence: Divergence,
    },
}

/// Where a run departs from the path it was meant to follow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divergence {
    /// Step `index` differs; `None` means the trace or path ended there.
    Step {
        index: usize,
        expected: Option<PathStep>,
        actual: Option<PathStep>,
    },
    Terminal {
        expected: Terminal,
        actual: Terminal,
    },
    /// The run did not complete.
    Run(String),
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = |s: &Option<PathStep>| match s {
            Some(s) => format!("{}:{}", s.stmt.0, s.label),
            None => "end".to_string(),
        };
        match self {
            Divergence::Step {
                index,
                expected,
                actual,
            } => write!(
                f,
                "step {index}: expected {}, observed {}",
                step(expected),
                step(actual)
            ),
            Divergence::Terminal { expected, actual } => {
                write!(f, "terminal: expected {expected:?}, observed {actual:?}")
            }
            Divergence::Run(error) => write!(f, "run failed: {error}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Divergence),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Replay `input` and compare the observed path with `path`.
pub fn verify(model: &CheckedModel, path: &Path, input: &TestInput, scope: &Scope) -> Verdict {
    let config = RunConfig {
        bitwidth: scope.bitwidth,
        ..RunConfig::default()
    };
    let run = match run(model, input, &config) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(Divergence::Run(e.to_string())),
    };
    let got = run.path();
    let n = got.steps.len().max(path.steps.len());
    for i in 0..n {
        let (expected, actual) = (path.steps.get(i).copied(), got.steps.get(i).copied());
        if expected != actual {
            return Verdict::Fail(Divergence::Step {
                index: i,
                expected,
                actual,
            });
        }
    }
    if got.terminal != path.terminal {
        return Verdict::Fail(Divergence::Terminal {
            expected: path.terminal,
            actual: got.terminal,
        });
    }
    Verdict::Pass
}

/// Outcome of one path before aggregation.
pub struct PathReport {
    pub result: SolveResult,
    pub sym_vars: usize,
    pub facts: usize,
    pub millis: u64,
}

/// Symbolically execute and solve one path, replaying any solution.
pub fn test_path(
    model: &CheckedModel,
    index: usize,
    path: &Path,
    scope: &Scope,
) -> Result<PathReport, TestgenError> {
    let cs = symexec(model, path).map_err(|source| TestgenError::Symexec { index, source })?;
    let (result, stats) =
        solve_with_stats(&cs, scope).map_err(|source| TestgenError::Solve { index, source })?;
    if let SolveResult::Sat { input, .. } = &result {
        if let Verdict::Fail(divergence) = verify(model, path, input, scope) {
            return Err(TestgenError::Unsound { index, divergence });
        }
    }
    Ok(PathReport {
        result,
        sym_vars: cs.vars.len(),
        facts: cs.facts.len(),
        millis: stats.millis,
    })
}

/// Generate and verify one test per enumerated path, in enumeration order.
pub fn generate_tests(
    model: &CheckedModel,
    bounds: &PathBounds,
    scope: &Scope,
) -> Result<TestSuite, TestgenError> {
    let enumeration = enumerate_paths(&build_cfg(model), bounds);
    let reports: Vec<Result<PathReport, TestgenError>> = enumeration
        .paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| test_path(model, i, p, scope))
        .collect();
    let codec = PathCodec::new(model);
    let mut suite = TestSuite {
        model: model.model.name.clone(),
        statements: model.model.interior_len(),
        scope: *scope,
        bounds: bounds.clone(),
        truncated: enumeration.truncated,
        cases: Vec::new(),
        solve_ms: Vec::new(),
    };
    for ((index, path), report) in enumeration.paths.iter().enumerate().zip(reports) {
        let r = report?;
        let (input, verdict, unsat_without_search) = match r.result {
            SolveResult::Sat { input, .. } => (Some(input), Some("pass".to_string()), None),
            SolveResult::Unsat {
                refuted_without_search,
            } => (None, None, Some(refuted_without_search)),
            SolveResult::ResourceExhausted => (None, None, None),
        };
        suite.cases.push(TestCase {
            index,
            path: codec.to_json(path),
            result: match (&input, unsat_without_search) {
                (Some(_), _) => "sat",
                (None, Some(_)) => "unsat",
                (None, None) => "resource-exhausted",
            }
            .to_string(),
            unsat_without_search,
            input,
            verdict,
            sym_vars: r.sym_vars,
            facts: r.facts,
        });
        suite.solve_ms.push(r.millis);
    }
    Ok(suite)
}

fn min_max(xs: impl Iterator<Item = u64> + Clone) -> Option<(u64, u64)> {
    Some((xs.clone().min()?, xs.max()?))
}

/// Statistics table, one row per suite with at least one case.
pub fn report(suites: &[TestSuite]) -> String {
    let mut rows: Vec<[String; 8]> = vec![
        [
            "Model".into(),
            "Tested paths".into(),
            "Symbolic variables".into(),
            String::new(),
            "Relational constraints".into(),
            String::new(),
            "Constraints solving time".into(),
            String::new(),
        ],
        [
            String::new(),
            String::new(),
            "Min".into(),
            "Max".into(),
            "Min".into(),
            "Max".into(),
            "Min".into(),
            "Max".into(),
        ],
    ];
    for s in suites.iter().filter(|s| !s.cases.is_empty()) {
        let (vmin, vmax) = min_max(s.cases.iter().map(|c| c.sym_vars as u64)).unwrap();
        let (fmin, fmax) = min_max(s.cases.iter().map(|c| c.facts as u64)).unwrap();
        let (tmin, tmax) = match min_max(s.solve_ms.iter().copied()) {
            Some((a, b)) if s.solve_ms.len() == s.cases.len() => (format!("{a} ms"), format!("{b} ms")),
            _ => ("-".into(), "-".into()),
        };
        rows.push([
            s.model.clone(),
            s.cases.len().to_string(),
            vmin.to_string(),
            vmax.to_string(),
            fmin.to_string(),
            fmax.to_string(),
            tmin,
            tmax,
        ]);
    }
    // Group titles in the first row span their Min/Max pair.
    let mut width = [0usize; 8];
    for (n, r) in rows.iter().enumerate() {
        for (i, cell) in r.iter().enumerate() {
            if n > 0 || i < 2 {
                width[i] = width[i].max(cell.len());
            }
        }
    }
    for g in [2, 4, 6] {
        let need = rows[0][g].len();
        let have = width[g] + 3 + width[g + 1];
        if need > have {
            let extra = need - have;
            width[g] += extra / 2;
            width[g + 1] += extra - extra / 2;
        }
    }
    let mut out = String::new();
    for (n, r) in rows.iter().enumerate() {
        let mut line = format!("{:<w0$} | {:>w1$}", r[0], r[1], w0 = width[0], w1 = width[1]);
        for g in [2, 4, 6] {
            if n == 0 {
                let span = width[g] + 3 + width[g + 1];
                line.push_str(&format!(" | {:<span$}", r[g]));
            } else {
                line.push_str(&format!(
                    " | {:>a$}   {:>b$}",
                    r[g],
                    r[g + 1],
                    a = width[g],
                    b = width[g + 1]
                ));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if n == 1 {
            out.push_str(&"-".repeat(line.len()));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::Label;
    use crate::frontend::load_model;

    const PLAYS: &str = include_str!("../corpus/plays.sdb");

    #[test]
    fn straight_line_gives_one_verified_test() {
        let m = load_model("MODEL m COMMIT(); READ(x); y = (x + 1); COMMIT(); ENDMODEL").unwrap();
        let s = generate_tests(&m, &PathBounds::default(), &Scope::default()).unwrap();
        assert_eq!(s.cases.len(), 1);
        assert_eq!(s.cases[0].verdict.as_deref(), Some("pass"));
    }

    #[test]
    fn empty_load_fails_at_the_loop() {
        let m = load_model(PLAYS).unwrap();
        let path = Path {
            steps: vec![PathStep::new(2, Label::Enter)],
            terminal: Terminal::Exit,
        };
        let input = TestInput::from_json(
            r#"{"tables":{"author":[],"play":[]},"reads":[7],"loads":[[]]}"#,
        )
        .unwrap();
        assert_eq!(
            verify(&m, &path, &input, &Scope::default()),
            Verdict::Fail(Divergence::Step {
                index: 0,
                expected: Some(PathStep::new(2, Label::Enter)),
                actual: Some(PathStep::new(2, Label::Exit)),
            })
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let text = report(&[]);
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("Model | Tested paths | Symbolic variables"));
    }

    #[test]
    fn suite_json_round_trips_without_timings() {
        let m = load_model(PLAYS).unwrap();
        let s = generate_tests(&m, &PathBounds::default(), &Scope::tiny()).unwrap();
        let back = TestSuite::from_json(&s.to_json()).unwrap();
        assert_eq!(back.cases, s.cases);
        assert!(back.solve_ms.is_empty());
    }
}
