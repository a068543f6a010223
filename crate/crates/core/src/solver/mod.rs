//! Bounded model finding for constraint systems.

mod circuit;
mod encode;
mod oracle;

pub use encode::{capacities, universe_sizes};
pub use oracle::{brute_force_oracle, count_initial_dbs, for_each_initial_db, oracle_many};

use crate::interp::TestInput;
use crate::ir::{check_model, complete_assignment, first_failing_fact, input_values, Assignment, ConstraintSystem, EvalError};
use crate::word::Bitwidth;
use batsat::{lbool, BasicCallbacks, BasicSolver, SolverInterface, SolverOpts};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Finite bounds within which `solve` is complete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scope {
    pub bitwidth: Bitwidth,
    /// Rows per table in the initial database.
    pub max_rows: usize,
    pub max_list_len: usize,
    pub seed: u64,
    /// Wall-clock cap per solve; `None` is unlimited.
    pub time_budget_ms: Option<u64>,
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            bitwidth: Bitwidth::default(),
            max_rows: 4,
            max_list_len: 4,
            seed: 0,
            time_budget_ms: Some(60_000),
        }
    }
}

impl Scope {
    pub fn tiny() -> Scope {
        Scope {
            bitwidth: Bitwidth::new(3).expect("valid width"),
            max_rows: 2,
            max_list_len: 2,
            ..Scope::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub sat_vars: u64,
    pub sat_clauses: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    /// A model, already checked against every fact, and the program input
    /// it encodes.
    Sat {
        assignment: Assignment,
        input: TestInput,
    },
    /// No model within scope. `refuted_without_search` is set when unit
    /// propagation alone closed the problem.
    Unsat { refuted_without_search: bool },
    ResourceExhausted,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveResult::Sat { .. } => "sat",
            SolveResult::Unsat { .. } => "unsat",
            SolveResult::ResourceExhausted => "resource-exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("solver model violates fact {0}")]
    SelfCheck(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub fn solve(cs: &ConstraintSystem, scope: &Scope) -> Result<SolveResult, SolveError> {
    solve_with_stats(cs, scope).map(|(r, _)| r)
}

pub fn solve_with_stats(
    cs: &ConstraintSystem,
    scope: &Scope,
) -> Result<(SolveResult, SolveStats), SolveError> {
    let start = Instant::now();
    let mut callbacks = BasicCallbacks::new();
    if let Some(ms) = scope.time_budget_ms {
        let deadline = start + Duration::from_millis(ms);
        callbacks.set_stop(move || Instant::now() >= deadline);
    }
    let opts = SolverOpts {
        random_seed: 1.0 + (scope.seed % 1_000_000) as f64,
        ..SolverOpts::default()
    };
    let sat = BasicSolver::new(opts, callbacks);
    let mut enc = encode::Encoder::new(cs, scope, circuit::Circuit::new(sat));
    enc.assert_facts();
    let verdict = if enc.c.sat.is_ok() {
        enc.c.sat.solve_limited(&[])
    } else {
        lbool::FALSE
    };
    let sat = &enc.c.sat;
    let stats = SolveStats {
        sat_vars: sat.num_vars() as u64,
        sat_clauses: sat.num_clauses(),
        conflicts: sat.num_conflicts(),
        decisions: sat.num_decisions(),
        millis: start.elapsed().as_millis() as u64,
    };
    let result = if verdict == lbool::TRUE {
        let model = enc.assignment(scope.bitwidth);
        if let Some(i) = first_failing_fact(cs, &model)? {
            return Err(SolveError::SelfCheck(i));
        }
        let input = model.test_input(cs);
        let assignment = complete_assignment(cs, scope.bitwidth, &input_values(cs, &input))?;
        if let Some(i) = first_failing_fact(cs, &assignment)? {
            return Err(SolveError::SelfCheck(i));
        }
        debug_assert!(check_model(cs, &assignment)?);
        SolveResult::Sat { assignment, input }
    } else if verdict == lbool::FALSE {
        SolveResult::Unsat {
            refuted_without_search: stats.decisions == 0,
        }
    } else {
        SolveResult::ResourceExhausted
    };
    Ok((result, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{Label, Path, PathStep, Terminal};
    use crate::frontend::load_model;
    use crate::symexec::symexec;

    const PLAYS: &str = include_str!("../../corpus/plays.sdb");

    #[test]
    fn empty_system_is_sat() {
        let m = load_model("MODEL m COMMIT(); COMMIT(); ENDMODEL").unwrap();
        let cs = symexec(&m, &Path { steps: vec![], terminal: Terminal::Exit }).unwrap();
        assert!(solve(&cs, &Scope::default()).unwrap().is_sat());
    }

    #[test]
    fn contradiction_refuted_by_propagation() {
        let m = load_model(
            "MODEL m COMMIT(); x = 1; IF (x = 2) THEN y = 0; ELSE y = 1; ENDIF; COMMIT(); ENDMODEL",
        )
        .unwrap();
        let then = Path {
            steps: vec![PathStep::new(2, Label::Then)],
            terminal: Terminal::Exit,
        };
        let cs = symexec(&m, &then).unwrap();
        assert_eq!(
            solve(&cs, &Scope::default()).unwrap(),
            SolveResult::Unsat {
                refuted_without_search: true
            }
        );
    }

    #[test]
    fn worked_path_solution_follows_the_path() {
        let m = load_model(PLAYS).unwrap();
        let path = Path {
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
        };
        let cs = symexec(&m, &path).unwrap();
        let SolveResult::Sat { input, .. } = solve(&cs, &Scope::default()).unwrap() else {
            panic!("worked path must be satisfiable")
        };
        let run = crate::interp::run(&m, &input, &Default::default()).unwrap();
        assert_eq!(run.path(), path);
    }
}
