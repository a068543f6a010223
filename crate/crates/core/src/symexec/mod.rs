//! Relational symbolic execution of one control-flow path.

mod dbwrite;
mod translate;

pub use dbwrite::gen_dbwrite_constraints;
pub use translate::{translate_cond, translate_db_cond, translate_expr, translate_int, RowScope, Term};

use crate::cfg::{Label, Path, PathStep, Terminal};
use crate::frontend::{CheckedModel, Guard, Schema, Stmt, StmtId, StmtKind};
use crate::ir::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SymexecError {
    #[error("path does not fit the model at step {step}: {reason}")]
    PathMismatch { step: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CursorPhase {
    /// Selected, not advanced yet.
    Fresh,
    /// On the least row of the bound variable.
    Positioned,
    Exhausted,
}

/// Symbolic counterpart of the interpreter state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymState {
    pub env: HashMap<String, VarId>,
    /// Current variable of each table.
    pub tables: Vec<VarId>,
    pub cursors: HashMap<String, CursorPhase>,
    /// Table variables at the last COMMIT.
    pub snapshot: Vec<VarId>,
}

/// Fresh names `<base><INPUT|INTERNAL><DB|PROG><n>`, numbered per kind.
#[derive(Clone, Debug, Default)]
pub struct Namer {
    counters: [u32; 4],
}

impl Namer {
    pub fn fresh(&mut self, base: &str, origin: Origin, db: bool) -> String {
        let k = (origin == Origin::Internal) as usize * 2 + db as usize;
        self.counters[k] += 1;
        format!(
            "{}{}{}{}",
            base.to_lowercase(),
            if origin == Origin::Input { "INPUT" } else { "INTERNAL" },
            if db { "DB" } else { "PROG" },
            self.counters[k]
        )
    }
}

/// Primary key, foreign key and arithmetic facts for table `t`, whose
/// initial content is `init[t]`.
pub fn gen_schema_constraints(schema: &Schema, t: usize, init: &[VarId]) -> Vec<Formula> {
    let ts = &schema.tables[t];
    let mut out = vec![Formula::Quant {
        q: Quantifier::All,
        disj: true,
        vars: vec!["a", "b"],
        domain: Domain::Set(SetTerm::Var(init[t])),
        body: Box::new(Formula::not(Formula::group(Formula::Cmp(
            IntTerm::Field("a", ts.pk),
            Rel::Eq,
            IntTerm::Field("b", ts.pk),
        )))),
    }];
    for &(a, r) in &ts.fks {
        out.push(Formula::quant(
            Quantifier::All,
            "a",
            Domain::Set(SetTerm::Var(init[t])),
            Formula::quant(
                Quantifier::One,
                "b",
                Domain::Set(SetTerm::Var(init[r])),
                Formula::Cmp(
                    IntTerm::Field("a", a),
                    Rel::Eq,
                    IntTerm::Field("b", schema.tables[r].pk),
                ),
            ),
        ));
    }
    for &(a, op, bound) in &ts.constraints {
        out.push(Formula::quant(
            Quantifier::All,
            "a",
            Domain::Sort(t),
            Formula::Cmp(IntTerm::Field("a", a), op.into(), IntTerm::Lit(bound)),
        ));
    }
    out
}

/// Constraints whose solutions are exactly the inputs driving `model`
/// along `path`.
pub fn symexec(model: &CheckedModel, path: &Path) -> Result<ConstraintSystem, SymexecError> {
    let schema = &model.schema;
    let mut cs = ConstraintSystem::new(&model.model.name, schema);
    let n = schema.tables.len();
    let init: Vec<VarId> = (0..n)
        .map(|t| {
            cs.vars.push(SymVar {
                name: format!("{}INPUTDB{}", schema.tables[t].name.to_lowercase(), n - t),
                sort: Sort::Table(t),
                origin: Origin::Input,
                def: VarDef::Input,
            });
            cs.vars.len() - 1
        })
        .collect();
    for t in 0..n {
        cs.declare_sort(t);
        cs.add_fact(Formula::Distinct(t));
        cs.layout.push(Item::Var(init[t]));
        for f in gen_schema_constraints(schema, t, &init) {
            cs.add_fact(f);
        }
    }
    cs.declare_list_sort();

    let mut ex = Exec {
        model,
        cs,
        st: SymState {
            env: HashMap::new(),
            tables: init.clone(),
            cursors: HashMap::new(),
            snapshot: init.clone(),
        },
        namer: Namer::default(),
        steps: &path.steps,
        pos: 0,
    };
    let aborted = ex.block(&model.model.body)?;
    if ex.pos < path.steps.len() {
        return Err(ex.mismatch("steps remain after the program ends"));
    }
    match (aborted, path.terminal) {
        (false, Terminal::Exit) | (true, Terminal::Abort) => {}
        (true, Terminal::Exit) => return Err(ex.mismatch("uncaught exception on an exiting path")),
        (false, Terminal::Abort) => return Err(ex.mismatch("aborting path runs to completion")),
    }
    let mut cs = ex.cs;
    cs.inputs = (0..cs.vars.len())
        .filter(|&v| cs.vars[v].origin == Origin::Input && !matches!(cs.vars[v].sort, Sort::Table(_)))
        .chain(init)
        .collect();
    Ok(cs)
}

struct Exec<'a> {
    model: &'a CheckedModel,
    cs: ConstraintSystem,
    st: SymState,
    namer: Namer,
    steps: &'a [PathStep],
    pos: usize,
}

impl<'a> Exec<'a> {
    fn mismatch(&self, reason: impl Into<String>) -> SymexecError {
        SymexecError::PathMismatch {
            step: self.pos,
            reason: reason.into(),
        }
    }

    fn decision(&mut self, id: StmtId) -> Result<Label, SymexecError> {
        match self.steps.get(self.pos) {
            Some(s) if s.stmt == id => {
                self.pos += 1;
                Ok(s.label)
            }
            Some(s) => Err(self.mismatch(format!("expected a decision of {id}, found {}", s.stmt))),
            None => Err(self.mismatch(format!("path ends before the decision of {id}"))),
        }
    }

    fn bad_label(&mut self, id: StmtId, label: Label) -> SymexecError {
        self.pos -= 1;
        self.mismatch(format!("label {label} does not apply to {id}"))
    }

    fn guards(&mut self, s: &Stmt) {
        for g in s.guards() {
            let f = match g {
                Guard::NonNil(v) => Formula::not(Formula::ListEq(
                    ListTerm::Var(self.st.env[v.as_str()]),
                    ListTerm::Nil,
                )),
                Guard::Positioned(c) => {
                    if self.st.cursors.get(c.as_str()) == Some(&CursorPhase::Positioned) {
                        continue;
                    }
                    Formula::ff()
                }
            };
            self.cs.add_fact_once(f);
        }
    }

    fn fresh(&mut self, base: &str, sort: Sort, origin: Origin, def: VarDef) -> VarId {
        let name = self.namer.fresh(base, origin, false);
        self.cs.add_var(SymVar {
            name,
            sort,
            origin,
            def,
        })
    }

    /// `true` when an uncaught exception ends the run.
    fn block(&mut self, stmts: &'a [Stmt]) -> Result<bool, SymexecError> {
        for s in stmts {
            if self.stmt(s)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn branch(&mut self, cond: &crate::frontend::Cond, taken: bool) {
        let f = translate_cond(self.model, &self.st, cond);
        self.cs.add_fact(if taken { f } else { Formula::not(f) });
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<bool, SymexecError> {
        self.guards(s);
        let model = self.model;
        match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => match self.decision(s.id)? {
                Label::Then => {
                    self.branch(cond, true);
                    self.block(then_branch)
                }
                Label::Else => {
                    self.branch(cond, false);
                    self.block(else_branch)
                }
                l => Err(self.bad_label(s.id, l)),
            },
            StmtKind::While { cond, body } => loop {
                match self.decision(s.id)? {
                    Label::Exit => {
                        self.branch(cond, false);
                        return Ok(false);
                    }
                    Label::Enter => {
                        self.branch(cond, true);
                        if self.block(body)? {
                            return Ok(true);
                        }
                        self.guards(s);
                    }
                    l => return Err(self.bad_label(s.id, l)),
                }
            },
            StmtKind::Assign { target, expr } => {
                let v = match translate_expr(model, &self.st, expr, None) {
                    Term::Int(t) => {
                        let v = self.fresh(target, Sort::Int, Origin::Internal, VarDef::Int(t.clone()));
                        self.cs.add_fact(Formula::Cmp(IntTerm::Var(v), Rel::Eq, t));
                        v
                    }
                    Term::List(l) => {
                        let v = self.fresh(target, Sort::List, Origin::Internal, VarDef::List(l.clone()));
                        self.cs.add_fact(Formula::ListEq(ListTerm::Var(v), l));
                        v
                    }
                };
                self.st.env.insert(target.clone(), v);
                Ok(false)
            }
            StmtKind::Read(x) => {
                let v = self.fresh(x, Sort::Int, Origin::Input, VarDef::Input);
                self.st.env.insert(x.clone(), v);
                Ok(false)
            }
            StmtKind::Load(x) => {
                let v = self.fresh(x, Sort::List, Origin::Input, VarDef::Input);
                self.st.env.insert(x.clone(), v);
                Ok(false)
            }
            StmtKind::Select {
                target,
                table,
                cond,
                ..
            } => {
                let t = model.schema.table(table).expect("checked table");
                let src = self.st.tables[t];
                let c = translate_db_cond(model, &self.st, cond, t, "e");
                let r = self.fresh(
                    target,
                    Sort::Table(t),
                    Origin::Internal,
                    VarDef::Select {
                        src,
                        row: "e",
                        cond: c.clone(),
                    },
                );
                self.cs.add_fact(Formula::quant(
                    Quantifier::All,
                    "e",
                    Domain::Sort(t),
                    Formula::iff(
                        Formula::group(Formula::And(vec![Formula::In("e", SetTerm::Var(src)), c])),
                        Formula::In("e", SetTerm::Var(r)),
                    ),
                ));
                self.st.env.insert(target.clone(), r);
                self.st.cursors.insert(target.clone(), CursorPhase::Fresh);
                Ok(false)
            }
            StmtKind::Next(c) => {
                let ok = self.next(s.id, c)?;
                Ok(!ok)
            }
            StmtKind::CatchNext { flag, cursor } => {
                let ok = self.next(s.id, cursor)?;
                self.flag(flag, !ok);
                Ok(false)
            }
            StmtKind::Write(w) | StmtKind::CatchWrite { write: w, .. } => {
                let outcome = match self.decision(s.id)? {
                    Label::Ok => None,
                    Label::Exn(Some(v)) => Some(v),
                    l => return Err(self.bad_label(s.id, l)),
                };
                gen_dbwrite_constraints(model, &mut self.cs, &mut self.st, &mut self.namer, w, outcome)
                    .map_err(|reason| {
                        self.pos -= 1;
                        self.mismatch(reason)
                    })?;
                match &s.kind {
                    StmtKind::CatchWrite { flag, .. } => {
                        self.flag(flag, outcome.is_some());
                        Ok(false)
                    }
                    _ => Ok(outcome.is_some()),
                }
            }
            StmtKind::Commit => {
                self.st.snapshot.clone_from(&self.st.tables);
                Ok(false)
            }
            StmtKind::Rollback => {
                self.st.tables.clone_from(&self.st.snapshot);
                Ok(false)
            }
        }
    }

    fn flag(&mut self, flag: &str, raised: bool) {
        let n = raised as u64;
        let v = self.fresh(flag, Sort::Int, Origin::Internal, VarDef::Int(IntTerm::Lit(n)));
        self.cs.add_fact(Formula::Cmp(IntTerm::Var(v), Rel::Eq, IntTerm::Lit(n)));
        self.st.env.insert(flag.to_string(), v);
    }

    /// Follow the path's NEXT outcome; `true` when a row was reached.
    fn next(&mut self, id: StmtId, cursor: &str) -> Result<bool, SymexecError> {
        let ok = match self.decision(id)? {
            Label::Ok => true,
            Label::Exn(None) => false,
            l => return Err(self.bad_label(id, l)),
        };
        let r = self.st.env[cursor];
        let phase = self.st.cursors[cursor];
        let card = |rel, n| Formula::Card(SetTerm::Var(r), rel, n);
        let next_phase = match (phase, ok) {
            (CursorPhase::Fresh, true) => {
                self.cs.add_fact(card(Rel::Gt, 0));
                CursorPhase::Positioned
            }
            (CursorPhase::Fresh, false) => {
                self.cs.add_fact(card(Rel::Eq, 0));
                CursorPhase::Exhausted
            }
            (CursorPhase::Positioned, true) => {
                let Sort::Table(t) = self.cs.vars[r].sort else {
                    unreachable!("cursor over a table")
                };
                let key = self.model.schema.tables[t].pk;
                let r2 = self.fresh(
                    cursor,
                    Sort::Table(t),
                    Origin::Internal,
                    VarDef::DropMin { src: r, key },
                );
                self.cs.add_fact(Formula::SetEq(
                    SetTerm::Var(r2),
                    SetTerm::Minus(
                        Box::new(SetTerm::Var(r)),
                        Box::new(SetTerm::MinBy(Box::new(SetTerm::Var(r)), key)),
                    ),
                ));
                self.cs.add_fact(Formula::Card(SetTerm::Var(r2), Rel::Gt, 0));
                self.st.env.insert(cursor.to_string(), r2);
                CursorPhase::Positioned
            }
            (CursorPhase::Positioned, false) => {
                self.cs.add_fact(card(Rel::Eq, 1));
                CursorPhase::Exhausted
            }
            (CursorPhase::Exhausted, true) => {
                self.pos -= 1;
                return Err(self.mismatch(format!("NEXT at {id} cannot succeed on an exhausted cursor")));
            }
            (CursorPhase::Exhausted, false) => CursorPhase::Exhausted,
        };
        self.st.cursors.insert(cursor.to_string(), next_phase);
        Ok(ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::Label;
    use crate::frontend::load_model;

    const PLAYS: &str = include_str!("../../corpus/plays.sdb");

    pub(crate) fn worked_path() -> Path {
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

    #[test]
    fn worked_path_counts() {
        let m = load_model(PLAYS).unwrap();
        let cs = symexec(&m, &worked_path()).unwrap();
        assert_eq!(cs.vars.len(), 11);
        assert_eq!(cs.facts.len(), 21);
        let text = cs.to_string();
        assert!(text.contains("fact{#authorsINTERNALPROG2=0}"));
        assert!(text.contains("fact{no e: authorINPUTDB2 | e.name = authornameINPUTPROG2}"));
    }

    #[test]
    fn published_solution_satisfies_every_fact() {
        let m = load_model(PLAYS).unwrap();
        let cs = symexec(&m, &worked_path()).unwrap();
        let input = crate::interp::TestInput {
            tables: Default::default(),
            reads: vec![7],
            loads: vec![vec![7]],
        };
        let vals = input_values(&cs, &input);
        let a = complete_assignment(&cs, crate::Bitwidth::default(), &vals).unwrap();
        assert_eq!(first_failing_fact(&cs, &a).unwrap(), None);
        let other = crate::interp::TestInput {
            reads: vec![7],
            loads: vec![vec![]],
            ..input
        };
        let a = complete_assignment(&cs, crate::Bitwidth::default(), &input_values(&cs, &other)).unwrap();
        assert!(!check_model(&cs, &a).unwrap());
    }

    #[test]
    fn duplicate_insert_states_the_clash() {
        let m = load_model(
            "MODEL m TABLE t (a,PRIMARY KEY(a)); COMMIT(); READ(x); INSERT INTO t VALUES (x); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let p = Path {
            steps: vec![PathStep::new(2, Label::Exn(Some(crate::cfg::Violation::PrimaryKey)))],
            terminal: Terminal::Abort,
        };
        let cs = symexec(&m, &p).unwrap();
        assert!(cs.to_string().contains("fact{some e: tINPUTDB1 | e.a = xINPUTPROG1}"));
        assert_eq!(cs.vars.len(), 2);
        let bad = Path {
            steps: vec![PathStep::new(2, Label::Exn(Some(crate::cfg::Violation::ReferencedRow)))],
            terminal: Terminal::Abort,
        };
        assert!(matches!(symexec(&m, &bad), Err(SymexecError::PathMismatch { step: 0, .. })));
    }

    #[test]
    fn next_after_exhaustion_is_a_mismatch() {
        let m = load_model(
            "MODEL m TABLE t (a,PRIMARY KEY(a)); COMMIT(); r = SELECT a FROM t WHERE TRUE; e = CATCH(NEXT(r)); NEXT(r); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let p = Path {
            steps: vec![PathStep::new(2, Label::Exn(None)), PathStep::new(3, Label::Ok)],
            terminal: Terminal::Exit,
        };
        assert!(matches!(symexec(&m, &p), Err(SymexecError::PathMismatch { step: 1, .. })));
    }
}
