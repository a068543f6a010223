//! Reference semantics: executes a checked model on concrete inputs.

pub mod db;

pub use db::{Change, DbState, Row, Table};

use crate::cfg::{Label, PathCodec, PathStep, Terminal, Trace, Violation};
use crate::frontend::{
    ArithOp, BoolOp, CheckedModel, Cond, DbCond, DbWrite, Expr, Guard, Schema, Stmt, StmtId,
    StmtKind,
};
use crate::word::Bitwidth;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::rc::Rc;
use thiserror::Error;

/// Initial table contents plus the values consumed by READ and LOAD.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TestInput {
    /// Rows in attribute declaration order; a missing table is empty.
    pub tables: BTreeMap<String, Vec<Vec<i64>>>,
    pub reads: Vec<i64>,
    pub loads: Vec<Vec<i64>>,
}

impl TestInput {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("json")
    }

    pub fn from_json(text: &str) -> Result<TestInput, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Table contents indexed like `schema.tables`, sorted by key.
    pub fn db_tables(&self, schema: &Schema) -> Result<Vec<Table>, RunError> {
        for name in self.tables.keys() {
            if schema.table(name).is_none() {
                return Err(RunError::InvalidInput(format!("unknown table `{name}`")));
            }
        }
        Ok(schema
            .tables
            .iter()
            .map(|t| {
                let mut rows = self.tables.get(&t.name).cloned().unwrap_or_default();
                if rows.iter().all(|r| r.len() == t.arity()) {
                    rows.sort_by_key(|r| r[t.pk]);
                }
                rows
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    HeadOrTailOfNil,
    CursorNotPositioned,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("statement {0}: no input left")]
    InputUnderflow(StmtId),
    #[error("statement {0}: {1:?}")]
    Runtime(StmtId, RuntimeErrorKind),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step limit of {0} statements exceeded")]
    StepLimit(u64),
    #[error("run interrupted")]
    Interrupted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Normal,
    Aborted {
        stmt: StmtId,
        violation: Option<Violation>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecResult {
    pub trace: Trace,
    pub outcome: Outcome,
    /// Committed state at termination.
    pub db: Vec<Table>,
}

impl ExecResult {
    pub fn terminal(&self) -> Terminal {
        match self.outcome {
            Outcome::Normal => Terminal::Exit,
            Outcome::Aborted { .. } => Terminal::Abort,
        }
    }

    pub fn path(&self) -> crate::cfg::Path {
        crate::cfg::path_of_trace(&self.trace, self.terminal())
    }

    pub fn to_json(&self, model: &CheckedModel) -> Json {
        let mut v = PathCodec::new(model).to_json(&self.path());
        let db: serde_json::Map<String, Json> = model
            .schema
            .tables
            .iter()
            .zip(&self.db)
            .map(|(t, rows)| (t.name.clone(), json!(rows)))
            .collect();
        v["db"] = Json::Object(db);
        v["outcome"] = json!(match self.outcome {
            Outcome::Normal => "normal",
            Outcome::Aborted { .. } => "abort",
        });
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub bitwidth: Bitwidth,
    /// Cap on executed statements; WHILE loops need not terminate.
    pub max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bitwidth: Bitwidth::default(),
            max_steps: 100_000,
        }
    }
}

/// Supplier of READ and LOAD values.
pub trait InputSource {
    fn read(&mut self, stmt: StmtId) -> Option<i64>;
    fn load(&mut self, stmt: StmtId) -> Option<Vec<i64>>;
}

/// Receives each decision as it is taken; returning `false` stops the run.
pub trait Observer {
    fn step(&mut self, step: PathStep) -> bool;
}

impl Observer for () {
    fn step(&mut self, _: PathStep) -> bool {
        true
    }
}

struct Queued {
    reads: VecDeque<i64>,
    loads: VecDeque<Vec<i64>>,
}

impl InputSource for Queued {
    fn read(&mut self, _: StmtId) -> Option<i64> {
        self.reads.pop_front()
    }

    fn load(&mut self, _: StmtId) -> Option<Vec<i64>> {
        self.loads.pop_front()
    }
}

pub fn run(model: &CheckedModel, input: &TestInput, config: &RunConfig) -> Result<ExecResult, RunError> {
    let w = config.bitwidth;
    let tables = input.db_tables(&model.schema)?;
    if let Some((t, why)) = db::schema_violation(&model.schema, w, &tables) {
        return Err(RunError::InvalidInput(format!(
            "table `{}`: {why}",
            model.schema.tables[t].name
        )));
    }
    for v in input.reads.iter().chain(input.loads.iter().flatten()) {
        if !w.contains(*v) {
            return Err(RunError::InvalidInput(format!("value {v} is outside the {w} range")));
        }
    }
    let mut source = Queued {
        reads: input.reads.iter().copied().collect(),
        loads: input.loads.iter().cloned().collect(),
    };
    run_with(model, config, DbState::new(tables), &mut source, &mut ())
}

/// Run from an explicit initial state with pluggable inputs; inputs are not
/// validated against the schema.
pub fn run_with(
    model: &CheckedModel,
    config: &RunConfig,
    db: DbState,
    source: &mut dyn InputSource,
    observer: &mut dyn Observer,
) -> Result<ExecResult, RunError> {
    let mut m = Machine {
        model,
        w: config.bitwidth,
        max_steps: config.max_steps,
        steps: 0,
        env: HashMap::new(),
        db,
        trace: Trace::default(),
        source,
        observer,
    };
    let outcome = match m.block(&model.model.body)? {
        Flow::Continue => {
            m.db.commit();
            Outcome::Normal
        }
        Flow::Abort(stmt, violation) => Outcome::Aborted { stmt, violation },
    };
    Ok(ExecResult {
        trace: m.trace,
        outcome,
        db: m.db.committed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CursorPos {
    BeforeFirst,
    At(usize),
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    List(Rc<Vec<i64>>),
    Cursor {
        table: usize,
        rows: Rc<Vec<Row>>,
        pos: CursorPos,
    },
}

enum Flow {
    Continue,
    Abort(StmtId, Option<Violation>),
}

struct Machine<'a> {
    model: &'a CheckedModel,
    w: Bitwidth,
    max_steps: u64,
    steps: u64,
    env: HashMap<&'a str, Value>,
    db: DbState,
    trace: Trace,
    source: &'a mut dyn InputSource,
    observer: &'a mut dyn Observer,
}

impl<'a> Machine<'a> {
    fn record(&mut self, stmt: StmtId, label: Label) -> Result<(), RunError> {
        let step = PathStep { stmt, label };
        self.trace.steps.push(step);
        if self.observer.step(step) {
            Ok(())
        } else {
            Err(RunError::Interrupted)
        }
    }

    fn block(&mut self, stmts: &'a [Stmt]) -> Result<Flow, RunError> {
        for s in stmts {
            if let Flow::Abort(id, v) = self.stmt(s)? {
                return Ok(Flow::Abort(id, v));
            }
        }
        Ok(Flow::Continue)
    }

    fn tick(&mut self) -> Result<(), RunError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            Err(RunError::StepLimit(self.max_steps))
        } else {
            Ok(())
        }
    }

    fn guards(&self, s: &Stmt) -> Result<(), RunError> {
        for g in s.guards() {
            let ok = match &g {
                Guard::NonNil(v) => matches!(self.env.get(v.as_str()), Some(Value::List(l)) if !l.is_empty()),
                Guard::Positioned(c) => matches!(
                    self.env.get(c.as_str()),
                    Some(Value::Cursor { pos: CursorPos::At(_), .. })
                ),
            };
            if !ok {
                let kind = match g {
                    Guard::NonNil(_) => RuntimeErrorKind::HeadOrTailOfNil,
                    Guard::Positioned(_) => RuntimeErrorKind::CursorNotPositioned,
                };
                return Err(RunError::Runtime(s.id, kind));
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<Flow, RunError> {
        self.tick()?;
        self.guards(s)?;
        match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.cond(cond) {
                    self.record(s.id, Label::Then)?;
                    self.block(then_branch)
                } else {
                    self.record(s.id, Label::Else)?;
                    self.block(else_branch)
                }
            }
            StmtKind::While { cond, body } => loop {
                if !self.cond(cond) {
                    self.record(s.id, Label::Exit)?;
                    return Ok(Flow::Continue);
                }
                self.record(s.id, Label::Enter)?;
                if let Flow::Abort(id, v) = self.block(body)? {
                    return Ok(Flow::Abort(id, v));
                }
                self.tick()?;
                self.guards(s)?;
            },
            StmtKind::Assign { target, expr } => {
                let v = self.expr(expr, None);
                self.env.insert(target, v);
                Ok(Flow::Continue)
            }
            StmtKind::Read(v) => {
                let x = self.source.read(s.id).ok_or(RunError::InputUnderflow(s.id))?;
                self.env.insert(v, Value::Int(self.w.wrap(x)));
                Ok(Flow::Continue)
            }
            StmtKind::Load(v) => {
                let xs = self.source.load(s.id).ok_or(RunError::InputUnderflow(s.id))?;
                let xs = xs.into_iter().map(|x| self.w.wrap(x)).collect();
                self.env.insert(v, Value::List(Rc::new(xs)));
                Ok(Flow::Continue)
            }
            StmtKind::Select {
                target,
                table,
                cond,
                ..
            } => {
                let t = self.model.schema.table(table).expect("checked");
                let rows = self.select(t, cond);
                self.env.insert(
                    target,
                    Value::Cursor {
                        table: t,
                        rows: Rc::new(rows),
                        pos: CursorPos::BeforeFirst,
                    },
                );
                Ok(Flow::Continue)
            }
            StmtKind::Next(c) => {
                if self.next(c) {
                    self.record(s.id, Label::Ok)?;
                    Ok(Flow::Continue)
                } else {
                    self.record(s.id, Label::Exn(None))?;
                    Ok(Flow::Abort(s.id, None))
                }
            }
            StmtKind::CatchNext { flag, cursor } => {
                let ok = self.next(cursor);
                self.record(s.id, if ok { Label::Ok } else { Label::Exn(None) })?;
                self.env.insert(flag, Value::Int(if ok { 0 } else { 1 }));
                Ok(Flow::Continue)
            }
            StmtKind::Write(w) => match self.write(w) {
                Ok(()) => {
                    self.record(s.id, Label::Ok)?;
                    Ok(Flow::Continue)
                }
                Err(v) => {
                    self.record(s.id, Label::Exn(Some(v)))?;
                    Ok(Flow::Abort(s.id, Some(v)))
                }
            },
            StmtKind::CatchWrite { flag, write } => {
                let r = self.write(write);
                let label = match r {
                    Ok(()) => Label::Ok,
                    Err(v) => Label::Exn(Some(v)),
                };
                self.record(s.id, label)?;
                self.env.insert(flag, Value::Int(r.is_err() as i64));
                Ok(Flow::Continue)
            }
            StmtKind::Commit => {
                self.db.commit();
                Ok(Flow::Continue)
            }
            StmtKind::Rollback => {
                self.db.rollback();
                Ok(Flow::Continue)
            }
        }
    }

    /// Advance the cursor; `false` when no row is left.
    fn next(&mut self, c: &str) -> bool {
        let Some(Value::Cursor { rows, pos, .. }) = self.env.get_mut(c) else {
            unreachable!("checked cursor")
        };
        let k = match pos {
            CursorPos::BeforeFirst => 0,
            CursorPos::At(k) => *k + 1,
            CursorPos::Exhausted => rows.len(),
        };
        if k < rows.len() {
            *pos = CursorPos::At(k);
            true
        } else {
            *pos = CursorPos::Exhausted;
            false
        }
    }

    fn select(&self, t: usize, cond: &DbCond) -> Vec<Row> {
        self.db.working[t]
            .iter()
            .filter(|r| self.db_cond(cond, t, r))
            .cloned()
            .collect()
    }

    fn write(&mut self, write: &DbWrite) -> Result<(), Violation> {
        let schema = &self.model.schema;
        let t = schema.table(write.table()).expect("checked");
        let change = match write {
            DbWrite::Insert { values, .. } => {
                Change::Insert(values.iter().map(|v| self.int(v, None)).collect())
            }
            DbWrite::Update {
                attribute,
                value,
                cond,
                ..
            } => {
                let attr = schema.tables[t].attr(attribute).expect("checked");
                let rows = self.db.working[t]
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| self.db_cond(cond, t, r))
                    .map(|(i, r)| {
                        let mut n = r.clone();
                        n[attr] = self.int(value, Some((t, r)));
                        (i, n)
                    })
                    .collect();
                Change::Update { attr, rows }
            }
            DbWrite::Delete { cond, .. } => Change::Delete(
                self.db.working[t]
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| self.db_cond(cond, t, r))
                    .map(|(i, _)| i)
                    .collect(),
            ),
        };
        self.db.apply(schema, self.w, t, change)
    }

    fn cond(&self, c: &Cond) -> bool {
        match c {
            Cond::True => true,
            Cond::False => false,
            Cond::Bin { op, lhs, rhs } => match op {
                BoolOp::And => self.cond(lhs) && self.cond(rhs),
                BoolOp::Or => self.cond(lhs) || self.cond(rhs),
            },
            Cond::Not(c) => !self.cond(c),
            Cond::Cmp { lhs, op, rhs } => op.holds(self.int(lhs, None), self.int(rhs, None)),
            Cond::IsNil(v) => match self.env.get(v.as_str()) {
                Some(Value::List(l)) => l.is_empty(),
                _ => unreachable!("checked list"),
            },
        }
    }

    fn db_cond(&self, c: &DbCond, t: usize, row: &Row) -> bool {
        match c {
            DbCond::True => true,
            DbCond::False => false,
            DbCond::Bin { op, lhs, rhs } => match op {
                BoolOp::And => self.db_cond(lhs, t, row) && self.db_cond(rhs, t, row),
                BoolOp::Or => self.db_cond(lhs, t, row) || self.db_cond(rhs, t, row),
            },
            DbCond::Not(c) => !self.db_cond(c, t, row),
            DbCond::Cmp { attribute, op, rhs } => {
                let a = self.model.schema.tables[t].attr(attribute).expect("checked");
                op.holds(row[a], self.int(rhs, Some((t, row))))
            }
        }
    }

    fn int(&self, e: &Expr, row: Option<(usize, &Row)>) -> i64 {
        match self.expr(e, row) {
            Value::Int(x) => x,
            _ => unreachable!("checked int"),
        }
    }

    /// `row` binds the attributes of the table in scope, shadowing variables.
    fn expr(&self, e: &Expr, row: Option<(usize, &Row)>) -> Value {
        let w = self.w;
        match e {
            Expr::Var(v) => {
                if let Some((t, r)) = row {
                    if let Some(a) = self.model.schema.tables[t].attr(v) {
                        return Value::Int(r[a]);
                    }
                }
                self.env.get(v.as_str()).cloned().expect("checked variable")
            }
            Expr::Nat(n) => Value::Int(w.natural(*n)),
            Expr::Arith { op, lhs, rhs } => {
                let (a, b) = (self.int(lhs, row), self.int(rhs, row));
                Value::Int(match op {
                    ArithOp::Add => w.add(a, b),
                    ArithOp::Sub => w.sub(a, b),
                    ArithOp::Mul => w.mul(a, b),
                    ArithOp::Div => w.div(a, b),
                })
            }
            Expr::Neg(e) => Value::Int(w.neg(self.int(e, row))),
            Expr::Head(v) => match self.env.get(v.as_str()) {
                Some(Value::List(l)) => Value::Int(l[0]),
                _ => unreachable!("guarded head"),
            },
            Expr::Tail(v) => match self.env.get(v.as_str()) {
                Some(Value::List(l)) => Value::List(Rc::new(l[1..].to_vec())),
                _ => unreachable!("guarded tail"),
            },
            Expr::Column { cursor, attribute } => match self.env.get(cursor.as_str()) {
                Some(Value::Cursor {
                    table,
                    rows,
                    pos: CursorPos::At(k),
                }) => {
                    let a = self.model.schema.tables[*table].attr(attribute).expect("checked");
                    Value::Int(rows[*k][a])
                }
                _ => unreachable!("guarded cursor"),
            },
            Expr::Nil => Value::List(Rc::new(Vec::new())),
            Expr::Cons { head, tail } => {
                let h = self.int(head, row);
                let Value::List(t) = self.expr(tail, row) else {
                    unreachable!("checked list")
                };
                let mut l = Vec::with_capacity(t.len() + 1);
                l.push(h);
                l.extend_from_slice(&t);
                Value::List(Rc::new(l))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{Path, Terminal};
    use crate::frontend::load_model;

    const PLAYS: &str = include_str!("../../corpus/plays.sdb");

    fn plays_input(loads: Vec<Vec<i64>>, reads: Vec<i64>) -> TestInput {
        TestInput {
            tables: BTreeMap::new(),
            reads,
            loads,
        }
    }

    #[test]
    fn worked_example_input() {
        let m = load_model(PLAYS).unwrap();
        let r = run(&m, &plays_input(vec![vec![7]], vec![7]), &RunConfig::default()).unwrap();
        let expected = Path {
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
        assert_eq!(r.path(), expected);
        assert_eq!(r.db, vec![vec![vec![7, 1]], vec![vec![7, 7]]]);
    }

    #[test]
    fn empty_load_skips_loop() {
        let m = load_model(PLAYS).unwrap();
        let mut input = plays_input(vec![vec![]], vec![]);
        input.tables.insert("author".into(), vec![vec![3, 2]]);
        let r = run(&m, &input, &RunConfig::default()).unwrap();
        assert_eq!(r.trace.steps, vec![PathStep::new(2, Label::Exit)]);
        assert_eq!(r.db, vec![vec![vec![3, 2]], vec![]]);
    }

    #[test]
    fn second_play_of_same_author_updates_count() {
        let m = load_model(PLAYS).unwrap();
        let r = run(&m, &plays_input(vec![vec![1, 2]], vec![5, 5]), &RunConfig::default()).unwrap();
        assert_eq!(r.db[0], vec![vec![5, 2]]);
        assert_eq!(r.db[1], vec![vec![1, 5], vec![2, 5]]);
    }

    #[test]
    fn uncaught_duplicate_insert_aborts() {
        let m = load_model(
            "MODEL m TABLE t (a,PRIMARY KEY(a)); COMMIT(); INSERT INTO t VALUES (1); COMMIT(); INSERT INTO t VALUES (2); INSERT INTO t VALUES (1); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let r = run(&m, &TestInput::default(), &RunConfig::default()).unwrap();
        assert_eq!(
            r.outcome,
            Outcome::Aborted {
                stmt: StmtId(4),
                violation: Some(Violation::PrimaryKey)
            }
        );
        assert_eq!(r.db, vec![vec![vec![1]]]);
    }

    #[test]
    fn select_orders_by_key_and_cursor_reads() {
        let m = load_model(
            "MODEL m TABLE t (a,b,PRIMARY KEY(a)); COMMIT(); r = SELECT a FROM t WHERE (b > 0); NEXT(r); x = r(b); NEXT(r); y = r(a); e = CATCH(NEXT(r)); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let mut input = TestInput::default();
        input
            .tables
            .insert("t".into(), vec![vec![3, 1], vec![1, 2], vec![2, 0]]);
        let r = run(&m, &input, &RunConfig::default()).unwrap();
        assert_eq!(
            r.trace.steps,
            vec![
                PathStep::new(2, Label::Ok),
                PathStep::new(4, Label::Ok),
                PathStep::new(6, Label::Exn(None))
            ]
        );
    }

    #[test]
    fn runtime_and_input_errors() {
        let m = load_model("MODEL m COMMIT(); LOAD(xs); x = xs.HEAD; COMMIT(); ENDMODEL").unwrap();
        let r = run(&m, &plays_input(vec![vec![]], vec![]), &RunConfig::default());
        assert_eq!(r, Err(RunError::Runtime(StmtId(2), RuntimeErrorKind::HeadOrTailOfNil)));
        let r = run(&m, &TestInput::default(), &RunConfig::default());
        assert_eq!(r, Err(RunError::InputUnderflow(StmtId(1))));
        let r = run(&m, &plays_input(vec![vec![9]], vec![]), &RunConfig::default());
        assert!(matches!(r, Err(RunError::InvalidInput(_))));
    }

    #[test]
    fn wraparound_arithmetic() {
        let m = load_model(
            "MODEL m COMMIT(); READ(x); IF (((x + 1) < x) && ((x / 0) = 0)) THEN ELSE ENDIF; COMMIT(); ENDMODEL",
        )
        .unwrap();
        let r = run(&m, &plays_input(vec![], vec![7]), &RunConfig::default()).unwrap();
        assert_eq!(r.trace.steps, vec![PathStep::new(2, Label::Then)]);
    }

    #[test]
    fn step_limit_stops_endless_loop() {
        let m = load_model("MODEL m COMMIT(); WHILE TRUE DO ENDWHILE; COMMIT(); ENDMODEL").unwrap();
        let cfg = RunConfig {
            max_steps: 50,
            ..RunConfig::default()
        };
        assert_eq!(run(&m, &TestInput::default(), &cfg), Err(RunError::StepLimit(50)));
    }
}
