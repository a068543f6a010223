//! Control-flow graph over statement ids and execution paths through it.

use crate::frontend::{CheckedModel, DbWrite, Schema, Stmt, StmtId, StmtKind};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

/// A schema constraint a db-write can violate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Violation {
    PrimaryKey,
    /// Index into the written table's foreign keys.
    ForeignKey(usize),
    /// Index into the written table's arithmetic constraints.
    Arith(usize),
    /// A deleted row, or a row whose key changes, is still referenced.
    ReferencedRow,
}

/// Violations `write` can raise, in canonical check order.
pub fn applicable_violations(schema: &Schema, write: &DbWrite) -> Vec<Violation> {
    let Some(t) = schema.get(write.table()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    match write {
        DbWrite::Insert { .. } => {
            out.push(Violation::PrimaryKey);
            out.extend((0..t.fks.len()).map(Violation::ForeignKey));
            out.extend((0..t.constraints.len()).map(Violation::Arith));
        }
        DbWrite::Update { attribute, .. } => {
            let Some(a) = t.attr(attribute) else {
                return out;
            };
            if a == t.pk {
                out.push(Violation::PrimaryKey);
            }
            out.extend(
                t.fks
                    .iter()
                    .enumerate()
                    .filter(|(_, fk)| fk.0 == a)
                    .map(|(i, _)| Violation::ForeignKey(i)),
            );
            out.extend(
                t.constraints
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.0 == a)
                    .map(|(i, _)| Violation::Arith(i)),
            );
            if a == t.pk && !t.incoming.is_empty() {
                out.push(Violation::ReferencedRow);
            }
        }
        DbWrite::Delete { .. } => {
            if !t.incoming.is_empty() {
                out.push(Violation::ReferencedRow);
            }
        }
    }
    out
}

/// Edge label; every label except `Fallthrough` is a path decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Fallthrough,
    Then,
    Else,
    Enter,
    Exit,
    Ok,
    /// `None` for NEXT, the violated constraint for db-writes.
    Exn(Option<Violation>),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Fallthrough => f.write_str("fallthrough"),
            Label::Then => f.write_str("T"),
            Label::Else => f.write_str("F"),
            Label::Enter => f.write_str("enter"),
            Label::Exit => f.write_str("exit"),
            Label::Ok => f.write_str("ok"),
            Label::Exn(None) => f.write_str("exn"),
            Label::Exn(Some(v)) => write!(f, "exn({v:?})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Node(StmtId),
    Exit,
    /// Uncaught exception.
    Abort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Plain,
    If,
    While,
    /// SELECT into `target`; resets the cursor.
    Select { target: String },
    Next { cursor: String, caught: bool },
    Write { table: usize, caught: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: StmtId,
    pub kind: NodeKind,
    pub edges: Vec<(Label, Target)>,
}

impl Node {
    pub fn is_decision(&self) -> bool {
        !matches!(self.kind, NodeKind::Plain | NodeKind::Select { .. })
    }

    pub fn target(&self, label: Label) -> Option<Target> {
        self.edges
            .iter()
            .find(|(l, _)| *l == label)
            .map(|&(_, t)| t)
    }

    fn fallthrough(&self) -> Target {
        self.edges[0].1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    /// Indexed by statement id.
    pub nodes: Vec<Node>,
    pub entry: StmtId,
}

impl Cfg {
    pub fn node(&self, id: StmtId) -> &Node {
        &self.nodes[id.index()]
    }
}

pub fn build_cfg(model: &CheckedModel) -> Cfg {
    let m = &model.model;
    let closing = m.closing_commit();
    let mut nodes: Vec<Option<Node>> = vec![None; m.stmt_count()];
    let first = m.body.first().map(|s| s.id).unwrap_or(closing);
    nodes[0] = Some(Node {
        id: StmtId(0),
        kind: NodeKind::Plain,
        edges: vec![(Label::Fallthrough, Target::Node(first))],
    });
    nodes[closing.index()] = Some(Node {
        id: closing,
        kind: NodeKind::Plain,
        edges: vec![(Label::Fallthrough, Target::Exit)],
    });
    build_block(model, &m.body, Target::Node(closing), &mut nodes);
    Cfg {
        nodes: nodes.into_iter().map(|n| n.expect("dense ids")).collect(),
        entry: StmtId(0),
    }
}

fn build_block(model: &CheckedModel, stmts: &[Stmt], follow: Target, nodes: &mut [Option<Node>]) {
    for (i, s) in stmts.iter().enumerate() {
        let next = stmts.get(i + 1).map(|n| Target::Node(n.id)).unwrap_or(follow);
        let head = |b: &[Stmt], or: Target| b.first().map(|n| Target::Node(n.id)).unwrap_or(or);
        let (kind, edges) = match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                build_block(model, then_branch, next, nodes);
                build_block(model, else_branch, next, nodes);
                (
                    NodeKind::If,
                    vec![
                        (Label::Then, head(then_branch, next)),
                        (Label::Else, head(else_branch, next)),
                    ],
                )
            }
            StmtKind::While { body, .. } => {
                let me = Target::Node(s.id);
                build_block(model, body, me, nodes);
                (
                    NodeKind::While,
                    vec![(Label::Exit, next), (Label::Enter, head(body, me))],
                )
            }
            StmtKind::Select { target, .. } => (
                NodeKind::Select {
                    target: target.clone(),
                },
                vec![(Label::Fallthrough, next)],
            ),
            StmtKind::Next(c) | StmtKind::CatchNext { cursor: c, .. } => {
                let caught = matches!(s.kind, StmtKind::CatchNext { .. });
                (
                    NodeKind::Next {
                        cursor: c.clone(),
                        caught,
                    },
                    vec![
                        (Label::Ok, next),
                        (Label::Exn(None), if caught { next } else { Target::Abort }),
                    ],
                )
            }
            StmtKind::Write(w) | StmtKind::CatchWrite { write: w, .. } => {
                let caught = matches!(s.kind, StmtKind::CatchWrite { .. });
                let table = model.schema.table(w.table()).expect("checked table");
                let mut edges = vec![(Label::Ok, next)];
                for v in applicable_violations(&model.schema, w) {
                    edges.push((
                        Label::Exn(Some(v)),
                        if caught { next } else { Target::Abort },
                    ));
                }
                (NodeKind::Write { table, caught }, edges)
            }
            _ => (NodeKind::Plain, vec![(Label::Fallthrough, next)]),
        };
        nodes[s.id.index()] = Some(Node {
            id: s.id,
            kind,
            edges,
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub stmt: StmtId,
    pub label: Label,
}

impl PathStep {
    pub fn new(stmt: u32, label: Label) -> PathStep {
        PathStep {
            stmt: StmtId(stmt),
            label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    Exit,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    pub steps: Vec<PathStep>,
    pub terminal: Terminal,
}

impl Path {
    /// Statement raising the uncaught exception of an aborted path.
    pub fn abort_stmt(&self) -> Option<StmtId> {
        match self.terminal {
            Terminal::Abort => self.steps.last().map(|s| s.stmt),
            Terminal::Exit => None,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} {}", s.stmt.0, s.label)?;
        }
        let t = match self.terminal {
            Terminal::Exit => "exit",
            Terminal::Abort => "abort",
        };
        write!(f, "] -> {t}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PathBounds {
    pub max_loop_iterations: u32,
    /// Overrides of `max_loop_iterations` keyed by WHILE statement id.
    pub loop_overrides: BTreeMap<u32, u32>,
    /// Enumerate schema-violation outcomes of db-writes.
    pub include_exception_paths: bool,
    pub max_paths: usize,
}

impl Default for PathBounds {
    fn default() -> Self {
        PathBounds {
            max_loop_iterations: 1,
            loop_overrides: BTreeMap::new(),
            include_exception_paths: true,
            max_paths: 10_000,
        }
    }
}

impl PathBounds {
    pub fn with_loops(max_loop_iterations: u32) -> PathBounds {
        PathBounds {
            max_loop_iterations,
            ..PathBounds::default()
        }
    }

    pub fn loop_bound(&self, id: StmtId) -> u32 {
        self.loop_overrides
            .get(&id.0)
            .copied()
            .unwrap_or(self.max_loop_iterations)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub paths: Vec<Path>,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Fresh,
    Positioned,
    Exhausted,
}

struct Walk<'a> {
    cfg: &'a Cfg,
    bounds: &'a PathBounds,
    steps: Vec<PathStep>,
    loops: HashMap<StmtId, u32>,
    cursors: HashMap<String, Phase>,
    out: Vec<Path>,
    truncated: bool,
}

impl Walk<'_> {
    fn go(&mut self, at: Target) {
        if self.truncated {
            return;
        }
        let id = match at {
            Target::Node(id) => id,
            Target::Exit | Target::Abort => {
                if self.out.len() >= self.bounds.max_paths {
                    self.truncated = true;
                    return;
                }
                self.out.push(Path {
                    steps: self.steps.clone(),
                    terminal: if at == Target::Exit {
                        Terminal::Exit
                    } else {
                        Terminal::Abort
                    },
                });
                return;
            }
        };
        let node = self.cfg.node(id);
        match &node.kind {
            NodeKind::Plain => self.go(node.fallthrough()),
            NodeKind::Select { target } => {
                let old = self.cursors.insert(target.clone(), Phase::Fresh);
                self.go(node.fallthrough());
                self.restore(target, old);
            }
            NodeKind::If => {
                for &(label, t) in &node.edges {
                    self.decide(id, label, |w| w.go(t));
                }
            }
            NodeKind::While => {
                let n = self.loops.get(&id).copied().unwrap_or(0);
                let exit = node.target(Label::Exit).unwrap();
                let enter = node.target(Label::Enter).unwrap();
                self.loops.remove(&id);
                self.decide(id, Label::Exit, |w| w.go(exit));
                if n < self.bounds.loop_bound(id) {
                    self.loops.insert(id, n + 1);
                    self.decide(id, Label::Enter, |w| w.go(enter));
                }
                if n > 0 {
                    self.loops.insert(id, n);
                } else {
                    self.loops.remove(&id);
                }
            }
            NodeKind::Next { cursor, .. } => {
                let phase = self.cursors.get(cursor).copied().unwrap_or(Phase::Fresh);
                if phase != Phase::Exhausted {
                    let t = node.target(Label::Ok).unwrap();
                    self.cursors.insert(cursor.clone(), Phase::Positioned);
                    self.decide(id, Label::Ok, |w| w.go(t));
                }
                let t = node.target(Label::Exn(None)).unwrap();
                self.cursors.insert(cursor.clone(), Phase::Exhausted);
                self.decide(id, Label::Exn(None), |w| w.go(t));
                self.cursors.insert(cursor.clone(), phase);
            }
            NodeKind::Write { .. } => {
                for &(label, t) in &node.edges {
                    if label != Label::Ok && !self.bounds.include_exception_paths {
                        continue;
                    }
                    self.decide(id, label, |w| w.go(t));
                }
            }
        }
    }

    fn decide(&mut self, stmt: StmtId, label: Label, k: impl FnOnce(&mut Self)) {
        self.steps.push(PathStep { stmt, label });
        k(self);
        self.steps.pop();
    }

    fn restore(&mut self, var: &str, old: Option<Phase>) {
        match old {
            Some(p) => {
                self.cursors.insert(var.to_string(), p);
            }
            None => {
                self.cursors.remove(var);
            }
        }
    }
}

/// Depth-first enumeration: then before else, exit before enter, ok before
/// exceptions in canonical violation order.
pub fn enumerate_paths(cfg: &Cfg, bounds: &PathBounds) -> Enumeration {
    let mut w = Walk {
        cfg,
        bounds,
        steps: Vec::new(),
        loops: HashMap::new(),
        cursors: HashMap::new(),
        out: Vec::new(),
        truncated: false,
    };
    w.go(Target::Node(cfg.entry));
    Enumeration {
        paths: w.out,
        truncated: w.truncated,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("step {0}: {1}")]
    InvalidStep(usize, String),
}

pub fn validate_path(cfg: &Cfg, path: &Path) -> Result<(), PathError> {
    let mut at = Target::Node(cfg.entry);
    let mut i = 0;
    loop {
        let id = match at {
            Target::Node(id) => id,
            Target::Exit | Target::Abort => {
                if i < path.steps.len() {
                    return Err(PathError::InvalidStep(
                        i,
                        "program already terminated".into(),
                    ));
                }
                let reached = if at == Target::Exit {
                    Terminal::Exit
                } else {
                    Terminal::Abort
                };
                if reached != path.terminal {
                    return Err(PathError::InvalidStep(
                        path.steps.len().saturating_sub(1),
                        format!("path ends in {reached:?}, not {:?}", path.terminal),
                    ));
                }
                return Ok(());
            }
        };
        let node = cfg.node(id);
        if !node.is_decision() {
            at = node.fallthrough();
            continue;
        }
        let Some(step) = path.steps.get(i) else {
            return Err(PathError::InvalidStep(
                i,
                format!("missing decision for statement {}", id.0),
            ));
        };
        if step.stmt != id {
            return Err(PathError::InvalidStep(
                i,
                format!("expected a decision for statement {}, got {}", id.0, step.stmt.0),
            ));
        }
        at = match node.target(step.label) {
            Some(t) if step.label != Label::Fallthrough => t,
            _ => {
                return Err(PathError::InvalidStep(
                    i,
                    format!("statement {} has no `{}` outcome", id.0, step.label),
                ))
            }
        };
        i += 1;
    }
}

/// Decision sequence recorded by the interpreter, in execution order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<PathStep>,
}

pub fn path_of_trace(trace: &Trace, terminal: Terminal) -> Path {
    Path {
        steps: trace.steps.clone(),
        terminal,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("path JSON: {0}")]
pub struct PathJsonError(pub String);

/// JSON encoding of paths; violation names depend on the written table.
pub struct PathCodec<'a> {
    pub model: &'a CheckedModel,
}

impl<'a> PathCodec<'a> {
    pub fn new(model: &'a CheckedModel) -> Self {
        PathCodec { model }
    }

    fn written_table(&self, stmt: StmtId) -> Option<usize> {
        match &self.model.model.find_stmt(stmt)?.kind {
            StmtKind::Write(w) | StmtKind::CatchWrite { write: w, .. } => {
                self.model.schema.table(w.table())
            }
            _ => None,
        }
    }

    pub fn violation_name(&self, stmt: StmtId, v: Violation) -> String {
        match v {
            Violation::PrimaryKey => "PK".into(),
            Violation::ReferencedRow => "REFROW".into(),
            Violation::Arith(i) => format!("ARITH:{i}"),
            Violation::ForeignKey(i) => {
                let schema = &self.model.schema;
                let Some(t) = self.written_table(stmt) else {
                    return format!("FK:{i}");
                };
                let t = &schema.tables[t];
                let (attr, r) = t.fks[i];
                let rname = &schema.tables[r].name;
                if t.fks.iter().filter(|f| f.1 == r).count() > 1 {
                    format!("FK:{rname}.{}", t.attributes[attr])
                } else {
                    format!("FK:{rname}")
                }
            }
        }
    }

    fn parse_violation(&self, stmt: StmtId, s: &str) -> Result<Violation, PathJsonError> {
        let bad = || PathJsonError(format!("unknown violation `{s}` at statement {}", stmt.0));
        match s {
            "PK" => return Ok(Violation::PrimaryKey),
            "REFROW" => return Ok(Violation::ReferencedRow),
            _ => {}
        }
        if let Some(i) = s.strip_prefix("ARITH:") {
            return i.parse().map(Violation::Arith).map_err(|_| bad());
        }
        let name = s.strip_prefix("FK:").ok_or_else(bad)?;
        let t = self.written_table(stmt).ok_or_else(bad)?;
        let schema = &self.model.schema;
        let t = &schema.tables[t];
        let (rname, attr) = match name.split_once('.') {
            Some((r, a)) => (r, Some(a)),
            None => (name, None),
        };
        let hits: Vec<usize> = t
            .fks
            .iter()
            .enumerate()
            .filter(|(_, (a, r))| {
                schema.tables[*r].name == rname
                    && attr.is_none_or(|want| t.attributes[*a] == want)
            })
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(Violation::ForeignKey(*i)),
            _ => Err(bad()),
        }
    }

    pub fn to_json(&self, path: &Path) -> Json {
        let steps: Vec<Json> = path
            .steps
            .iter()
            .map(|s| {
                let (d, v) = match s.label {
                    Label::Then => ("T", Json::Null),
                    Label::Else => ("F", Json::Null),
                    Label::Enter => ("enter", Json::Null),
                    Label::Exit => ("exit", Json::Null),
                    Label::Ok | Label::Fallthrough => ("ok", Json::Null),
                    Label::Exn(None) => ("exn", Json::Null),
                    Label::Exn(Some(v)) => ("exn", Json::String(self.violation_name(s.stmt, v))),
                };
                json!({"stmt": s.stmt.0, "d": d, "violation": v})
            })
            .collect();
        json!({
            "steps": steps,
            "terminal": match path.terminal {
                Terminal::Exit => "exit",
                Terminal::Abort => "abort",
            }
        })
    }

    pub fn encode(&self, path: &Path) -> String {
        serde_json::to_string(&self.to_json(path)).expect("json")
    }

    pub fn from_json(&self, v: &Json) -> Result<Path, PathJsonError> {
        let err = |m: &str| PathJsonError(m.to_string());
        let steps = v
            .get("steps")
            .and_then(Json::as_array)
            .ok_or_else(|| err("missing `steps` array"))?;
        let mut out = Vec::with_capacity(steps.len());
        for s in steps {
            let stmt = s
                .get("stmt")
                .and_then(Json::as_u64)
                .ok_or_else(|| err("step without integer `stmt`"))?;
            let stmt = StmtId(stmt as u32);
            let d = s
                .get("d")
                .and_then(Json::as_str)
                .ok_or_else(|| err("step without string `d`"))?;
            let viol = match s.get("violation") {
                None | Some(Json::Null) => None,
                Some(Json::String(v)) => Some(self.parse_violation(stmt, v)?),
                Some(_) => return Err(err("`violation` must be a string or null")),
            };
            let label = match (d, viol) {
                ("T", None) => Label::Then,
                ("F", None) => Label::Else,
                ("enter", None) => Label::Enter,
                ("exit", None) => Label::Exit,
                ("ok", None) => Label::Ok,
                ("exn", v) => Label::Exn(v),
                _ => return Err(err(&format!("bad decision `{d}` at statement {}", stmt.0))),
            };
            out.push(PathStep { stmt, label });
        }
        let terminal = match v.get("terminal").and_then(Json::as_str) {
            Some("exit") => Terminal::Exit,
            Some("abort") => Terminal::Abort,
            _ => return Err(err("`terminal` must be \"exit\" or \"abort\"")),
        };
        Ok(Path {
            steps: out,
            terminal,
        })
    }

    pub fn decode(&self, text: &str) -> Result<Path, PathJsonError> {
        let v: Json = serde_json::from_str(text).map_err(|e| PathJsonError(e.to_string()))?;
        self.from_json(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;

    fn model(src: &str) -> CheckedModel {
        load_model(src).unwrap()
    }

    #[test]
    fn straight_line_has_one_path() {
        let m = model("MODEL m COMMIT(); x = 1; COMMIT(); ENDMODEL");
        let cfg = build_cfg(&m);
        assert_eq!(cfg.nodes.len(), 3);
        let e = enumerate_paths(&cfg, &PathBounds::default());
        assert_eq!(e.paths.len(), 1);
        assert!(e.paths[0].steps.is_empty());
        assert_eq!(e.paths[0].terminal, Terminal::Exit);
    }

    #[test]
    fn single_loop_counts_iterations() {
        let m = model("MODEL m COMMIT(); x = 0; WHILE (x < 3) DO x = (x + 1); ENDWHILE; COMMIT(); ENDMODEL");
        let e = enumerate_paths(&build_cfg(&m), &PathBounds::with_loops(2));
        assert_eq!(e.paths.len(), 3);
        assert_eq!(e.paths[0].steps.len(), 1);
        assert_eq!(e.paths[2].steps.len(), 3);
    }

    #[test]
    fn enter_on_if_is_invalid() {
        let m = model("MODEL m COMMIT(); IF TRUE THEN ELSE ENDIF; COMMIT(); ENDMODEL");
        let cfg = build_cfg(&m);
        let p = Path {
            steps: vec![PathStep::new(1, Label::Enter)],
            terminal: Terminal::Exit,
        };
        assert!(matches!(validate_path(&cfg, &p), Err(PathError::InvalidStep(0, _))));
    }

    #[test]
    fn truncation_flag() {
        let m = model("MODEL m COMMIT(); IF TRUE THEN ELSE ENDIF; IF TRUE THEN ELSE ENDIF; COMMIT(); ENDMODEL");
        let b = PathBounds {
            max_paths: 3,
            ..PathBounds::default()
        };
        let e = enumerate_paths(&build_cfg(&m), &b);
        assert_eq!(e.paths.len(), 3);
        assert!(e.truncated);
    }

    #[test]
    fn uncaught_violation_aborts() {
        let m = model("MODEL m TABLE t (a,PRIMARY KEY(a)); COMMIT(); INSERT INTO t VALUES (1); COMMIT(); ENDMODEL");
        let cfg = build_cfg(&m);
        assert_eq!(
            cfg.node(StmtId(1)).target(Label::Exn(Some(Violation::PrimaryKey))),
            Some(Target::Abort)
        );
        let e = enumerate_paths(&cfg, &PathBounds::default());
        assert_eq!(e.paths.len(), 2);
        assert_eq!(e.paths[1].terminal, Terminal::Abort);
        assert_eq!(e.paths[1].abort_stmt(), Some(StmtId(1)));
    }

    #[test]
    fn json_round_trip_with_duplicate_fk_targets() {
        let m = model(
            "MODEL m TABLE u (k,PRIMARY KEY(k)); TABLE t (a,b,c,PRIMARY KEY(a),FOREIGN KEY(b) REFERENCES u,FOREIGN KEY(c) REFERENCES u,c > 1);
             COMMIT(); e = CATCH(INSERT INTO t VALUES (1,2,3)); COMMIT(); ENDMODEL",
        );
        let codec = PathCodec::new(&m);
        let p = Path {
            steps: vec![PathStep::new(1, Label::Exn(Some(Violation::ForeignKey(1))))],
            terminal: Terminal::Exit,
        };
        let text = codec.encode(&p);
        assert!(text.contains("\"FK:u.c\""), "{text}");
        assert_eq!(codec.decode(&text).unwrap(), p);
        let all = enumerate_paths(&build_cfg(&m), &PathBounds::default());
        assert_eq!(all.paths.len(), 5);
        for p in &all.paths {
            assert_eq!(codec.decode(&codec.encode(p)).unwrap(), *p);
        }
    }

    #[test]
    fn update_violation_applicability() {
        let m = model(
            "MODEL m TABLE u (k,v,PRIMARY KEY(k),v > 0); TABLE t (a,b,PRIMARY KEY(a),FOREIGN KEY(b) REFERENCES u);
             COMMIT(); UPDATE u SET k = 1 WHERE TRUE; UPDATE u SET v = 1 WHERE TRUE; UPDATE t SET b = 1 WHERE TRUE; DELETE FROM t WHERE TRUE; DELETE FROM u WHERE TRUE; COMMIT(); ENDMODEL",
        );
        let v: Vec<Vec<Violation>> = m
            .model
            .body
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Write(w) => applicable_violations(&m.schema, w),
                _ => unreachable!(),
            })
            .collect();
        use Violation::*;
        assert_eq!(
            v,
            vec![
                vec![PrimaryKey, ReferencedRow],
                vec![Arith(0)],
                vec![ForeignKey(0)],
                vec![],
                vec![ReferencedRow],
            ]
        );
    }
}
