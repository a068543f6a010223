//! Abstract syntax of SimpleDB models.
//!
//! Every compound expression in the concrete syntax is fully parenthesized,
//! so the tree mirrors the derivation directly. Statements carry a dense
//! [`StmtId`] assigned in preorder; id 0 is the mandatory opening `COMMIT();`
//! and the closing `COMMIT();` takes the id after the last interior statement.

use super::lexer::Pos;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Ident = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StmtId(pub u32);

impl StmtId {
    pub const OPENING_COMMIT: StmtId = StmtId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelDecl {
    pub name: Ident,
    pub tables: Vec<TableDecl>,
    /// Statements strictly between the opening and closing `COMMIT();`.
    pub body: Vec<Stmt>,
}

impl ModelDecl {
    /// Number of interior statements, nested ones included.
    pub fn interior_len(&self) -> usize {
        count_stmts(&self.body)
    }

    pub fn closing_commit(&self) -> StmtId {
        StmtId(self.interior_len() as u32 + 1)
    }

    /// Total number of statement ids, boundary commits included.
    pub fn stmt_count(&self) -> usize {
        self.interior_len() + 2
    }

    /// Reassign statement ids in preorder starting after the opening commit.
    pub fn renumber(&mut self) {
        fn walk(stmts: &mut [Stmt], next: &mut u32) {
            for s in stmts {
                s.id = StmtId(*next);
                *next += 1;
                match &mut s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => {
                        walk(then_branch, next);
                        walk(else_branch, next);
                    }
                    StmtKind::While { body, .. } => walk(body, next),
                    _ => {}
                }
            }
        }
        let mut next = 1;
        walk(&mut self.body, &mut next);
    }

    /// Preorder walk over interior statements.
    pub fn for_each_stmt<'a>(&'a self, mut f: impl FnMut(&'a Stmt)) {
        fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
            for s in stmts {
                f(s);
                match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => {
                        walk(then_branch, f);
                        walk(else_branch, f);
                    }
                    StmtKind::While { body, .. } => walk(body, f),
                    _ => {}
                }
            }
        }
        walk(&self.body, &mut f);
    }

    pub fn find_stmt(&self, id: StmtId) -> Option<&Stmt> {
        let mut found = None;
        self.for_each_stmt(|s| {
            if s.id == id {
                found = Some(s);
            }
        });
        found
    }
}

fn count_stmts(stmts: &[Stmt]) -> usize {
    stmts
        .iter()
        .map(|s| {
            1 + match &s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => count_stmts(then_branch) + count_stmts(else_branch),
                StmtKind::While { body, .. } => count_stmts(body),
                _ => 0,
            }
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct TableDecl {
    pub name: Ident,
    pub attributes: Vec<Ident>,
    pub primary_key: Ident,
    pub foreign_keys: Vec<ForeignKey>,
    pub constraints: Vec<ArithConstraint>,
    pub pos: Pos,
}

impl PartialEq for TableDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.attributes == other.attributes
            && self.primary_key == other.primary_key
            && self.foreign_keys == other.foreign_keys
            && self.constraints == other.constraints
    }
}

impl Eq for TableDecl {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignKey {
    pub attribute: Ident,
    pub table: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithConstraint {
    pub attribute: Ident,
    pub op: CmpOp,
    pub bound: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Eq,
    Gt,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

impl BoolOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BoolOp::And => "&&",
            BoolOp::Or => "||",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub id: StmtId,
    pub pos: Pos,
    pub kind: StmtKind,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.kind == other.kind
    }
}

impl Eq for Stmt {}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt {
            id: StmtId(0),
            pos: Pos::default(),
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    If {
        cond: Cond,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Cond,
        body: Vec<Stmt>,
    },
    Assign {
        target: Ident,
        expr: Expr,
    },
    Read(Ident),
    Load(Ident),
    Select {
        target: Ident,
        columns: Vec<Ident>,
        table: Ident,
        cond: DbCond,
    },
    Next(Ident),
    CatchNext {
        flag: Ident,
        cursor: Ident,
    },
    Write(DbWrite),
    CatchWrite {
        flag: Ident,
        write: DbWrite,
    },
    Commit,
    Rollback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(Ident),
    Nat(u64),
    Arith {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Neg(Box<Expr>),
    Head(Ident),
    /// `cursor(attribute)`: attribute of the row under the cursor.
    Column {
        cursor: Ident,
        attribute: Ident,
    },
    Nil,
    Cons {
        head: Box<Expr>,
        tail: Box<Expr>,
    },
    Tail(Ident),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    True,
    False,
    Bin {
        op: BoolOp,
        lhs: Box<Cond>,
        rhs: Box<Cond>,
    },
    Not(Box<Cond>),
    Cmp {
        lhs: Expr,
        op: CmpOp,
        rhs: Expr,
    },
    IsNil(Ident),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DbCond {
    True,
    False,
    Bin {
        op: BoolOp,
        lhs: Box<DbCond>,
        rhs: Box<DbCond>,
    },
    Not(Box<DbCond>),
    /// `(attribute op expr)`; identifiers in `rhs` resolve to attributes first.
    Cmp {
        attribute: Ident,
        op: CmpOp,
        rhs: Expr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DbWrite {
    Insert {
        table: Ident,
        values: Vec<Expr>,
    },
    Update {
        table: Ident,
        attribute: Ident,
        value: Expr,
        cond: DbCond,
    },
    Delete {
        table: Ident,
        cond: DbCond,
    },
}

impl DbWrite {
    pub fn table(&self) -> &str {
        match self {
            DbWrite::Insert { table, .. }
            | DbWrite::Update { table, .. }
            | DbWrite::Delete { table, .. } => table,
        }
    }
}

/// Operand well-definedness requirement checked when a statement starts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    /// `x.HEAD` / `x.TAIL` needs `x` to be a non-empty list.
    NonNil(Ident),
    /// `c(att)` needs the cursor of `c` to point at a row.
    Positioned(Ident),
}

impl Stmt {
    /// Guards of the expressions evaluated by this statement itself (not by
    /// nested statements), in source order, without duplicates.
    pub fn guards(&self) -> Vec<Guard> {
        let mut out = Vec::new();
        match &self.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => cond_guards(cond, &mut out),
            StmtKind::Assign { expr, .. } => expr_guards(expr, &mut out),
            StmtKind::Select { cond, .. } => db_cond_guards(cond, &mut out),
            StmtKind::Write(w) | StmtKind::CatchWrite { write: w, .. } => match w {
                DbWrite::Insert { values, .. } => {
                    values.iter().for_each(|v| expr_guards(v, &mut out))
                }
                DbWrite::Update { value, cond, .. } => {
                    expr_guards(value, &mut out);
                    db_cond_guards(cond, &mut out);
                }
                DbWrite::Delete { cond, .. } => db_cond_guards(cond, &mut out),
            },
            _ => {}
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|g| seen.insert(g.clone()));
        out
    }
}

fn expr_guards(e: &Expr, out: &mut Vec<Guard>) {
    match e {
        Expr::Var(_) | Expr::Nat(_) | Expr::Nil => {}
        Expr::Arith { lhs, rhs, .. } => {
            expr_guards(lhs, out);
            expr_guards(rhs, out);
        }
        Expr::Neg(inner) => expr_guards(inner, out),
        Expr::Head(v) | Expr::Tail(v) => out.push(Guard::NonNil(v.clone())),
        Expr::Column { cursor, .. } => out.push(Guard::Positioned(cursor.clone())),
        Expr::Cons { head, tail } => {
            expr_guards(head, out);
            expr_guards(tail, out);
        }
    }
}

fn cond_guards(c: &Cond, out: &mut Vec<Guard>) {
    match c {
        Cond::True | Cond::False | Cond::IsNil(_) => {}
        Cond::Bin { lhs, rhs, .. } => {
            cond_guards(lhs, out);
            cond_guards(rhs, out);
        }
        Cond::Not(inner) => cond_guards(inner, out),
        Cond::Cmp { lhs, rhs, .. } => {
            expr_guards(lhs, out);
            expr_guards(rhs, out);
        }
    }
}

fn db_cond_guards(c: &DbCond, out: &mut Vec<Guard>) {
    match c {
        DbCond::True | DbCond::False => {}
        DbCond::Bin { lhs, rhs, .. } => {
            db_cond_guards(lhs, out);
            db_cond_guards(rhs, out);
        }
        DbCond::Not(inner) => db_cond_guards(inner, out),
        DbCond::Cmp { rhs, .. } => expr_guards(rhs, out),
    }
}
