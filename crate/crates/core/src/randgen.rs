//! Random well-formed SimpleDB models for property tests.
//!
//! Models are built as syntax trees with a scoped view of the variables in
//! reach, printed, and put back through the parser and checker; the rare
//! candidate the checker still rejects is redrawn.

use crate::frontend::{
    load_model, pretty_print, ArithConstraint, ArithOp, BoolOp, CheckedModel, CmpOp, Cond, DbCond,
    DbWrite, Expr, ForeignKey, ModelDecl, Stmt, StmtKind, TableDecl,
};
use crate::frontend::Pos;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub max_tables: usize,
    pub max_attributes: usize,
    /// Interior statements, nested ones included.
    pub max_stmts: usize,
    pub max_depth: usize,
    pub max_lists: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_tables: 2,
            max_attributes: 3,
            max_stmts: 12,
            max_depth: 2,
            max_lists: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Int,
    List,
    Cursor(usize),
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    cfg: GenConfig,
    tables: Vec<TableDecl>,
    scopes: Vec<Vec<(String, Kind)>>,
    fresh: usize,
    lists: usize,
}

/// One random model; deterministic in the state of `rng`.
pub fn random_model<R: Rng>(rng: &mut R, cfg: &GenConfig) -> CheckedModel {
    loop {
        let decl = random_decl(rng, cfg);
        if let Ok(m) = load_model(&pretty_print(&decl)) {
            return m;
        }
    }
}

/// `n` models from a fixed seed.
pub fn random_models(seed: u64, n: usize, cfg: &GenConfig) -> Vec<CheckedModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_model(&mut rng, cfg)).collect()
}

/// Unchecked syntax tree of a random model.
pub fn random_decl<R: Rng>(rng: &mut R, cfg: &GenConfig) -> ModelDecl {
    let mut g = Gen {
        rng,
        cfg: *cfg,
        tables: Vec::new(),
        scopes: vec![Vec::new()],
        fresh: 0,
        lists: 0,
    };
    g.schema();
    let budget = g.rng.gen_range(1..=cfg.max_stmts.max(1));
    let body = g.block(budget, 0);
    let mut m = ModelDecl {
        name: "random".into(),
        tables: g.tables,
        body,
    };
    m.renumber();
    m
}

const TABLE_NAMES: [&str; 4] = ["ta", "tb", "tc", "td"];

impl<R: Rng> Gen<'_, R> {
    fn schema(&mut self) {
        let n = self.rng.gen_range(1..=self.cfg.max_tables.clamp(1, TABLE_NAMES.len()));
        for t in 0..n {
            let name = TABLE_NAMES[t].to_string();
            let arity = self.rng.gen_range(1..=self.cfg.max_attributes.max(1));
            let attributes: Vec<String> = (0..arity).map(|i| format!("{name}{i}")).collect();
            let mut foreign_keys = Vec::new();
            if t > 0 && arity > 1 && self.rng.gen_bool(0.5) {
                let target = self.rng.gen_range(0..t);
                foreign_keys.push(ForeignKey {
                    attribute: attributes[self.rng.gen_range(1..arity)].clone(),
                    table: TABLE_NAMES[target].to_string(),
                });
            }
            let mut constraints = Vec::new();
            if self.rng.gen_bool(0.4) {
                let op = *[CmpOp::Lt, CmpOp::Gt, CmpOp::Eq].choose(self.rng).unwrap();
                constraints.push(ArithConstraint {
                    attribute: attributes.choose(self.rng).unwrap().clone(),
                    op,
                    bound: self.rng.gen_range(0..=3),
                });
            }
            self.tables.push(TableDecl {
                name,
                primary_key: attributes[0].clone(),
                attributes,
                foreign_keys,
                constraints,
                pos: Pos::default(),
            });
        }
    }

    fn visible(&self, pred: impl Fn(&Kind) -> bool) -> Vec<(String, Kind)> {
        let mut out: Vec<(String, Kind)> = Vec::new();
        for scope in self.scopes.iter().rev() {
            for (v, k) in scope.iter().rev() {
                if pred(k) && !out.iter().any(|(w, _)| w == v) {
                    out.push((v.clone(), k.clone()));
                }
            }
        }
        out
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn bind(&mut self, v: &str, k: Kind) {
        let defined = self.visible(|_| true).into_iter().any(|(w, _)| w == v);
        if !defined {
            self.scopes.last_mut().unwrap().push((v.to_string(), k));
        }
    }

    /// Existing int variable or a new one.
    fn int_target(&mut self) -> String {
        let ints = self.visible(|k| *k == Kind::Int);
        if !ints.is_empty() && self.rng.gen_bool(0.4) {
            ints.choose(self.rng).unwrap().0.clone()
        } else {
            self.name("v")
        }
    }

    fn block(&mut self, budget: usize, depth: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        let mut left = budget;
        while left > 0 {
            let (s, used) = self.stmt(left, depth);
            out.push(Stmt::new(s));
            left -= used.min(left);
        }
        out
    }

    fn nested(&mut self, budget: usize, depth: usize) -> Vec<Stmt> {
        self.scopes.push(Vec::new());
        let b = self.block(budget, depth);
        self.scopes.pop();
        b
    }

    /// A statement and the number of statements it spans.
    fn stmt(&mut self, left: usize, depth: usize) -> (StmtKind, usize) {
        let lists = self.visible(|k| *k == Kind::List);
        let cursors = self.visible(|k| matches!(k, Kind::Cursor(_)));
        loop {
            match self.rng.gen_range(0..12) {
                0 | 1 => {
                    let v = self.int_target();
                    self.bind(&v, Kind::Int);
                    return (StmtKind::Read(v), 1);
                }
                2 => {
                    let target = self.int_target();
                    let expr = self.expr(2);
                    self.bind(&target, Kind::Int);
                    return (StmtKind::Assign { target, expr }, 1);
                }
                3 if self.lists < self.cfg.max_lists => {
                    self.lists += 1;
                    let v = self.name("l");
                    self.bind(&v, Kind::List);
                    return (StmtKind::Load(v), 1);
                }
                4 if left >= 3 && depth < self.cfg.max_depth => {
                    let inner = left - 1;
                    let t = self.rng.gen_range(1..inner);
                    let e = self.rng.gen_range(1..=inner - t);
                    let cond = self.cond(2);
                    let then_branch = self.nested(t, depth + 1);
                    let else_branch = self.nested(e, depth + 1);
                    let kind = StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    };
                    return (kind, 1 + t + e);
                }
                5 if left >= 3 && depth < self.cfg.max_depth && !lists.is_empty() => {
                    let l = lists.choose(self.rng).unwrap().0.clone();
                    let b = self.rng.gen_range(1..=left - 2);
                    self.scopes.push(Vec::new());
                    let mut body = self.block(b, depth + 1);
                    self.scopes.pop();
                    body.push(Stmt::new(StmtKind::Assign {
                        target: l.clone(),
                        expr: Expr::Tail(l.clone()),
                    }));
                    let cond = Cond::Not(Box::new(Cond::IsNil(l)));
                    return (StmtKind::While { cond, body }, 2 + b);
                }
                6 => {
                    let t = self.rng.gen_range(0..self.tables.len());
                    let target = self.name("c");
                    let columns = self.tables[t].attributes.clone();
                    let cond = self.db_cond(t, 1);
                    self.bind(&target, Kind::Cursor(t));
                    let kind = StmtKind::Select {
                        target,
                        columns,
                        table: self.tables[t].name.clone(),
                        cond,
                    };
                    return (kind, 1);
                }
                7 if !cursors.is_empty() => {
                    let c = cursors.choose(self.rng).unwrap().0.clone();
                    if self.rng.gen_bool(0.5) {
                        return (StmtKind::Next(c), 1);
                    }
                    let flag = self.name("f");
                    self.bind(&flag, Kind::Int);
                    return (StmtKind::CatchNext { flag, cursor: c }, 1);
                }
                8 | 9 => {
                    let write = self.write();
                    if self.rng.gen_bool(0.5) {
                        return (StmtKind::Write(write), 1);
                    }
                    let flag = self.name("f");
                    self.bind(&flag, Kind::Int);
                    return (StmtKind::CatchWrite { flag, write }, 1);
                }
                10 => return (StmtKind::Commit, 1),
                11 => return (StmtKind::Rollback, 1),
                _ => {}
            }
        }
    }

    fn write(&mut self) -> DbWrite {
        let t = self.rng.gen_range(0..self.tables.len());
        let table = self.tables[t].name.clone();
        match self.rng.gen_range(0..3) {
            0 => {
                let n = self.tables[t].attributes.len();
                let values = (0..n).map(|_| self.expr(1)).collect();
                DbWrite::Insert { table, values }
            }
            1 => {
                let attribute = self.tables[t].attributes.choose(self.rng).unwrap().clone();
                let value = if self.rng.gen_bool(0.5) {
                    Expr::Arith {
                        op: ArithOp::Add,
                        lhs: Box::new(Expr::Var(attribute.clone())),
                        rhs: Box::new(self.expr(0)),
                    }
                } else {
                    self.expr(1)
                };
                let cond = self.db_cond(t, 1);
                DbWrite::Update {
                    table,
                    attribute,
                    value,
                    cond,
                }
            }
            _ => {
                let cond = self.db_cond(t, 1);
                DbWrite::Delete { table, cond }
            }
        }
    }

    fn leaf(&mut self) -> Expr {
        let ints = self.visible(|k| *k == Kind::Int);
        if !ints.is_empty() && self.rng.gen_bool(0.6) {
            Expr::Var(ints.choose(self.rng).unwrap().0.clone())
        } else {
            Expr::Nat(self.rng.gen_range(0..=3))
        }
    }

    fn expr(&mut self, depth: usize) -> Expr {
        let lists = self.visible(|k| *k == Kind::List);
        let cursors = self.visible(|k| matches!(k, Kind::Cursor(_)));
        match self.rng.gen_range(0..8) {
            0 | 1 if depth > 0 => Expr::Arith {
                op: *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]
                    .choose(self.rng)
                    .unwrap(),
                lhs: Box::new(self.expr(depth - 1)),
                rhs: Box::new(self.expr(depth - 1)),
            },
            2 if depth > 0 => Expr::Neg(Box::new(self.expr(depth - 1))),
            3 if !lists.is_empty() => Expr::Head(lists.choose(self.rng).unwrap().0.clone()),
            4 if !cursors.is_empty() => {
                let (c, k) = cursors.choose(self.rng).unwrap().clone();
                let Kind::Cursor(t) = k else { unreachable!() };
                let attribute = self.tables[t].attributes.choose(self.rng).unwrap().clone();
                Expr::Column { cursor: c, attribute }
            }
            _ => self.leaf(),
        }
    }

    fn cmp_op(&mut self) -> CmpOp {
        *[CmpOp::Lt, CmpOp::Eq, CmpOp::Gt].choose(self.rng).unwrap()
    }

    fn cond(&mut self, depth: usize) -> Cond {
        let lists = self.visible(|k| *k == Kind::List);
        match self.rng.gen_range(0..7) {
            0 if depth > 0 => Cond::Bin {
                op: if self.rng.gen_bool(0.5) { BoolOp::And } else { BoolOp::Or },
                lhs: Box::new(self.cond(depth - 1)),
                rhs: Box::new(self.cond(depth - 1)),
            },
            1 if depth > 0 => Cond::Not(Box::new(self.cond(depth - 1))),
            2 if !lists.is_empty() => Cond::IsNil(lists.choose(self.rng).unwrap().0.clone()),
            _ => Cond::Cmp {
                lhs: self.expr(1),
                op: self.cmp_op(),
                rhs: self.expr(0),
            },
        }
    }

    fn db_cond(&mut self, t: usize, depth: usize) -> DbCond {
        match self.rng.gen_range(0..8) {
            0 => DbCond::True,
            1 if depth > 0 => DbCond::Bin {
                op: if self.rng.gen_bool(0.5) { BoolOp::And } else { BoolOp::Or },
                lhs: Box::new(self.db_cond(t, depth - 1)),
                rhs: Box::new(self.db_cond(t, depth - 1)),
            },
            2 if depth > 0 => DbCond::Not(Box::new(self.db_cond(t, depth - 1))),
            _ => {
                let attribute = self.tables[t].attributes.choose(self.rng).unwrap().clone();
                let rhs = if self.rng.gen_bool(0.2) {
                    Expr::Var(self.tables[t].attributes.choose(self.rng).unwrap().clone())
                } else {
                    self.expr(1)
                };
                DbCond::Cmp {
                    attribute,
                    op: self.cmp_op(),
                    rhs,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn respects_shape_bounds() {
        let cfg = GenConfig::default();
        for m in random_models(7, 60, &cfg) {
            let decl = &m.model;
            assert!(decl.tables.len() <= cfg.max_tables);
            assert!(decl.tables.iter().all(|t| t.attributes.len() <= cfg.max_attributes));
            assert!(decl.interior_len() <= cfg.max_stmts, "{}", pretty_print(decl));
        }
    }

    #[test]
    fn mostly_accepted_by_the_checker() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = GenConfig::default();
        let ok = (0..200)
            .filter(|_| load_model(&pretty_print(&random_decl(&mut rng, &cfg))).is_ok())
            .count();
        assert!(ok >= 150, "only {ok} of 200 accepted");
    }

    #[test]
    fn same_seed_same_models() {
        let cfg = GenConfig::default();
        let a: Vec<_> = random_models(11, 5, &cfg).into_iter().map(|m| m.model).collect();
        let b: Vec<_> = random_models(11, 5, &cfg).into_iter().map(|m| m.model).collect();
        assert_eq!(a, b);
    }
}
