use super::ast::*;
use super::lexer::Pos;
use super::Diagnostic;
use crate::word::Bitwidth;
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarType {
    Int,
    List,
    /// Result of a SELECT over the named table.
    Table(String),
}

impl std::fmt::Display for VarType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarType::Int => f.write_str("int"),
            VarType::List => f.write_str("list"),
            VarType::Table(t) => write!(f, "table({t})"),
        }
    }
}

/// Index-resolved view of one table declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub attributes: Vec<String>,
    pub pk: usize,
    /// (attribute index, referenced table index), declaration order.
    pub fks: Vec<(usize, usize)>,
    /// (attribute index, comparator, bound), declaration order.
    pub constraints: Vec<(usize, CmpOp, u64)>,
    /// (referencing table index, index into that table's `fks`).
    pub incoming: Vec<(usize, usize)>,
}

impl TableSchema {
    pub fn attr(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    pub tables: Vec<TableSchema>,
    /// Referenced tables before the tables referencing them.
    pub topo_order: Vec<usize>,
}

impl Schema {
    pub fn table(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedModel {
    pub model: ModelDecl,
    pub var_types: BTreeMap<Ident, VarType>,
    pub schema: Schema,
}

impl CheckedModel {
    pub fn table_of_cursor(&self, var: &str) -> Option<usize> {
        match self.var_types.get(var)? {
            VarType::Table(t) => self.schema.table(t),
            _ => None,
        }
    }

    /// Literals that do not fit the signed range of `w`; they wrap at run time.
    pub fn literal_warnings(&self, w: Bitwidth) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let max = w.max_value() as u64;
        for t in &self.model.tables {
            for c in &t.constraints {
                if c.bound > max {
                    out.push(Diagnostic::warning(
                        t.pos,
                        format!(
                            "bound {} on `{}.{}` exceeds the {w} range and wraps to {}",
                            c.bound,
                            t.name,
                            c.attribute,
                            w.natural(c.bound)
                        ),
                    ));
                }
            }
        }
        self.model.for_each_stmt(|s| {
            let mut lits = Vec::new();
            stmt_literals(s, &mut lits);
            for n in lits {
                if n > max {
                    out.push(Diagnostic::warning(
                        s.pos,
                        format!(
                            "literal {n} exceeds the {w} range and wraps to {}",
                            w.natural(n)
                        ),
                    ));
                }
            }
        });
        out
    }
}

fn stmt_literals(s: &Stmt, out: &mut Vec<u64>) {
    fn expr(e: &Expr, out: &mut Vec<u64>) {
        match e {
            Expr::Nat(n) => out.push(*n),
            Expr::Arith { lhs, rhs, .. } => {
                expr(lhs, out);
                expr(rhs, out);
            }
            Expr::Neg(e) => expr(e, out),
            Expr::Cons { head, tail } => {
                expr(head, out);
                expr(tail, out);
            }
            _ => {}
        }
    }
    fn cond(c: &Cond, out: &mut Vec<u64>) {
        match c {
            Cond::Bin { lhs, rhs, .. } => {
                cond(lhs, out);
                cond(rhs, out);
            }
            Cond::Not(c) => cond(c, out),
            Cond::Cmp { lhs, rhs, .. } => {
                expr(lhs, out);
                expr(rhs, out);
            }
            _ => {}
        }
    }
    fn db(c: &DbCond, out: &mut Vec<u64>) {
        match c {
            DbCond::Bin { lhs, rhs, .. } => {
                db(lhs, out);
                db(rhs, out);
            }
            DbCond::Not(c) => db(c, out),
            DbCond::Cmp { rhs, .. } => expr(rhs, out),
            _ => {}
        }
    }
    fn write(w: &DbWrite, out: &mut Vec<u64>) {
        match w {
            DbWrite::Insert { values, .. } => values.iter().for_each(|v| expr(v, out)),
            DbWrite::Update { value, cond, .. } => {
                expr(value, out);
                db(cond, out);
            }
            DbWrite::Delete { cond, .. } => db(cond, out),
        }
    }
    match &s.kind {
        StmtKind::If { cond: c, .. } | StmtKind::While { cond: c, .. } => cond(c, out),
        StmtKind::Assign { expr: e, .. } => expr(e, out),
        StmtKind::Select { cond, .. } => db(cond, out),
        StmtKind::Write(w) | StmtKind::CatchWrite { write: w, .. } => write(w, out),
        _ => {}
    }
}

/// Validate schema and program; all errors are reported, in source order.
pub fn check(model: ModelDecl) -> Result<CheckedModel, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let schema = check_schema(&model, &mut errors);
    let mut cx = Checker {
        schema: &schema,
        types: BTreeMap::new(),
        scopes: vec![HashSet::new()],
        errors: &mut errors,
    };
    cx.block(&model.body);
    let var_types = cx.types;
    if errors.is_empty() {
        Ok(CheckedModel {
            model,
            var_types,
            schema,
        })
    } else {
        Err(errors)
    }
}

fn check_schema(model: &ModelDecl, errors: &mut Vec<Diagnostic>) -> Schema {
    let mut seen = HashSet::new();
    for t in &model.tables {
        if !seen.insert(t.name.as_str()) {
            errors.push(Diagnostic::error(
                t.pos,
                format!("table `{}` is declared twice", t.name),
            ));
        }
    }
    let index: HashMap<&str, usize> = model
        .tables
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();

    let mut tables = Vec::new();
    for t in &model.tables {
        let mut attrs = HashSet::new();
        for a in &t.attributes {
            if !attrs.insert(a.as_str()) {
                errors.push(Diagnostic::error(
                    t.pos,
                    format!("attribute `{a}` appears twice in table `{}`", t.name),
                ));
            }
        }
        let attr = |a: &str| t.attributes.iter().position(|x| x == a);
        let pk = attr(&t.primary_key).unwrap_or_else(|| {
            errors.push(Diagnostic::error(
                t.pos,
                format!(
                    "primary key `{}` is not an attribute of table `{}`",
                    t.primary_key, t.name
                ),
            ));
            0
        });
        let mut fks = Vec::new();
        let mut fk_seen = HashSet::new();
        for fk in &t.foreign_keys {
            let a = attr(&fk.attribute);
            let r = index.get(fk.table.as_str()).copied();
            if a.is_none() {
                errors.push(Diagnostic::error(
                    t.pos,
                    format!(
                        "foreign key `{}` is not an attribute of table `{}`",
                        fk.attribute, t.name
                    ),
                ));
            }
            if r.is_none() {
                errors.push(Diagnostic::error(
                    t.pos,
                    format!(
                        "table `{}` references unknown table `{}`",
                        t.name, fk.table
                    ),
                ));
            }
            if !fk_seen.insert((fk.attribute.as_str(), fk.table.as_str())) {
                errors.push(Diagnostic::error(
                    t.pos,
                    format!(
                        "foreign key `{}` to `{}` is declared twice",
                        fk.attribute, fk.table
                    ),
                ));
            }
            if let (Some(a), Some(r)) = (a, r) {
                fks.push((a, r));
            }
        }
        let mut constraints = Vec::new();
        for c in &t.constraints {
            match attr(&c.attribute) {
                Some(a) => constraints.push((a, c.op, c.bound)),
                None => errors.push(Diagnostic::error(
                    t.pos,
                    format!(
                        "constrained attribute `{}` is not an attribute of table `{}`",
                        c.attribute, t.name
                    ),
                )),
            }
        }
        tables.push(TableSchema {
            name: t.name.clone(),
            attributes: t.attributes.clone(),
            pk,
            fks,
            constraints,
            incoming: Vec::new(),
        });
    }
    for i in 0..tables.len() {
        for k in 0..tables[i].fks.len() {
            let r = tables[i].fks[k].1;
            tables[r].incoming.push((i, k));
        }
    }

    // Depth-first topological sort; a grey node reached again closes a cycle.
    let n = tables.len();
    let mut state = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    let mut cyclic = Vec::new();
    fn visit(
        i: usize,
        tables: &[TableSchema],
        state: &mut [u8],
        order: &mut Vec<usize>,
        cyclic: &mut Vec<usize>,
    ) {
        state[i] = 1;
        for &(_, r) in &tables[i].fks {
            match state[r] {
                0 => visit(r, tables, state, order, cyclic),
                1 => cyclic.push(i),
                _ => {}
            }
        }
        state[i] = 2;
        order.push(i);
    }
    for i in 0..n {
        if state[i] == 0 {
            visit(i, &tables, &mut state, &mut order, &mut cyclic);
        }
    }
    cyclic.sort_unstable();
    cyclic.dedup();
    for i in cyclic {
        errors.push(Diagnostic::error(
            model.tables[i].pos,
            format!(
                "foreign keys of table `{}` close a reference cycle",
                tables[i].name
            ),
        ));
    }
    Schema {
        tables,
        topo_order: order,
    }
}

struct Checker<'a> {
    schema: &'a Schema,
    types: BTreeMap<Ident, VarType>,
    scopes: Vec<HashSet<Ident>>,
    errors: &'a mut Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn err(&mut self, pos: Pos, msg: String) {
        self.errors.push(Diagnostic::error(pos, msg));
    }

    fn visible(&self, v: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(v))
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn nested(&mut self, stmts: &[Stmt]) {
        self.scopes.push(HashSet::new());
        self.block(stmts);
        self.scopes.pop();
    }

    fn define(&mut self, pos: Pos, v: &str, ty: VarType) {
        if self.schema.table(v).is_some() {
            self.err(pos, format!("variable `{v}` has the name of a table"));
        }
        match self.types.get(v) {
            Some(old) if *old != ty => {
                let old = old.clone();
                self.err(
                    pos,
                    format!("variable `{v}` changes type from {old} to {ty}"),
                );
            }
            Some(_) => {}
            None => {
                self.types.insert(v.to_string(), ty);
            }
        }
        if !self.visible(v) {
            self.scopes.last_mut().unwrap().insert(v.to_string());
        }
    }

    /// Type of a variable use, or `None` after reporting an error.
    fn use_var(&mut self, pos: Pos, v: &str) -> Option<VarType> {
        if !self.visible(v) {
            let msg = if self.types.contains_key(v) {
                format!("variable `{v}` is used outside the block that initializes it")
            } else {
                format!("variable `{v}` is used before initialization")
            };
            self.err(pos, msg);
            return None;
        }
        self.types.get(v).cloned()
    }

    fn want(&mut self, pos: Pos, v: &str, want: &VarType) {
        if let Some(ty) = self.use_var(pos, v) {
            if ty != *want {
                let what = match want {
                    VarType::Int => "an int",
                    VarType::List => "a list",
                    VarType::Table(_) => "a table",
                };
                self.err(pos, format!("`{v}` is {ty}, expected {what}"));
            }
        }
    }

    fn cursor(&mut self, pos: Pos, v: &str) -> Option<usize> {
        match self.use_var(pos, v)? {
            VarType::Table(t) => self.schema.table(&t),
            ty => {
                self.err(pos, format!("`{v}` is {ty}, expected a SELECT result"));
                None
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        let pos = s.pos;
        match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.cond(pos, cond);
                self.nested(then_branch);
                self.nested(else_branch);
            }
            StmtKind::While { cond, body } => {
                self.cond(pos, cond);
                self.nested(body);
            }
            StmtKind::Assign { target, expr } => {
                if let Some(ty) = self.expr(pos, expr, None) {
                    self.define(pos, target, ty);
                }
            }
            StmtKind::Read(v) => self.define(pos, v, VarType::Int),
            StmtKind::Load(v) => self.define(pos, v, VarType::List),
            StmtKind::Select {
                target,
                columns,
                table,
                cond,
            } => match self.schema.table(table) {
                Some(t) => {
                    for c in columns {
                        if self.schema.tables[t].attr(c).is_none() {
                            self.err(
                                pos,
                                format!("`{c}` is not an attribute of table `{table}`"),
                            );
                        }
                    }
                    self.db_cond(pos, cond, t);
                    self.define(pos, target, VarType::Table(table.clone()));
                }
                None => self.err(pos, format!("unknown table `{table}`")),
            },
            StmtKind::Next(c) => {
                self.cursor(pos, c);
            }
            StmtKind::CatchNext { flag, cursor } => {
                self.cursor(pos, cursor);
                self.define(pos, flag, VarType::Int);
            }
            StmtKind::Write(w) => self.write(pos, w),
            StmtKind::CatchWrite { flag, write } => {
                self.write(pos, write);
                self.define(pos, flag, VarType::Int);
            }
            StmtKind::Commit | StmtKind::Rollback => {}
        }
    }

    fn write(&mut self, pos: Pos, w: &DbWrite) {
        let Some(t) = self.schema.table(w.table()) else {
            self.err(pos, format!("unknown table `{}`", w.table()));
            return;
        };
        match w {
            DbWrite::Insert { table, values } => {
                let arity = self.schema.tables[t].arity();
                if values.len() != arity {
                    self.err(
                        pos,
                        format!(
                            "INSERT INTO `{table}` gives {} values for {arity} attributes",
                            values.len()
                        ),
                    );
                }
                for v in values {
                    self.int_expr(pos, v, None);
                }
            }
            DbWrite::Update {
                table,
                attribute,
                value,
                cond,
            } => {
                if self.schema.tables[t].attr(attribute).is_none() {
                    self.err(
                        pos,
                        format!("`{attribute}` is not an attribute of table `{table}`"),
                    );
                }
                self.int_expr(pos, value, Some(t));
                self.db_cond(pos, cond, t);
            }
            DbWrite::Delete { cond, .. } => self.db_cond(pos, cond, t),
        }
    }

    fn cond(&mut self, pos: Pos, c: &Cond) {
        match c {
            Cond::True | Cond::False => {}
            Cond::Bin { lhs, rhs, .. } => {
                self.cond(pos, lhs);
                self.cond(pos, rhs);
            }
            Cond::Not(c) => self.cond(pos, c),
            Cond::Cmp { lhs, rhs, .. } => {
                self.int_expr(pos, lhs, None);
                self.int_expr(pos, rhs, None);
            }
            Cond::IsNil(v) => self.want(pos, v, &VarType::List),
        }
    }

    fn db_cond(&mut self, pos: Pos, c: &DbCond, table: usize) {
        match c {
            DbCond::True | DbCond::False => {}
            DbCond::Bin { lhs, rhs, .. } => {
                self.db_cond(pos, lhs, table);
                self.db_cond(pos, rhs, table);
            }
            DbCond::Not(c) => self.db_cond(pos, c, table),
            DbCond::Cmp { attribute, rhs, .. } => {
                let t = &self.schema.tables[table];
                if t.attr(attribute).is_none() {
                    let msg = format!("`{attribute}` is not an attribute of table `{}`", t.name);
                    self.err(pos, msg);
                }
                self.int_expr(pos, rhs, Some(table));
            }
        }
    }

    fn int_expr(&mut self, pos: Pos, e: &Expr, table: Option<usize>) {
        if let Some(ty) = self.expr(pos, e, table) {
            if ty != VarType::Int {
                self.err(pos, format!("expected an int expression, found a {ty}"));
            }
        }
    }

    fn list_expr(&mut self, pos: Pos, e: &Expr, table: Option<usize>) {
        if let Some(ty) = self.expr(pos, e, table) {
            if ty != VarType::List {
                self.err(pos, format!("expected a list expression, found a {ty}"));
            }
        }
    }

    /// `table` is the table in scope inside WHERE and SET clauses, whose
    /// attributes shadow program variables.
    fn expr(&mut self, pos: Pos, e: &Expr, table: Option<usize>) -> Option<VarType> {
        match e {
            Expr::Var(v) => {
                if let Some(t) = table {
                    if self.schema.tables[t].attr(v).is_some() {
                        return Some(VarType::Int);
                    }
                }
                match self.use_var(pos, v)? {
                    VarType::Table(_) => {
                        self.err(pos, format!("table variable `{v}` used as a value"));
                        None
                    }
                    ty => Some(ty),
                }
            }
            Expr::Nat(_) => Some(VarType::Int),
            Expr::Arith { lhs, rhs, .. } => {
                self.int_expr(pos, lhs, table);
                self.int_expr(pos, rhs, table);
                Some(VarType::Int)
            }
            Expr::Neg(e) => {
                self.int_expr(pos, e, table);
                Some(VarType::Int)
            }
            Expr::Head(v) => {
                self.want(pos, v, &VarType::List);
                Some(VarType::Int)
            }
            Expr::Column { cursor, attribute } => {
                if let Some(t) = self.cursor(pos, cursor) {
                    let ts = &self.schema.tables[t];
                    if ts.attr(attribute).is_none() {
                        let msg =
                            format!("`{attribute}` is not an attribute of table `{}`", ts.name);
                        self.err(pos, msg);
                    }
                }
                Some(VarType::Int)
            }
            Expr::Nil => Some(VarType::List),
            Expr::Cons { head, tail } => {
                self.int_expr(pos, head, table);
                self.list_expr(pos, tail, table);
                Some(VarType::List)
            }
            Expr::Tail(v) => {
                self.want(pos, v, &VarType::List);
                Some(VarType::List)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn check_src(src: &str) -> Result<CheckedModel, Vec<Diagnostic>> {
        check(parse_source(src).unwrap())
    }

    fn errs(src: &str) -> Vec<String> {
        check_src(src)
            .unwrap_err()
            .into_iter()
            .map(|d| d.message)
            .collect()
    }

    #[test]
    fn fk_cycle_rejected() {
        let e = errs(
            "MODEL m TABLE a (x,y,PRIMARY KEY(x),FOREIGN KEY(y) REFERENCES b); TABLE b (x,y,PRIMARY KEY(x),FOREIGN KEY(y) REFERENCES a); COMMIT(); COMMIT(); ENDMODEL",
        );
        assert!(e.iter().any(|m| m.contains("cycle")), "{e:?}");
        let e = errs("MODEL m TABLE a (x,y,PRIMARY KEY(x),FOREIGN KEY(y) REFERENCES a); COMMIT(); COMMIT(); ENDMODEL");
        assert!(e.iter().any(|m| m.contains("cycle")));
    }

    #[test]
    fn type_change_rejected() {
        let e = errs("MODEL m COMMIT(); x = 1; x = NIL; COMMIT(); ENDMODEL");
        assert!(e[0].contains("changes type"));
    }

    #[test]
    fn block_scoping() {
        let e = errs("MODEL m COMMIT(); IF TRUE THEN x = 1; ELSE ENDIF; y = x; COMMIT(); ENDMODEL");
        assert!(e[0].contains("outside the block"));
        assert!(check_src(
            "MODEL m COMMIT(); x = 0; IF TRUE THEN x = 1; ELSE ENDIF; y = x; COMMIT(); ENDMODEL"
        )
        .is_ok());
        let e = errs("MODEL m COMMIT(); y = z; COMMIT(); ENDMODEL");
        assert!(e[0].contains("before initialization"));
    }

    #[test]
    fn attribute_shadows_variable() {
        let m = check_src(
            "MODEL m TABLE t (name,PRIMARY KEY(name)); COMMIT(); name = NIL; r = SELECT name FROM t WHERE (name = name); COMMIT(); ENDMODEL",
        );
        assert!(m.is_ok());
    }

    #[test]
    fn cursor_and_insert_rules() {
        let t = "TABLE t (a,b,PRIMARY KEY(a));";
        let e = errs(&format!("MODEL m {t} COMMIT(); x = 1; NEXT(x); COMMIT(); ENDMODEL"));
        assert!(e[0].contains("SELECT result"));
        let e = errs(&format!(
            "MODEL m {t} COMMIT(); INSERT INTO t VALUES (1); COMMIT(); ENDMODEL"
        ));
        assert!(e[0].contains("1 values for 2"));
        let e = errs(&format!(
            "MODEL m {t} COMMIT(); r = SELECT a FROM t WHERE TRUE; NEXT(r); y = r(c); COMMIT(); ENDMODEL"
        ));
        assert!(e[0].contains("not an attribute"));
    }

    #[test]
    fn schema_reference_errors() {
        let e = errs("MODEL m TABLE t (a,PRIMARY KEY(b),FOREIGN KEY(a) REFERENCES u,c > 1); COMMIT(); COMMIT(); ENDMODEL");
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn topological_order_puts_referenced_first() {
        let m = check_src(
            "MODEL m TABLE p (x,y,PRIMARY KEY(x),FOREIGN KEY(y) REFERENCES q); TABLE q (x,PRIMARY KEY(x)); COMMIT(); COMMIT(); ENDMODEL",
        )
        .unwrap();
        assert_eq!(m.schema.topo_order, vec![1, 0]);
        assert_eq!(m.schema.tables[1].incoming, vec![(0, 0)]);
    }

    #[test]
    fn literal_warning() {
        let m = check_src("MODEL m COMMIT(); x = 9; COMMIT(); ENDMODEL").unwrap();
        let w = m.literal_warnings(Bitwidth::default());
        assert_eq!(w.len(), 1);
        assert!(w[0].message.contains("wraps to -7"));
    }
}
