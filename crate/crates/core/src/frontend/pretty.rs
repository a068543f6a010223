use super::ast::*;
use std::fmt::Write;

/// Render a model as source text accepted by the parser.
pub fn pretty_print(model: &ModelDecl) -> String {
    let mut out = String::new();
    writeln!(out, "MODEL {}", model.name).unwrap();
    for t in &model.tables {
        out.push_str(&table(t));
        out.push('\n');
    }
    out.push_str("COMMIT();\n");
    block(&mut out, &model.body, 0);
    out.push_str("COMMIT();\nENDMODEL\n");
    out
}

fn table(t: &TableDecl) -> String {
    let mut s = format!("TABLE {} (", t.name);
    for a in &t.attributes {
        s.push_str(a);
        s.push(',');
    }
    write!(s, "PRIMARY KEY({})", t.primary_key).unwrap();
    for fk in &t.foreign_keys {
        write!(s, ",FOREIGN KEY({}) REFERENCES {}", fk.attribute, fk.table).unwrap();
    }
    for c in &t.constraints {
        write!(s, ",{} {} {}", c.attribute, c.op.as_str(), c.bound).unwrap();
    }
    s.push_str(");");
    s
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "\t".repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::If {
            cond: c,
            then_branch,
            else_branch,
        } => {
            writeln!(out, "IF {} THEN", cond(c)).unwrap();
            block(out, then_branch, depth + 1);
            writeln!(out, "{pad}ELSE").unwrap();
            block(out, else_branch, depth + 1);
            writeln!(out, "{pad}ENDIF;").unwrap();
        }
        StmtKind::While { cond: c, body } => {
            writeln!(out, "WHILE {} DO", cond(c)).unwrap();
            block(out, body, depth + 1);
            writeln!(out, "{pad}ENDWHILE;").unwrap();
        }
        StmtKind::Assign { target, expr: e } => writeln!(out, "{target} = {};", expr(e)).unwrap(),
        StmtKind::Read(v) => writeln!(out, "READ({v});").unwrap(),
        StmtKind::Load(v) => writeln!(out, "LOAD({v});").unwrap(),
        StmtKind::Select {
            target,
            columns,
            table,
            cond,
        } => writeln!(
            out,
            "{target} = SELECT {} FROM {table} WHERE {};",
            columns.join(","),
            db_cond(cond)
        )
        .unwrap(),
        StmtKind::Next(v) => writeln!(out, "NEXT({v});").unwrap(),
        StmtKind::CatchNext { flag, cursor } => {
            writeln!(out, "{flag} = CATCH(NEXT({cursor}));").unwrap()
        }
        StmtKind::Write(w) => writeln!(out, "{};", db_write(w)).unwrap(),
        StmtKind::CatchWrite { flag, write } => {
            writeln!(out, "{flag} = CATCH({});", db_write(write)).unwrap()
        }
        StmtKind::Commit => out.push_str("COMMIT();\n"),
        StmtKind::Rollback => out.push_str("ROLLBACK();\n"),
    }
}

pub fn db_write(w: &DbWrite) -> String {
    match w {
        DbWrite::Insert { table, values } => format!(
            "INSERT INTO {table} VALUES ({})",
            values.iter().map(expr).collect::<Vec<_>>().join(",")
        ),
        DbWrite::Update {
            table,
            attribute,
            value,
            cond,
        } => format!(
            "UPDATE {table} SET {attribute} = {} WHERE {}",
            expr(value),
            db_cond(cond)
        ),
        DbWrite::Delete { table, cond } => {
            format!("DELETE FROM {table} WHERE {}", db_cond(cond))
        }
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Var(v) => v.clone(),
        Expr::Nat(n) => n.to_string(),
        Expr::Arith { op, lhs, rhs } => format!("({} {} {})", expr(lhs), op.as_str(), expr(rhs)),
        Expr::Neg(e) => format!("(- {})", expr(e)),
        Expr::Head(v) => format!("{v}.HEAD"),
        Expr::Column { cursor, attribute } => format!("{cursor}({attribute})"),
        Expr::Nil => "NIL".into(),
        Expr::Cons { head, tail } => format!("[{}, {}]", expr(head), expr(tail)),
        Expr::Tail(v) => format!("{v}.TAIL"),
    }
}

pub fn cond(c: &Cond) -> String {
    match c {
        Cond::True => "TRUE".into(),
        Cond::False => "FALSE".into(),
        Cond::Bin { op, lhs, rhs } => format!("({} {} {})", cond(lhs), op.as_str(), cond(rhs)),
        Cond::Not(c) => format!("(!{})", cond(c)),
        Cond::Cmp { lhs, op, rhs } => format!("({} {} {})", expr(lhs), op.as_str(), expr(rhs)),
        Cond::IsNil(v) => format!("({v} = NIL)"),
    }
}

pub fn db_cond(c: &DbCond) -> String {
    match c {
        DbCond::True => "TRUE".into(),
        DbCond::False => "FALSE".into(),
        DbCond::Bin { op, lhs, rhs } => {
            format!("({} {} {})", db_cond(lhs), op.as_str(), db_cond(rhs))
        }
        DbCond::Not(c) => format!("(!{})", db_cond(c)),
        DbCond::Cmp { attribute, op, rhs } => {
            format!("({attribute} {} {})", op.as_str(), expr(rhs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    #[test]
    fn minimal_model_text() {
        let m = parse_source("MODEL m COMMIT(); COMMIT(); ENDMODEL").unwrap();
        let text = pretty_print(&m);
        let squashed: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(squashed, "MODEL m COMMIT(); COMMIT(); ENDMODEL");
    }

    #[test]
    fn round_trips_nested_program() {
        let src = "MODEL m TABLE t (a,b,PRIMARY KEY(a),FOREIGN KEY(b) REFERENCES u,b < 3); TABLE u (k,PRIMARY KEY(k));
            COMMIT(); LOAD(xs); WHILE (!(xs = NIL)) DO r = SELECT a,b FROM t WHERE ((a = xs.HEAD) || (!FALSE));
            e = CATCH(NEXT(r)); IF ((e = 0) && TRUE) THEN y = (r(b) / (- 2)); ELSE ys = [1, [2, xs.TAIL]]; ENDIF;
            f = CATCH(UPDATE t SET b = (b + 1) WHERE TRUE); xs = xs.TAIL; ENDWHILE; COMMIT(); ENDMODEL";
        let m = parse_source(src).unwrap();
        let again = parse_source(&pretty_print(&m)).unwrap();
        assert_eq!(m, again);
    }
}
