use super::SymState;
use crate::frontend::{BoolOp, CheckedModel, Cond, DbCond, Expr};
use crate::ir::{Formula, IntTerm, ListTerm, Rel, SetTerm};

/// A translated expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Int(IntTerm),
    List(ListTerm),
}

impl Term {
    pub fn into_int(self) -> IntTerm {
        match self {
            Term::Int(t) => t,
            Term::List(_) => unreachable!("type-checked int expression"),
        }
    }

    pub fn into_list(self) -> ListTerm {
        match self {
            Term::List(t) => t,
            Term::Int(_) => unreachable!("type-checked list expression"),
        }
    }
}

/// Row in scope for attribute names: (table index, quantified row name).
pub type RowScope = Option<(usize, &'static str)>;

fn list_var(st: &SymState, v: &str) -> ListTerm {
    ListTerm::Var(st.env[v])
}

/// Structure-directed translation; attributes of the row in scope shadow
/// program variables.
pub fn translate_expr(model: &CheckedModel, st: &SymState, e: &Expr, row: RowScope) -> Term {
    match e {
        Expr::Var(v) => {
            if let Some((t, r)) = row {
                if let Some(a) = model.schema.tables[t].attr(v) {
                    return Term::Int(IntTerm::Field(r, a));
                }
            }
            let id = st.env[v.as_str()];
            match model.var_types.get(v.as_str()) {
                Some(crate::frontend::VarType::List) => Term::List(ListTerm::Var(id)),
                _ => Term::Int(IntTerm::Var(id)),
            }
        }
        Expr::Nat(n) => Term::Int(IntTerm::Lit(*n)),
        Expr::Arith { op, lhs, rhs } => Term::Int(IntTerm::Arith(
            *op,
            Box::new(translate_expr(model, st, lhs, row).into_int()),
            Box::new(translate_expr(model, st, rhs, row).into_int()),
        )),
        Expr::Neg(e) => Term::Int(IntTerm::Neg(Box::new(
            translate_expr(model, st, e, row).into_int(),
        ))),
        Expr::Head(v) => Term::Int(IntTerm::Head(Box::new(list_var(st, v)))),
        Expr::Tail(v) => Term::List(ListTerm::Tail(Box::new(list_var(st, v)))),
        Expr::Column { cursor, attribute } => {
            let t = model.table_of_cursor(cursor).expect("checked cursor");
            let ts = &model.schema.tables[t];
            Term::Int(IntTerm::Pick {
                set: Box::new(SetTerm::Var(st.env[cursor.as_str()])),
                key: ts.pk,
                attr: ts.attr(attribute).expect("checked attribute"),
            })
        }
        Expr::Nil => Term::List(ListTerm::Nil),
        Expr::Cons { head, tail } => Term::List(ListTerm::Cons(
            Box::new(translate_expr(model, st, head, row).into_int()),
            Box::new(translate_expr(model, st, tail, row).into_list()),
        )),
    }
}

pub fn translate_int(model: &CheckedModel, st: &SymState, e: &Expr, row: RowScope) -> IntTerm {
    translate_expr(model, st, e, row).into_int()
}

fn bin(op: BoolOp, l: Formula, r: Formula) -> Formula {
    Formula::group(match op {
        BoolOp::And => Formula::And(vec![l, r]),
        BoolOp::Or => Formula::Or(vec![l, r]),
    })
}

pub fn translate_cond(model: &CheckedModel, st: &SymState, c: &Cond) -> Formula {
    match c {
        Cond::True => Formula::tt(),
        Cond::False => Formula::ff(),
        Cond::Bin { op, lhs, rhs } => bin(
            *op,
            translate_cond(model, st, lhs),
            translate_cond(model, st, rhs),
        ),
        Cond::Not(c) => Formula::not(translate_cond(model, st, c)),
        Cond::Cmp { lhs, op, rhs } => Formula::group(Formula::Cmp(
            translate_int(model, st, lhs, None),
            Rel::from(*op),
            translate_int(model, st, rhs, None),
        )),
        Cond::IsNil(v) => Formula::ListEq(list_var(st, v), ListTerm::Nil),
    }
}

/// WHERE condition over table `t` with the row bound to `row`.
pub fn translate_db_cond(
    model: &CheckedModel,
    st: &SymState,
    c: &DbCond,
    t: usize,
    row: &'static str,
) -> Formula {
    match c {
        DbCond::True => Formula::tt(),
        DbCond::False => Formula::ff(),
        DbCond::Bin { op, lhs, rhs } => bin(
            *op,
            translate_db_cond(model, st, lhs, t, row),
            translate_db_cond(model, st, rhs, t, row),
        ),
        DbCond::Not(c) => Formula::not(translate_db_cond(model, st, c, t, row)),
        DbCond::Cmp { attribute, op, rhs } => {
            let a = model.schema.tables[t].attr(attribute).expect("checked attribute");
            Formula::group(Formula::Cmp(
                IntTerm::Field(row, a),
                Rel::from(*op),
                translate_int(model, st, rhs, Some((t, row))),
            ))
        }
    }
}
