use super::translate::{translate_db_cond, translate_int};
use super::{Namer, SymState};
use crate::cfg::{applicable_violations, Violation};
use crate::frontend::{CheckedModel, DbWrite};
use crate::ir::*;

fn field(row: &'static str, a: usize) -> IntTerm {
    IntTerm::Field(row, a)
}

fn eq(l: IntTerm, r: IntTerm) -> Formula {
    Formula::Cmp(l, Rel::Eq, r)
}

fn over(q: Quantifier, row: &'static str, set: VarId, body: Formula) -> Formula {
    Formula::quant(q, row, Domain::Set(SetTerm::Var(set)), body)
}

/// Facts stating that `write` completes normally (`outcome` is `None`) or
/// raises the given violation, with every earlier check passing. The
/// current table variable moves only on success.
pub fn gen_dbwrite_constraints(
    model: &CheckedModel,
    cs: &mut ConstraintSystem,
    st: &mut SymState,
    namer: &mut Namer,
    write: &DbWrite,
    outcome: Option<Violation>,
) -> Result<(), String> {
    let schema = &model.schema;
    let t = schema.table(write.table()).expect("checked table");
    let ts = &schema.tables[t];
    let applicable = applicable_violations(schema, write);
    if let Some(v) = outcome {
        if !applicable.contains(&v) {
            return Err(format!("{v:?} cannot be raised by this write"));
        }
    }
    let cur = st.tables[t];
    // Checks ahead of the raised violation in canonical order.
    let earlier: Vec<Violation> = match outcome {
        Some(v) => applicable.iter().copied().take_while(|c| *c != v).collect(),
        None => applicable.clone(),
    };
    match write {
        DbWrite::Insert { values, .. } => {
            let vals: Vec<IntTerm> = values
                .iter()
                .map(|e| translate_int(model, st, e, None))
                .collect();
            // `bad` states the violation instead of the passing check.
            let check = |c: Violation, st: &SymState, bad: bool| match c {
                Violation::PrimaryKey => {
                    let q = if bad { Quantifier::Some } else { Quantifier::No };
                    over(q, "e", cur, eq(field("e", ts.pk), vals[ts.pk].clone()))
                }
                Violation::ForeignKey(i) => {
                    let (a, r) = ts.fks[i];
                    let rpk = schema.tables[r].pk;
                    let q = if bad { Quantifier::No } else { Quantifier::One };
                    over(q, "e", st.tables[r], eq(field("e", rpk), vals[a].clone()))
                }
                Violation::Arith(i) => {
                    let (a, op, bound) = ts.constraints[i];
                    let f = Formula::group(Formula::Cmp(vals[a].clone(), op.into(), IntTerm::Lit(bound)));
                    if bad {
                        Formula::not(f)
                    } else {
                        f
                    }
                }
                Violation::ReferencedRow => unreachable!("filtered by applicability"),
            };
            match outcome {
                None => {
                    let name = namer.fresh(&ts.name, Origin::Internal, true);
                    let next = cs.add_var(SymVar {
                        name,
                        sort: Sort::Table(t),
                        origin: Origin::Internal,
                        def: VarDef::Insert {
                            src: cur,
                            values: vals.clone(),
                        },
                    });
                    let mut parts = vec![Formula::SetEq(
                        SetTerm::Var(next),
                        SetTerm::Add(Box::new(SetTerm::Var(cur)), "e"),
                    )];
                    for a in (0..ts.arity()).rev() {
                        parts.push(eq(field("e", a), vals[a].clone()));
                    }
                    cs.add_fact(Formula::quant(
                        Quantifier::One,
                        "e",
                        Domain::Sort(t),
                        Formula::And(parts),
                    ));
                    for c in earlier.into_iter().filter(|c| !matches!(c, Violation::Arith(_))) {
                        cs.add_fact(check(c, st, false));
                    }
                    st.tables[t] = next;
                }
                Some(v) => {
                    for c in earlier {
                        cs.add_fact(check(c, st, false));
                    }
                    cs.add_fact(check(v, st, true));
                }
            }
        }
        DbWrite::Update {
            attribute,
            value,
            cond,
            ..
        } => {
            let attr = ts.attr(attribute).expect("checked attribute");
            let c = |row: &'static str| translate_db_cond(model, st, cond, t, row);
            let v = |row: &'static str| translate_int(model, st, value, Some((t, row)));
            let new = |row: &'static str, x: usize| {
                if x == attr {
                    IntTerm::Ite(Box::new(c(row)), Box::new(v(row)), Box::new(field(row, x)))
                } else {
                    field(row, x)
                }
            };
            let holds = |k: Violation| match k {
                Violation::PrimaryKey => Formula::Quant {
                    q: Quantifier::All,
                    disj: true,
                    vars: vec!["o", "p"],
                    domain: Domain::Set(SetTerm::Var(cur)),
                    body: Box::new(Formula::not(Formula::group(eq(new("o", ts.pk), new("p", ts.pk))))),
                },
                Violation::ForeignKey(i) => {
                    let r = ts.fks[i].1;
                    let rpk = schema.tables[r].pk;
                    over(
                        Quantifier::All,
                        "o",
                        cur,
                        Formula::implies(
                            c("o"),
                            over(Quantifier::Some, "r", st.tables[r], eq(field("r", rpk), v("o"))),
                        ),
                    )
                }
                Violation::Arith(i) => {
                    let (_, op, bound) = ts.constraints[i];
                    over(
                        Quantifier::All,
                        "o",
                        cur,
                        Formula::implies(
                            c("o"),
                            Formula::Cmp(v("o"), op.into(), IntTerm::Lit(bound)),
                        ),
                    )
                }
                Violation::ReferencedRow => over(
                    Quantifier::All,
                    "o",
                    cur,
                    Formula::implies(
                        Formula::And(vec![
                            c("o"),
                            Formula::not(Formula::group(eq(v("o"), field("o", ts.pk)))),
                        ]),
                        unreferenced(model, st, t, "o"),
                    ),
                ),
            };
            match outcome {
                None => {
                    let name = namer.fresh(&ts.name, Origin::Internal, true);
                    let next = cs.add_var(SymVar {
                        name,
                        sort: Sort::Table(t),
                        origin: Origin::Internal,
                        def: VarDef::Update {
                            src: cur,
                            row: "o",
                            attr,
                            value: v("o"),
                            cond: c("o"),
                        },
                    });
                    let same = Formula::And(
                        (0..ts.arity()).map(|x| eq(field("e", x), new("o", x))).collect(),
                    );
                    cs.add_fact(over(
                        Quantifier::All,
                        "o",
                        cur,
                        over(Quantifier::Some, "e", next, same.clone()),
                    ));
                    cs.add_fact(over(
                        Quantifier::All,
                        "e",
                        next,
                        over(Quantifier::Some, "o", cur, same),
                    ));
                    for k in earlier {
                        cs.add_fact(holds(k));
                    }
                    st.tables[t] = next;
                }
                Some(k) => {
                    for k in earlier {
                        cs.add_fact(holds(k));
                    }
                    cs.add_fact(Formula::not(Formula::group(holds(k))));
                }
            }
        }
        DbWrite::Delete { cond, .. } => {
            let c = |row: &'static str| translate_db_cond(model, st, cond, t, row);
            let check = || {
                over(
                    Quantifier::All,
                    "o",
                    cur,
                    Formula::implies(c("o"), unreferenced(model, st, t, "o")),
                )
            };
            match outcome {
                None => {
                    let name = namer.fresh(&ts.name, Origin::Internal, true);
                    let next = cs.add_var(SymVar {
                        name,
                        sort: Sort::Table(t),
                        origin: Origin::Internal,
                        def: VarDef::Delete {
                            src: cur,
                            row: "o",
                            cond: c("o"),
                        },
                    });
                    cs.add_fact(Formula::quant(
                        Quantifier::All,
                        "e",
                        Domain::Sort(t),
                        Formula::iff(
                            Formula::group(Formula::And(vec![
                                Formula::In("e", SetTerm::Var(cur)),
                                Formula::not(c("e")),
                            ])),
                            Formula::In("e", SetTerm::Var(next)),
                        ),
                    ));
                    if !earlier.is_empty() {
                        cs.add_fact(check());
                    }
                    st.tables[t] = next;
                }
                Some(_) => cs.add_fact(Formula::not(Formula::group(check()))),
            }
        }
    }
    Ok(())
}

/// No current row of a referencing table points at `row`'s key.
fn unreferenced(model: &CheckedModel, st: &SymState, t: usize, row: &'static str) -> Formula {
    let ts = &model.schema.tables[t];
    Formula::and_all(
        ts.incoming
            .iter()
            .map(|&(s, k)| {
                let a = model.schema.tables[s].fks[k].0;
                over(Quantifier::No, "r", st.tables[s], eq(field("r", a), field(row, ts.pk)))
            })
            .collect(),
    )
}
