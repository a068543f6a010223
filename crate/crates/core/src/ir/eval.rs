use super::*;
use crate::interp::{Row, TestInput};
use crate::word::Bitwidth;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Val {
    Int(i64),
    List(Vec<i64>),
    Rows(BTreeSet<Row>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("variable `{0}` has no value")]
    Unassigned(String),
    #[error("quantified row `{0}` is unbound")]
    UnboundRow(&'static str),
}

/// Values of every variable plus the rows populating each table sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub bitwidth: Bitwidth,
    pub values: Vec<Option<Val>>,
    pub universe: Vec<BTreeSet<Row>>,
}

impl Assignment {
    pub fn int(&self, v: VarId) -> Option<i64> {
        match self.values.get(v)? {
            Some(Val::Int(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn list(&self, v: VarId) -> Option<&[i64]> {
        match self.values.get(v)? {
            Some(Val::List(x)) => Some(x),
            _ => None,
        }
    }

    pub fn rows(&self, v: VarId) -> Option<&BTreeSet<Row>> {
        match self.values.get(v)? {
            Some(Val::Rows(x)) => Some(x),
            _ => None,
        }
    }

    /// Program inputs decoded from the input variables.
    pub fn test_input(&self, cs: &ConstraintSystem) -> TestInput {
        let mut input = TestInput::default();
        for (id, var) in cs.vars.iter().enumerate() {
            if var.origin != Origin::Input {
                continue;
            }
            match (&var.sort, self.values.get(id).and_then(|v| v.as_ref())) {
                (Sort::Int, Some(Val::Int(x))) => input.reads.push(*x),
                (Sort::List, Some(Val::List(l))) => input.loads.push(l.clone()),
                (Sort::Table(t), Some(Val::Rows(rows))) => {
                    let sort = &cs.sorts[*t];
                    let mut rows: Vec<Row> = rows.iter().cloned().collect();
                    rows.sort_by_key(|r| r[sort.pk]);
                    input.tables.insert(sort.name.clone(), rows);
                }
                _ => {}
            }
        }
        for s in &cs.sorts {
            input.tables.entry(s.name.clone()).or_default();
        }
        input
    }
}

/// Values for the input variables taken from a test input: table contents
/// by sort, READ values and LOAD lists in variable creation order.
pub fn input_values(cs: &ConstraintSystem, input: &TestInput) -> Vec<(VarId, Val)> {
    let mut reads = input.reads.iter();
    let mut loads = input.loads.iter();
    let mut out = Vec::new();
    for (id, var) in cs.vars.iter().enumerate() {
        if var.origin != Origin::Input {
            continue;
        }
        let val = match var.sort {
            Sort::Int => reads.next().map(|x| Val::Int(*x)),
            Sort::List => loads.next().map(|l| Val::List(l.clone())),
            Sort::Table(t) => Some(Val::Rows(
                input
                    .tables
                    .get(&cs.sorts[t].name)
                    .map(|rows| rows.iter().cloned().collect())
                    .unwrap_or_default(),
            )),
        };
        if let Some(v) = val {
            out.push((id, v));
        }
    }
    out
}

/// Compute every internal variable from its definition; each sort's
/// universe is the union of the rows held by variables of that sort.
pub fn complete_assignment(
    cs: &ConstraintSystem,
    w: Bitwidth,
    inputs: &[(VarId, Val)],
) -> Result<Assignment, EvalError> {
    let mut a = Assignment {
        bitwidth: w,
        values: vec![None; cs.vars.len()],
        universe: vec![BTreeSet::new(); cs.sorts.len()],
    };
    let given: BTreeMap<VarId, &Val> = inputs.iter().map(|(k, v)| (*k, v)).collect();
    for (id, var) in cs.vars.iter().enumerate() {
        let val = match &var.def {
            VarDef::Input => given
                .get(&id)
                .map(|v| (*v).clone())
                .ok_or_else(|| EvalError::Unassigned(var.name.clone()))?,
            VarDef::Int(t) => Val::Int(int(t, &a, &mut Vec::new())?),
            VarDef::List(t) => Val::List(list(t, &a, &mut Vec::new())?),
            VarDef::Select { src, row, cond } => {
                let mut out = BTreeSet::new();
                for r in rows_of(&a, *src)? {
                    let mut env = vec![(*row, r.clone())];
                    if formula(cond, &a, &mut env)? {
                        out.insert(r.clone());
                    }
                }
                Val::Rows(out)
            }
            VarDef::Insert { src, values } => {
                let mut out = rows_of(&a, *src)?.clone();
                let row = values
                    .iter()
                    .map(|v| int(v, &a, &mut Vec::new()))
                    .collect::<Result<Row, _>>()?;
                out.insert(row);
                Val::Rows(out)
            }
            VarDef::Update {
                src,
                row,
                attr,
                value,
                cond,
            } => {
                let mut out = BTreeSet::new();
                for r in rows_of(&a, *src)? {
                    let mut env = vec![(*row, r.clone())];
                    let mut n = r.clone();
                    if formula(cond, &a, &mut env)? {
                        n[*attr] = int(value, &a, &mut env)?;
                    }
                    out.insert(n);
                }
                Val::Rows(out)
            }
            VarDef::Delete { src, row, cond } => {
                let mut out = BTreeSet::new();
                for r in rows_of(&a, *src)? {
                    let mut env = vec![(*row, r.clone())];
                    if !formula(cond, &a, &mut env)? {
                        out.insert(r.clone());
                    }
                }
                Val::Rows(out)
            }
            VarDef::DropMin { src, key } => {
                let mut out = rows_of(&a, *src)?.clone();
                if let Some(m) = min_by(&out, *key).cloned() {
                    out.remove(&m);
                }
                Val::Rows(out)
            }
        };
        if let (Sort::Table(s), Val::Rows(rows)) = (var.sort, &val) {
            a.universe[s].extend(rows.iter().cloned());
        }
        a.values[id] = Some(val);
    }
    Ok(a)
}

/// Every fact holds under `a`.
pub fn check_model(cs: &ConstraintSystem, a: &Assignment) -> Result<bool, EvalError> {
    for f in &cs.facts {
        if !evaluate(f, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index of the first fact that fails under `a`.
pub fn first_failing_fact(cs: &ConstraintSystem, a: &Assignment) -> Result<Option<usize>, EvalError> {
    for (i, f) in cs.facts.iter().enumerate() {
        if !evaluate(f, a)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

pub fn evaluate(f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    formula(f, a, &mut Vec::new())
}

type Env = Vec<(&'static str, Row)>;

fn bound<'e>(env: &'e Env, name: &'static str) -> Result<&'e Row, EvalError> {
    env.iter()
        .rev()
        .find(|(n, _)| *n == name)
        .map(|(_, r)| r)
        .ok_or(EvalError::UnboundRow(name))
}

fn rows_of(a: &Assignment, v: VarId) -> Result<&BTreeSet<Row>, EvalError> {
    match a.values.get(v) {
        Some(Some(Val::Rows(r))) => Ok(r),
        Some(Some(_)) => Err(EvalError::SortMismatch(format!("variable {v} is not a table"))),
        _ => Err(EvalError::Unassigned(format!("#{v}"))),
    }
}

fn min_by(rows: &BTreeSet<Row>, key: usize) -> Option<&Row> {
    rows.iter().min_by_key(|r| r[key])
}

fn int(t: &IntTerm, a: &Assignment, env: &mut Env) -> Result<i64, EvalError> {
    let w = a.bitwidth;
    Ok(match t {
        IntTerm::Lit(n) => w.natural(*n),
        IntTerm::Var(v) => match a.values.get(*v) {
            Some(Some(Val::Int(x))) => *x,
            Some(Some(_)) => {
                return Err(EvalError::SortMismatch(format!("variable {v} is not an int")))
            }
            _ => return Err(EvalError::Unassigned(format!("#{v}"))),
        },
        IntTerm::Field(b, attr) => {
            let row = bound(env, b)?;
            *row.get(*attr)
                .ok_or_else(|| EvalError::SortMismatch(format!("row `{b}` has no attribute {attr}")))?
        }
        IntTerm::Arith(op, l, r) => {
            let (x, y) = (int(l, a, env)?, int(r, a, env)?);
            match op {
                ArithOp::Add => w.add(x, y),
                ArithOp::Sub => w.sub(x, y),
                ArithOp::Mul => w.mul(x, y),
                ArithOp::Div => w.div(x, y),
            }
        }
        IntTerm::Neg(e) => w.neg(int(e, a, env)?),
        IntTerm::Head(l) => list(l, a, env)?.first().copied().unwrap_or(0),
        IntTerm::Pick { set: s, key, attr } => {
            let rows = set(s, a, env)?;
            min_by(&rows, *key).map(|r| r[*attr]).unwrap_or(0)
        }
        IntTerm::Ite(c, x, y) => {
            if formula(c, a, env)? {
                int(x, a, env)?
            } else {
                int(y, a, env)?
            }
        }
    })
}

fn list(t: &ListTerm, a: &Assignment, env: &mut Env) -> Result<Vec<i64>, EvalError> {
    Ok(match t {
        ListTerm::Nil => Vec::new(),
        ListTerm::Var(v) => match a.values.get(*v) {
            Some(Some(Val::List(l))) => l.clone(),
            Some(Some(_)) => {
                return Err(EvalError::SortMismatch(format!("variable {v} is not a list")))
            }
            _ => return Err(EvalError::Unassigned(format!("#{v}"))),
        },
        ListTerm::Tail(l) => {
            let l = list(l, a, env)?;
            l.get(1..).map(<[i64]>::to_vec).unwrap_or_default()
        }
        ListTerm::Cons(h, t) => {
            let mut out = vec![int(h, a, env)?];
            out.extend(list(t, a, env)?);
            out
        }
    })
}

fn set(t: &SetTerm, a: &Assignment, env: &mut Env) -> Result<BTreeSet<Row>, EvalError> {
    Ok(match t {
        SetTerm::Var(v) => rows_of(a, *v)?.clone(),
        SetTerm::Add(s, b) => {
            let mut out = set(s, a, env)?;
            out.insert(bound(env, b)?.clone());
            out
        }
        SetTerm::Minus(x, y) => {
            let y = set(y, a, env)?;
            set(x, a, env)?.difference(&y).cloned().collect()
        }
        SetTerm::MinBy(s, key) => {
            let rows = set(s, a, env)?;
            min_by(&rows, *key).cloned().into_iter().collect()
        }
    })
}

fn formula(f: &Formula, a: &Assignment, env: &mut Env) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Cmp(l, rel, r) => rel.holds(int(l, a, env)?, int(r, a, env)?),
        Formula::ListEq(l, r) => list(l, a, env)? == list(r, a, env)?,
        Formula::SetEq(l, r) => set(l, a, env)? == set(r, a, env)?,
        Formula::In(b, s) => {
            let row = bound(env, b)?.clone();
            set(s, a, env)?.contains(&row)
        }
        Formula::Card(s, rel, n) => rel.holds(set(s, a, env)?.len() as i64, *n as i64),
        Formula::Not(g) => !formula(g, a, env)?,
        Formula::And(fs) => {
            for g in fs {
                if !formula(g, a, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for g in fs {
                if formula(g, a, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(x, y) => !formula(x, a, env)? || formula(y, a, env)?,
        Formula::Iff(x, y) => formula(x, a, env)? == formula(y, a, env)?,
        Formula::Group(g) => formula(g, a, env)?,
        Formula::Distinct(_) => true,
        Formula::Quant {
            q,
            disj,
            vars,
            domain,
            body,
        } => {
            let rows: Vec<Row> = match domain {
                Domain::Sort(s) => a
                    .universe
                    .get(*s)
                    .ok_or_else(|| EvalError::SortMismatch(format!("no sort {s}")))?
                    .iter()
                    .cloned()
                    .collect(),
                Domain::Set(t) => set(t, a, env)?.into_iter().collect(),
            };
            let mut count = 0usize;
            let mut idx = vec![0usize; vars.len()];
            if rows.is_empty() && !vars.is_empty() {
                return Ok(matches!(q, Quantifier::All | Quantifier::No));
            }
            'tuples: loop {
                let distinct = !*disj || {
                    let mut s = idx.clone();
                    s.sort_unstable();
                    s.windows(2).all(|p| p[0] != p[1])
                };
                if distinct {
                    let base = env.len();
                    for (v, &i) in vars.iter().zip(&idx) {
                        env.push((v, rows[i].clone()));
                    }
                    let holds = formula(body, a, env);
                    env.truncate(base);
                    let holds = holds?;
                    match q {
                        Quantifier::All if !holds => return Ok(false),
                        Quantifier::Some if holds => return Ok(true),
                        Quantifier::No if holds => return Ok(false),
                        Quantifier::One if holds => {
                            count += 1;
                            if count > 1 {
                                return Ok(false);
                            }
                        }
                        _ => {}
                    }
                }
                for k in (0..idx.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < rows.len() {
                        continue 'tuples;
                    }
                    idx[k] = 0;
                }
                break;
            }
            match q {
                Quantifier::All | Quantifier::No => true,
                Quantifier::Some => false,
                Quantifier::One => count == 1,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Assignment {
        Assignment {
            bitwidth: Bitwidth::default(),
            values: vec![],
            universe: vec![],
        }
    }

    #[test]
    fn tautology_under_empty_assignment() {
        assert!(evaluate(&Formula::tt(), &empty()).unwrap());
        assert!(!evaluate(&Formula::ff(), &empty()).unwrap());
    }

    #[test]
    fn cardinality_and_quantifiers() {
        let rows: BTreeSet<Row> = [vec![1, 2]].into_iter().collect();
        let a = Assignment {
            bitwidth: Bitwidth::default(),
            values: vec![Some(Val::Rows(rows.clone()))],
            universe: vec![rows],
        };
        assert!(!evaluate(&Formula::Card(SetTerm::Var(0), Rel::Eq, 0), &a).unwrap());
        let one = Formula::quant(
            Quantifier::One,
            "e",
            Domain::Sort(0),
            Formula::Cmp(IntTerm::Field("e", 1), Rel::Eq, IntTerm::Lit(2)),
        );
        assert!(evaluate(&one, &a).unwrap());
        let disj = Formula::Quant {
            q: Quantifier::Some,
            disj: true,
            vars: vec!["a", "b"],
            domain: Domain::Set(SetTerm::Var(0)),
            body: Box::new(Formula::tt()),
        };
        assert!(!evaluate(&disj, &a).unwrap());
    }

    #[test]
    fn literals_wrap_and_lists_default() {
        let a = empty();
        let f = Formula::Cmp(IntTerm::Lit(15), Rel::Eq, IntTerm::Neg(Box::new(IntTerm::Lit(1))));
        assert!(evaluate(&f, &a).unwrap());
        let h = Formula::Cmp(
            IntTerm::Head(Box::new(ListTerm::Tail(Box::new(ListTerm::Nil)))),
            Rel::Eq,
            IntTerm::Lit(0),
        );
        assert!(evaluate(&h, &a).unwrap());
    }

    #[test]
    fn sort_mismatch_reported() {
        let a = Assignment {
            bitwidth: Bitwidth::default(),
            values: vec![Some(Val::Int(1))],
            universe: vec![],
        };
        let f = Formula::Card(SetTerm::Var(0), Rel::Eq, 0);
        assert!(matches!(evaluate(&f, &a), Err(EvalError::SortMismatch(_))));
    }
}
