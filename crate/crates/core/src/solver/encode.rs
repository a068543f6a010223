//! Bounded propositional encoding of a constraint system.
//!
//! Each table sort gets a fixed pool of atoms with an existence bit and one
//! bitvector per attribute. Existing atoms form a prefix in strictly
//! increasing row order, which both breaks the symmetry between atoms and
//! makes them pairwise distinct rows.

use super::circuit::{Bv, Circuit};
use super::Scope;
use crate::frontend::ArithOp;
use crate::interp::Row;
use crate::ir::*;
use batsat::Lit;
use std::collections::BTreeSet;

pub struct Atom {
    pub exists: Lit,
    pub attrs: Vec<Bv>,
}

#[derive(Clone)]
pub struct SymList {
    /// `len[k]` holds when the list has more than `k` elements.
    pub len: Vec<Lit>,
    /// Unused positions are zero.
    pub elems: Vec<Bv>,
}

pub enum VarEnc {
    Int(Bv),
    List(SymList),
    /// Membership bit per atom of the sort.
    Rows(Vec<Lit>),
}

pub struct Encoder<'a> {
    pub cs: &'a ConstraintSystem,
    pub c: Circuit,
    pub w: u32,
    pub atoms: Vec<Vec<Atom>>,
    pub vars: Vec<VarEnc>,
}

type Env = Vec<(&'static str, usize, usize)>;

/// Upper bounds on the rows of table variables and the length of lists.
pub fn capacities(cs: &ConstraintSystem, scope: &Scope) -> Vec<usize> {
    let mut cap = vec![0usize; cs.vars.len()];
    for (v, var) in cs.vars.iter().enumerate() {
        cap[v] = match (&var.sort, &var.def) {
            (Sort::Int, _) => 0,
            (Sort::List, VarDef::Input) => scope.max_list_len,
            (Sort::List, VarDef::List(t)) => list_cap(t, &cap),
            (Sort::Table(_), VarDef::Input) => scope.max_rows,
            (_, VarDef::Select { src, .. })
            | (_, VarDef::Delete { src, .. })
            | (_, VarDef::DropMin { src, .. })
            | (_, VarDef::Update { src, .. }) => cap[*src],
            (_, VarDef::Insert { src, .. }) => cap[*src] + 1,
            _ => 0,
        };
    }
    cap
}

fn list_cap(t: &ListTerm, cap: &[usize]) -> usize {
    match t {
        ListTerm::Nil => 0,
        ListTerm::Var(v) => cap[*v],
        ListTerm::Tail(l) => list_cap(l, cap).saturating_sub(1),
        ListTerm::Cons(_, l) => 1 + list_cap(l, cap),
    }
}

/// Atoms needed per sort: the input rows plus every row a write can create.
pub fn universe_sizes(cs: &ConstraintSystem, scope: &Scope, cap: &[usize]) -> Vec<usize> {
    let mut n = vec![0usize; cs.sorts.len()];
    for var in &cs.vars {
        if let Sort::Table(s) = var.sort {
            n[s] += match &var.def {
                VarDef::Input => scope.max_rows,
                VarDef::Insert { .. } => 1,
                VarDef::Update { src, .. } => cap[*src],
                _ => 0,
            };
        }
    }
    n
}

impl<'a> Encoder<'a> {
    pub fn new(cs: &'a ConstraintSystem, scope: &Scope, c: Circuit) -> Encoder<'a> {
        let w = scope.bitwidth.bits();
        let cap = capacities(cs, scope);
        let sizes = universe_sizes(cs, scope, &cap);
        let mut e = Encoder {
            cs,
            c,
            w,
            atoms: Vec::new(),
            vars: Vec::new(),
        };
        for (s, &n) in sizes.iter().enumerate() {
            let arity = cs.sorts[s].attributes.len();
            let atoms: Vec<Atom> = (0..n)
                .map(|_| Atom {
                    exists: e.c.fresh(),
                    attrs: (0..arity).map(|_| e.c.bv_fresh(w)).collect(),
                })
                .collect();
            for i in 1..n {
                let (prev, cur) = (atoms[i - 1].exists, atoms[i].exists);
                e.c.clause(&[!cur, prev]);
                let lt = e.lex_lt(&atoms[i - 1].attrs, &atoms[i].attrs);
                e.c.clause(&[!cur, lt]);
            }
            // Absent atoms carry zero rows so that models are canonical.
            for a in &atoms {
                for bv in &a.attrs {
                    for &b in bv {
                        e.c.clause(&[a.exists, !b]);
                    }
                }
            }
            e.atoms.push(atoms);
        }
        for (v, var) in cs.vars.iter().enumerate() {
            let enc = match var.sort {
                Sort::Int => VarEnc::Int(e.c.bv_fresh(w)),
                Sort::List => {
                    let k = cap[v];
                    let len: Vec<Lit> = (0..k).map(|_| e.c.fresh()).collect();
                    let elems: Vec<Bv> = (0..k).map(|_| e.c.bv_fresh(w)).collect();
                    for i in 0..k {
                        if i + 1 < k {
                            e.c.clause(&[!len[i + 1], len[i]]);
                        }
                        for &b in &elems[i] {
                            e.c.clause(&[len[i], !b]);
                        }
                    }
                    VarEnc::List(SymList { len, elems })
                }
                Sort::Table(s) => {
                    let m: Vec<Lit> = e.atoms[s].iter().map(|_| e.c.fresh()).collect();
                    for (i, &b) in m.iter().enumerate() {
                        let ex = e.atoms[s][i].exists;
                        e.c.clause(&[!b, ex]);
                    }
                    if var.origin == Origin::Input {
                        let ge = e.c.at_least(&m, cap[v] + 1);
                        e.c.assert(!ge[cap[v] + 1]);
                    }
                    VarEnc::Rows(m)
                }
            };
            e.vars.push(enc);
        }
        // Every existing atom belongs to some table variable of its sort.
        for s in 0..e.atoms.len() {
            for i in 0..e.atoms[s].len() {
                let mut clause = vec![!e.atoms[s][i].exists];
                for (v, var) in cs.vars.iter().enumerate() {
                    if var.sort == Sort::Table(s) {
                        if let VarEnc::Rows(m) = &e.vars[v] {
                            clause.push(m[i]);
                        }
                    }
                }
                e.c.clause(&clause);
            }
        }
        e
    }

    fn lex_lt(&mut self, a: &[Bv], b: &[Bv]) -> Lit {
        let mut lt = self.c.ff();
        for (x, y) in a.iter().zip(b).rev() {
            let here = self.c.bv_slt(x, y);
            let same = self.c.bv_eq(x, y);
            let keep = self.c.and(same, lt);
            lt = self.c.or(here, keep);
        }
        lt
    }

    pub fn assert_facts(&mut self) {
        for f in &self.cs.facts {
            let l = self.formula(f, &mut Vec::new());
            self.c.assert(l);
        }
    }

    fn sort_of_set(&self, t: &SetTerm) -> usize {
        match t {
            SetTerm::Var(v) => match self.cs.vars[*v].sort {
                Sort::Table(s) => s,
                _ => unreachable!("set term over a table variable"),
            },
            SetTerm::Add(t, _) | SetTerm::Minus(t, _) | SetTerm::MinBy(t, _) => self.sort_of_set(t),
        }
    }

    fn bound(env: &Env, name: &str) -> (usize, usize) {
        env.iter()
            .rev()
            .find(|(n, _, _)| *n == name)
            .map(|&(_, s, i)| (s, i))
            .expect("bound row")
    }

    fn int(&mut self, t: &IntTerm, env: &mut Env) -> Bv {
        match t {
            IntTerm::Lit(n) => {
                let v = crate::word::Bitwidth::new(self.w).expect("bitwidth").natural(*n);
                self.c.bv_const(self.w, v)
            }
            IntTerm::Var(v) => match &self.vars[*v] {
                VarEnc::Int(bv) => bv.clone(),
                _ => unreachable!("int variable"),
            },
            IntTerm::Field(b, a) => {
                let (s, i) = Self::bound(env, b);
                self.atoms[s][i].attrs[*a].clone()
            }
            IntTerm::Arith(op, l, r) => {
                let (x, y) = (self.int(l, env), self.int(r, env));
                match op {
                    ArithOp::Add => self.c.bv_add(&x, &y),
                    ArithOp::Sub => self.c.bv_sub(&x, &y),
                    ArithOp::Mul => self.c.bv_mul(&x, &y),
                    ArithOp::Div => self.c.bv_sdiv(&x, &y),
                }
            }
            IntTerm::Neg(e) => {
                let x = self.int(e, env);
                self.c.bv_neg(&x)
            }
            IntTerm::Head(l) => {
                let l = self.list(l, env);
                match l.elems.first() {
                    Some(e) => e.clone(),
                    None => self.c.bv_const(self.w, 0),
                }
            }
            IntTerm::Pick { set, key, attr } => {
                let s = self.sort_of_set(set);
                let m = self.set(set, env);
                let min = self.min_by(s, &m, *key);
                let mut out = self.c.bv_const(self.w, 0);
                for (i, &sel) in min.iter().enumerate() {
                    let v = self.atoms[s][i].attrs[*attr].clone();
                    for (k, &b) in v.iter().enumerate() {
                        let g = self.c.and(sel, b);
                        out[k] = self.c.or(out[k], g);
                    }
                }
                out
            }
            IntTerm::Ite(c, a, b) => {
                let c = self.formula(c, env);
                let (a, b) = (self.int(a, env), self.int(b, env));
                self.c.bv_ite(c, &a, &b)
            }
        }
    }

    /// Selector of the member with least `key`, ties to the lower atom.
    fn min_by(&mut self, s: usize, m: &[Lit], key: usize) -> Vec<Lit> {
        let n = m.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut conds = vec![m[i]];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (ki, kj) = (self.atoms[s][i].attrs[key].clone(), self.atoms[s][j].attrs[key].clone());
                let beats = if j < i {
                    self.c.bv_slt(&ki, &kj)
                } else {
                    let lt = self.c.bv_slt(&kj, &ki);
                    !lt
                };
                conds.push(self.c.implies(m[j], beats));
            }
            out.push(self.c.and_all(conds));
        }
        out
    }

    fn list(&mut self, t: &ListTerm, env: &mut Env) -> SymList {
        match t {
            ListTerm::Nil => SymList {
                len: Vec::new(),
                elems: Vec::new(),
            },
            ListTerm::Var(v) => match &self.vars[*v] {
                VarEnc::List(l) => l.clone(),
                _ => unreachable!("list variable"),
            },
            ListTerm::Tail(l) => {
                let mut l = self.list(l, env);
                if !l.len.is_empty() {
                    l.len.remove(0);
                    l.elems.remove(0);
                }
                l
            }
            ListTerm::Cons(h, t) => {
                let h = self.int(h, env);
                let mut l = self.list(t, env);
                l.len.insert(0, self.c.tt());
                l.elems.insert(0, h);
                l
            }
        }
    }

    fn set(&mut self, t: &SetTerm, env: &mut Env) -> Vec<Lit> {
        match t {
            SetTerm::Var(v) => match &self.vars[*v] {
                VarEnc::Rows(m) => m.clone(),
                _ => unreachable!("table variable"),
            },
            SetTerm::Add(s, b) => {
                let mut m = self.set(s, env);
                let (_, i) = Self::bound(env, b);
                m[i] = self.c.tt();
                m
            }
            SetTerm::Minus(a, b) => {
                let a = self.set(a, env);
                let b = self.set(b, env);
                a.iter().zip(&b).map(|(&x, &y)| self.c.and(x, !y)).collect()
            }
            SetTerm::MinBy(s, key) => {
                let sort = self.sort_of_set(s);
                let m = self.set(s, env);
                self.min_by(sort, &m, *key)
            }
        }
    }

    fn rel(&mut self, a: &[Lit], rel: Rel, b: &[Lit]) -> Lit {
        match rel {
            Rel::Lt => self.c.bv_slt(a, b),
            Rel::Le => !self.c.bv_slt(b, a),
            Rel::Eq => self.c.bv_eq(a, b),
            Rel::Ge => !self.c.bv_slt(a, b),
            Rel::Gt => self.c.bv_slt(b, a),
        }
    }

    pub fn formula(&mut self, f: &Formula, env: &mut Env) -> Lit {
        match f {
            Formula::Cmp(l, rel, r) => {
                let (a, b) = (self.int(l, env), self.int(r, env));
                self.rel(&a, *rel, &b)
            }
            Formula::ListEq(l, r) => {
                let (a, b) = (self.list(l, env), self.list(r, env));
                let k = a.len.len().max(b.len.len());
                let f = self.c.ff();
                let mut parts = Vec::new();
                for i in 0..k {
                    let la = a.len.get(i).copied().unwrap_or(f);
                    let lb = b.len.get(i).copied().unwrap_or(f);
                    parts.push(self.c.iff(la, lb));
                    if let (Some(x), Some(y)) = (a.elems.get(i), b.elems.get(i)) {
                        let same = self.c.bv_eq(x, y);
                        parts.push(self.c.implies(la, same));
                    }
                }
                self.c.and_all(parts)
            }
            Formula::SetEq(l, r) => {
                let (a, b) = (self.set(l, env), self.set(r, env));
                let parts: Vec<Lit> = a.iter().zip(&b).map(|(&x, &y)| self.c.iff(x, y)).collect();
                self.c.and_all(parts)
            }
            Formula::In(b, s) => {
                let m = self.set(s, env);
                let (_, i) = Self::bound(env, b);
                m[i]
            }
            Formula::Card(s, rel, n) => {
                let m = self.set(s, env);
                let n = *n as usize;
                let ge = self.c.at_least(&m, n + 1);
                match rel {
                    Rel::Eq => self.c.and(ge[n], !ge[n + 1]),
                    Rel::Gt => ge[n + 1],
                    Rel::Ge => ge[n],
                    Rel::Lt => !ge[n],
                    Rel::Le => !ge[n + 1],
                }
            }
            Formula::Not(g) => !self.formula(g, env),
            Formula::And(fs) => {
                let ls: Vec<Lit> = fs.iter().map(|g| self.formula(g, env)).collect();
                self.c.and_all(ls)
            }
            Formula::Or(fs) => {
                let ls: Vec<Lit> = fs.iter().map(|g| self.formula(g, env)).collect();
                self.c.or_all(ls)
            }
            Formula::Implies(a, b) => {
                let a = self.formula(a, env);
                let b = self.formula(b, env);
                self.c.implies(a, b)
            }
            Formula::Iff(a, b) => {
                let a = self.formula(a, env);
                let b = self.formula(b, env);
                self.c.iff(a, b)
            }
            Formula::Group(g) => self.formula(g, env),
            Formula::Distinct(_) => self.c.tt(),
            Formula::Quant {
                q,
                disj,
                vars,
                domain,
                body,
            } => {
                let (s, guards) = match domain {
                    Domain::Sort(s) => (*s, self.atoms[*s].iter().map(|a| a.exists).collect()),
                    Domain::Set(t) => (self.sort_of_set(t), self.set(t, env)),
                };
                let mut terms = Vec::new();
                let mut idx = Vec::new();
                self.tuples(s, &guards, vars, *disj, body, env, &mut idx, &mut terms, *q);
                match q {
                    Quantifier::All => self.c.and_all(terms),
                    Quantifier::Some => self.c.or_all(terms),
                    Quantifier::No => !self.c.or_all(terms),
                    Quantifier::One => {
                        let ge = self.c.at_least(&terms, 2);
                        self.c.and(ge[1], !ge[2])
                    }
                }
            }
        }
    }

    /// Instances of `body` over every tuple of atoms; for `all` each one is
    /// `guard => body`, otherwise `guard && body`.
    #[allow(clippy::too_many_arguments)]
    fn tuples(
        &mut self,
        s: usize,
        guards: &[Lit],
        vars: &[&'static str],
        disj: bool,
        body: &Formula,
        env: &mut Env,
        idx: &mut Vec<usize>,
        out: &mut Vec<Lit>,
        q: Quantifier,
    ) {
        if idx.len() == vars.len() {
            let g: Vec<Lit> = idx.iter().map(|&i| guards[i]).collect();
            let g = self.c.and_all(g);
            if g == self.c.ff() {
                return;
            }
            let base = env.len();
            for (v, &i) in vars.iter().zip(idx.iter()) {
                env.push((v, s, i));
            }
            let b = self.formula(body, env);
            env.truncate(base);
            out.push(match q {
                Quantifier::All => self.c.implies(g, b),
                _ => self.c.and(g, b),
            });
            return;
        }
        for i in 0..guards.len() {
            if disj && idx.contains(&i) {
                continue;
            }
            idx.push(i);
            self.tuples(s, guards, vars, disj, body, env, idx, out, q);
            idx.pop();
        }
    }

    /// Read every variable and the populated atoms off the last model.
    pub fn assignment(&self, bitwidth: crate::Bitwidth) -> Assignment {
        let c = &self.c;
        let row = |a: &Atom| -> Row { a.attrs.iter().map(|bv| c.bv_value(bv)).collect() };
        let universe: Vec<BTreeSet<Row>> = self
            .atoms
            .iter()
            .map(|atoms| atoms.iter().filter(|a| c.value(a.exists)).map(row).collect())
            .collect();
        let values = self
            .cs
            .vars
            .iter()
            .zip(&self.vars)
            .map(|(var, enc)| {
                Some(match enc {
                    VarEnc::Int(bv) => Val::Int(c.bv_value(bv)),
                    VarEnc::List(l) => Val::List(
                        l.len
                            .iter()
                            .zip(&l.elems)
                            .take_while(|(&b, _)| c.value(b))
                            .map(|(_, e)| c.bv_value(e))
                            .collect(),
                    ),
                    VarEnc::Rows(m) => {
                        let Sort::Table(s) = var.sort else {
                            unreachable!("rows of a table sort")
                        };
                        Val::Rows(
                            m.iter()
                                .zip(&self.atoms[s])
                                .filter(|(&b, _)| c.value(b))
                                .map(|(_, a)| row(a))
                                .collect(),
                        )
                    }
                })
            })
            .collect();
        Assignment {
            bitwidth,
            values,
            universe,
        }
    }
}
