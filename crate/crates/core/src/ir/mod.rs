//! Relational constraint systems produced by symbolic execution.
//!
//! Table-sorted terms denote sets of rows; a row is identified by its
//! attribute values, which is what the per-sort distinctness fact of the
//! emitted text states. Integer literals keep their source spelling and are
//! reduced to the solver bitwidth when evaluated or encoded.

pub mod emit;
pub mod eval;

pub use emit::emit_constraints_text;
pub use eval::{
    check_model, complete_assignment, evaluate, first_failing_fact, input_values, Assignment,
    EvalError, Val,
};

use crate::frontend::{ArithOp, CmpOp, Schema};
use std::fmt;

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    List,
    Table(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Input,
    Internal,
}

/// How an internal variable is computed from earlier ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarDef {
    Input,
    Int(IntTerm),
    List(ListTerm),
    /// Rows of `src` satisfying `cond`, with the row bound to `row`.
    Select {
        src: VarId,
        row: &'static str,
        cond: Formula,
    },
    /// `src` plus the row built from `values` (declaration order).
    Insert { src: VarId, values: Vec<IntTerm> },
    /// Rows of `src` with `attr` set to `value` where `cond` holds.
    Update {
        src: VarId,
        row: &'static str,
        attr: usize,
        value: IntTerm,
        cond: Formula,
    },
    /// Rows of `src` not satisfying `cond`.
    Delete {
        src: VarId,
        row: &'static str,
        cond: Formula,
    },
    /// `src` without its row of least `key`.
    DropMin { src: VarId, key: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymVar {
    pub name: String,
    pub sort: Sort,
    pub origin: Origin,
    pub def: VarDef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn as_str(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Eq => a == b,
            Rel::Ge => a >= b,
            Rel::Gt => a > b,
        }
    }
}

impl From<CmpOp> for Rel {
    fn from(op: CmpOp) -> Rel {
        match op {
            CmpOp::Lt => Rel::Lt,
            CmpOp::Eq => Rel::Eq,
            CmpOp::Gt => Rel::Gt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IntTerm {
    /// Source natural; denotes its value modulo the bitwidth.
    Lit(u64),
    Var(VarId),
    /// Attribute of a quantified row.
    Field(&'static str, usize),
    Arith(ArithOp, Box<IntTerm>, Box<IntTerm>),
    Neg(Box<IntTerm>),
    /// First element; 0 for the empty list.
    Head(Box<ListTerm>),
    /// `attr` of the row of least `key` in `set`; 0 when empty.
    Pick {
        set: Box<SetTerm>,
        key: usize,
        attr: usize,
    },
    Ite(Box<Formula>, Box<IntTerm>, Box<IntTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ListTerm {
    Nil,
    Var(VarId),
    /// Empty for the empty list.
    Tail(Box<ListTerm>),
    Cons(Box<IntTerm>, Box<ListTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SetTerm {
    Var(VarId),
    /// Union with one quantified row.
    Add(Box<SetTerm>, &'static str),
    Minus(Box<SetTerm>, Box<SetTerm>),
    /// Singleton of the row with least `key`; empty when the set is.
    MinBy(Box<SetTerm>, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    All,
    Some,
    One,
    No,
}

impl Quantifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantifier::All => "all",
            Quantifier::Some => "some",
            Quantifier::One => "one",
            Quantifier::No => "no",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Every row of a table sort.
    Sort(usize),
    Set(SetTerm),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Cmp(IntTerm, Rel, IntTerm),
    ListEq(ListTerm, ListTerm),
    SetEq(SetTerm, SetTerm),
    In(&'static str, SetTerm),
    Card(SetTerm, Rel, u32),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// Parenthesized in the emitted text; no semantic effect.
    Group(Box<Formula>),
    Quant {
        q: Quantifier,
        disj: bool,
        vars: Vec<&'static str>,
        domain: Domain,
        body: Box<Formula>,
    },
    /// Rows of the sort are pairwise distinct; holds by construction.
    Distinct(usize),
}

impl Formula {
    /// `(0=0)`
    pub fn tt() -> Formula {
        Formula::group(Formula::Cmp(IntTerm::Lit(0), Rel::Eq, IntTerm::Lit(0)))
    }

    /// `(0=1)`
    pub fn ff() -> Formula {
        Formula::group(Formula::Cmp(IntTerm::Lit(0), Rel::Eq, IntTerm::Lit(1)))
    }

    pub fn group(f: Formula) -> Formula {
        Formula::Group(Box::new(f))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn quant(q: Quantifier, var: &'static str, domain: Domain, body: Formula) -> Formula {
        Formula::Quant {
            q,
            disj: false,
            vars: vec![var],
            domain,
            body: Box::new(body),
        }
    }

    pub fn and_all(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::tt(),
            1 => fs.pop().unwrap(),
            _ => Formula::And(fs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSort {
    pub name: String,
    /// Declaration order; the emitted sig lists them alphabetically.
    pub attributes: Vec<String>,
    pub pk: usize,
}

/// Placement of declarations and facts in the emitted document.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Item {
    Sort(usize),
    ListSort,
    Var(VarId),
    Fact(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub module: String,
    pub sorts: Vec<TableSort>,
    pub vars: Vec<SymVar>,
    pub facts: Vec<Formula>,
    /// Inputs in the order of the final assert: program inputs by creation,
    /// then initial table contents by declaration.
    pub inputs: Vec<VarId>,
    pub layout: Vec<Item>,
}

impl ConstraintSystem {
    pub fn new(module: &str, schema: &Schema) -> ConstraintSystem {
        ConstraintSystem {
            module: module.to_string(),
            sorts: schema
                .tables
                .iter()
                .map(|t| TableSort {
                    name: t.name.clone(),
                    attributes: t.attributes.clone(),
                    pk: t.pk,
                })
                .collect(),
            vars: Vec::new(),
            facts: Vec::new(),
            inputs: Vec::new(),
            layout: Vec::new(),
        }
    }

    pub fn add_var(&mut self, var: SymVar) -> VarId {
        let id = self.vars.len();
        self.vars.push(var);
        self.layout.push(Item::Var(id));
        id
    }

    /// Place the sig and equality predicate of sort `s` in the document.
    pub fn declare_sort(&mut self, s: usize) {
        self.layout.push(Item::Sort(s));
    }

    pub fn declare_list_sort(&mut self) {
        self.layout.push(Item::ListSort);
    }

    pub fn add_fact(&mut self, f: Formula) {
        self.layout.push(Item::Fact(self.facts.len()));
        self.facts.push(f);
    }

    /// Add `f` unless an identical fact is already present.
    pub fn add_fact_once(&mut self, f: Formula) {
        if !self.facts.contains(&f) {
            self.add_fact(f);
        }
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn free_input_vars(&self) -> Vec<&SymVar> {
        self.inputs.iter().map(|&i| &self.vars[i]).collect()
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_constraints_text(self))
    }
}
