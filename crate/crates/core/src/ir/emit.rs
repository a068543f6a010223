use super::*;
use std::fmt::Write;

/// Render `cs` as an Alloy 4 document.
pub fn emit_constraints_text(cs: &ConstraintSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {}", cs.module);
    for item in &cs.layout {
        match *item {
            Item::Sort(s) => sort_block(cs, s, &mut out),
            Item::ListSort => out.push_str("one sig Nil {}\nsig List {head: Int,tail: List + Nil}\n"),
            Item::Var(v) => {
                let var = &cs.vars[v];
                let _ = match var.sort {
                    Sort::Int => writeln!(out, "one sig {} in Int {{}}", var.name),
                    Sort::List => writeln!(out, "one sig {} in List + Nil {{}}", var.name),
                    Sort::Table(t) => writeln!(out, "sig {} in {} {{}}", var.name, cs.sorts[t].name),
                };
            }
            Item::Fact(i) => {
                let _ = writeln!(out, "fact{{{}}}", formula_text(cs, &cs.facts[i]));
            }
        }
    }
    let decls: Vec<String> = cs
        .inputs
        .iter()
        .map(|&v| {
            let var = &cs.vars[v];
            let sort = match var.sort {
                Sort::Int => "Int",
                Sort::List => "List + Nil",
                Sort::Table(t) => &cs.sorts[t].name,
            };
            format!("{} in {}", var.name, sort)
        })
        .collect();
    if decls.is_empty() {
        out.push_str("assert inputsExist {!(0=0)}\n");
    } else {
        let _ = writeln!(out, "assert inputsExist {{!({}) }}", decls.join(" && "));
    }
    out.push_str("check inputsExist\n");
    out
}

fn sort_block(cs: &ConstraintSystem, s: usize, out: &mut String) {
    let sort = &cs.sorts[s];
    let mut attrs: Vec<&str> = sort.attributes.iter().map(String::as_str).collect();
    attrs.sort_unstable();
    let fields: Vec<String> = attrs.iter().map(|a| format!("{a} : Int")).collect();
    let eqs: Vec<String> = attrs.iter().map(|a| format!("a.{a} = b.{a}")).collect();
    let _ = writeln!(out, "sig {}{{{}}}", sort.name, fields.join(","));
    let _ = writeln!(out, "pred equal{0}[a:{0},b: {0}]", sort.name);
    let _ = writeln!(out, "{{{}}}", eqs.join(" && "));
}

/// One formula in the emitted syntax.
pub fn formula_text(cs: &ConstraintSystem, f: &Formula) -> String {
    Printer { cs, env: Vec::new() }.formula(f)
}

struct Printer<'a> {
    cs: &'a ConstraintSystem,
    /// Quantified row names with the sort they range over.
    env: Vec<(&'static str, usize)>,
}

impl Printer<'_> {
    fn sort_of_row(&self, name: &str) -> Option<usize> {
        self.env.iter().rev().find(|(n, _)| *n == name).map(|(_, s)| *s)
    }

    fn sort_of_set(&self, t: &SetTerm) -> Option<usize> {
        match t {
            SetTerm::Var(v) => match self.cs.vars.get(*v)?.sort {
                Sort::Table(s) => Some(s),
                _ => None,
            },
            SetTerm::Add(t, _) | SetTerm::Minus(t, _) | SetTerm::MinBy(t, _) => self.sort_of_set(t),
        }
    }

    fn attr_name(&self, sort: Option<usize>, attr: usize) -> String {
        sort.and_then(|s| self.cs.sorts.get(s))
            .and_then(|s| s.attributes.get(attr))
            .cloned()
            .unwrap_or_else(|| format!("attr{attr}"))
    }

    fn var_name(&self, v: VarId) -> String {
        self.cs.vars.get(v).map(|v| v.name.clone()).unwrap_or_else(|| format!("v{v}"))
    }

    fn int(&mut self, t: &IntTerm) -> String {
        match t {
            IntTerm::Lit(n) => n.to_string(),
            IntTerm::Var(v) => self.var_name(*v),
            IntTerm::Field(b, a) => format!("{b}.{}", self.attr_name(self.sort_of_row(b), *a)),
            IntTerm::Arith(op, l, r) => {
                let name = match op {
                    ArithOp::Add => "add",
                    ArithOp::Sub => "sub",
                    ArithOp::Mul => "mul",
                    ArithOp::Div => "div",
                };
                format!("({}).{name}[{}]", self.int(l), self.int(r))
            }
            IntTerm::Neg(e) => format!("(- ({}))", self.int(e)),
            IntTerm::Head(l) => format!("{}.head", self.list_operand(l)),
            IntTerm::Pick { set, key, attr } => {
                let sort = self.sort_of_set(set);
                let s = self.set(set);
                let k = self.attr_name(sort, *key);
                format!(
                    "{{p: {s} | all q: {s} | p.{k} <= q.{k}}}.{}",
                    self.attr_name(sort, *attr)
                )
            }
            IntTerm::Ite(c, a, b) => {
                format!("(({}) => ({}) else ({}))", self.formula(c), self.int(a), self.int(b))
            }
        }
    }

    fn list_operand(&mut self, l: &ListTerm) -> String {
        match l {
            ListTerm::Var(_) | ListTerm::Nil | ListTerm::Tail(_) => self.list(l),
            ListTerm::Cons(..) => format!("({})", self.list(l)),
        }
    }

    fn list(&mut self, l: &ListTerm) -> String {
        match l {
            ListTerm::Nil => "Nil".into(),
            ListTerm::Var(v) => self.var_name(*v),
            ListTerm::Tail(l) => format!("{}.tail", self.list_operand(l)),
            ListTerm::Cons(h, t) => {
                format!("{{l: List | l.head = {} && l.tail = {}}}", self.int(h), self.list(t))
            }
        }
    }

    fn set(&mut self, t: &SetTerm) -> String {
        match t {
            SetTerm::Var(v) => self.var_name(*v),
            SetTerm::Add(s, b) => format!("{}+{b}", self.set(s)),
            SetTerm::Minus(a, b) => format!("{} - {}", self.set(a), self.set_operand(b)),
            SetTerm::MinBy(s, key) => {
                let k = self.attr_name(self.sort_of_set(s), *key);
                let s = self.set_operand(s);
                format!("{{p: {s} | all q: {s} | p.{k} <= q.{k}}}")
            }
        }
    }

    fn set_operand(&mut self, t: &SetTerm) -> String {
        match t {
            SetTerm::Var(_) | SetTerm::MinBy(..) => self.set(t),
            _ => format!("({})", self.set(t)),
        }
    }

    fn junct(&mut self, f: &Formula) -> String {
        match f {
            Formula::Quant { .. } | Formula::Iff(..) | Formula::Implies(..) => {
                format!("({})", self.formula(f))
            }
            _ => self.formula(f),
        }
    }

    fn formula(&mut self, f: &Formula) -> String {
        match f {
            Formula::Cmp(l, r, rhs) => format!("{} {} {}", self.int(l), r.as_str(), self.int(rhs)),
            Formula::ListEq(l, r) => format!("{} = {}", self.list(l), self.list(r)),
            Formula::SetEq(l, r) => format!("{}={}", self.set(l), self.set(r)),
            Formula::In(b, s) => format!("{b} in {}", self.set(s)),
            Formula::Card(s, r, n) => format!("#{}{}{n}", self.set_operand(s), r.as_str()),
            Formula::Not(g) => format!("!({})", self.formula(g)),
            Formula::And(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| self.junct(g)).collect();
                parts.join(" && ")
            }
            Formula::Or(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| self.junct(g)).collect();
                parts.join(" || ")
            }
            Formula::Implies(a, b) => format!("({}) => ({})", self.formula(a), self.formula(b)),
            Formula::Iff(a, b) => format!("{} <=> {}", self.junct(a), self.junct(b)),
            Formula::Group(g) => format!("({})", self.formula(g)),
            Formula::Distinct(s) => {
                let name = self.cs.sorts.get(*s).map(|t| t.name.as_str()).unwrap_or("?");
                format!("all disj a,b: {name} | !equal{name}[a,b]")
            }
            Formula::Quant {
                q,
                disj,
                vars,
                domain,
                body,
            } => {
                let (dom, sort) = match domain {
                    Domain::Sort(s) => (
                        self.cs.sorts.get(*s).map(|t| t.name.clone()).unwrap_or_default(),
                        Some(*s),
                    ),
                    Domain::Set(t) => (self.set_operand(t), self.sort_of_set(t)),
                };
                let base = self.env.len();
                for v in vars {
                    self.env.push((v, sort.unwrap_or(usize::MAX)));
                }
                let body = self.formula(body);
                self.env.truncate(base);
                let disj = if *disj { "disj " } else { "" };
                format!("{} {disj}{}: {dom} | {body}", q.as_str(), vars.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;

    fn squash(s: &str) -> String {
        s.split_whitespace().collect()
    }

    #[test]
    fn empty_system() {
        let m = load_model("MODEL m COMMIT(); COMMIT(); ENDMODEL").unwrap();
        let cs = ConstraintSystem::new("m", &m.schema);
        assert_eq!(
            emit_constraints_text(&cs),
            "module m\nassert inputsExist {!(0=0)}\ncheck inputsExist\n"
        );
    }

    #[test]
    fn sort_and_list_blocks() {
        let m = load_model(
            "MODEL example
             TABLE author (name,numberOfPlays,PRIMARY KEY(name),numberOfPlays > 0);
             COMMIT(); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let mut cs = ConstraintSystem::new("example", &m.schema);
        cs.layout.push(Item::Sort(0));
        cs.add_fact(Formula::Distinct(0));
        cs.layout.push(Item::ListSort);
        let text = squash(&emit_constraints_text(&cs));
        let want = squash(
            "sig author{name : Int,numberOfPlays : Int}
             pred equalauthor[a:author,b: author]
             {a.name = b.name && a.numberOfPlays = b.numberOfPlays}
             fact{all disj a,b: author | !equalauthor[a,b]}
             one sig Nil {}
             sig List {head: Int,tail: List + Nil}",
        );
        assert!(text.contains(&want), "{text}");
    }

    #[test]
    fn operators_render() {
        let m = load_model("MODEL m COMMIT(); COMMIT(); ENDMODEL").unwrap();
        let mut cs = ConstraintSystem::new("m", &m.schema);
        let x = cs.add_var(SymVar {
            name: "xINPUTPROG1".into(),
            sort: Sort::Int,
            origin: Origin::Input,
            def: VarDef::Input,
        });
        let f = Formula::Not(Box::new(Formula::Cmp(
            IntTerm::Arith(ArithOp::Add, Box::new(IntTerm::Var(x)), Box::new(IntTerm::Lit(1))),
            Rel::Gt,
            IntTerm::Neg(Box::new(IntTerm::Lit(2))),
        )));
        assert_eq!(formula_text(&cs, &f), "!((xINPUTPROG1).add[1] > (- (2)))");
        let g = Formula::And(vec![Formula::tt(), Formula::implies(Formula::tt(), Formula::ff())]);
        assert_eq!(formula_text(&cs, &g), "(0 = 0) && (((0 = 0)) => ((0 = 1)))");
    }
}
