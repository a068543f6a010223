//! Exhaustive search for inputs driving a model along given paths.
//!
//! Initial databases are enumerated table by table in reference order; for
//! each one the READ and LOAD values are chosen by replaying the interpreter
//! and branching wherever it runs out of input. Runs stop as soon as their
//! trace leaves every path still being searched for.

use super::Scope;
use crate::cfg::{Path, PathStep, Terminal};
use crate::frontend::{CheckedModel, StmtId};
use crate::interp::{run_with, DbState, InputSource, Observer, Row, RunConfig, RunError, TestInput};
use std::collections::BTreeMap;

/// First input in enumeration order whose run follows `path`.
pub fn brute_force_oracle(model: &CheckedModel, path: &Path, scope: &Scope) -> Option<TestInput> {
    oracle_many(model, std::slice::from_ref(path), scope)
        .pop()
        .flatten()
}

/// `brute_force_oracle` for several paths sharing one enumeration.
pub fn oracle_many(model: &CheckedModel, paths: &[Path], scope: &Scope) -> Vec<Option<TestInput>> {
    let mut search = Search {
        model,
        scope,
        trie: Trie::new(paths),
        found: vec![None; paths.len()],
        config: RunConfig {
            bitwidth: scope.bitwidth,
            ..RunConfig::default()
        },
    };
    if !search.done() {
        for_each_initial_db(model, scope, &mut |tables| {
            search.inputs(tables, &mut Vec::new());
            !search.done()
        });
    }
    search.found
}

/// Visit every schema-valid initial database within scope, tables in
/// declaration order with rows sorted by key, until `f` returns `false`.
pub fn for_each_initial_db(
    model: &CheckedModel,
    scope: &Scope,
    f: &mut dyn FnMut(&[Vec<Row>]) -> bool,
) {
    let mut e = DbEnum {
        model,
        scope,
        f,
        stopped: false,
    };
    let mut tables = vec![Vec::new(); model.schema.tables.len()];
    e.table(0, &mut tables);
}

/// Number of initial databases `for_each_initial_db` visits, counting no
/// further than `limit + 1`.
pub fn count_initial_dbs(model: &CheckedModel, scope: &Scope, limit: usize) -> usize {
    let mut n = 0;
    for_each_initial_db(model, scope, &mut |_| {
        n += 1;
        n <= limit
    });
    n
}

struct DbEnum<'a, 'f> {
    model: &'a CheckedModel,
    scope: &'a Scope,
    f: &'f mut dyn FnMut(&[Vec<Row>]) -> bool,
    stopped: bool,
}

impl DbEnum<'_, '_> {
    /// Choose the contents of the `k`-th table in reference order.
    fn table(&mut self, k: usize, tables: &mut Vec<Vec<Row>>) {
        if self.stopped {
            return;
        }
        let schema = &self.model.schema;
        if k == schema.topo_order.len() {
            self.stopped = !(self.f)(tables);
            return;
        }
        let t = schema.topo_order[k];
        let ts = &schema.tables[t];
        let w = self.scope.bitwidth;
        let mut rows: Vec<Row> = vec![Vec::new()];
        for _ in 0..ts.arity() {
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    w.values().map(move |v| {
                        let mut r = r.clone();
                        r.push(v);
                        r
                    })
                })
                .collect();
        }
        rows.retain(|r| {
            ts.constraints
                .iter()
                .all(|&(a, op, bound)| op.holds(r[a], w.natural(bound)))
                && ts.fks.iter().all(|&(a, rt)| {
                    let pk = schema.tables[rt].pk;
                    tables[rt].iter().any(|x| x[pk] == r[a])
                })
        });
        rows.sort_by_key(|r| r[ts.pk]);
        let mut chosen = Vec::new();
        self.subsets(k, t, &rows, 0, &mut chosen, tables);
        tables[t].clear();
    }

    /// Subsets of `rows` with strictly increasing keys, each prefix visited
    /// before its extensions.
    fn subsets(
        &mut self,
        k: usize,
        t: usize,
        rows: &[Row],
        from: usize,
        chosen: &mut Vec<Row>,
        tables: &mut Vec<Vec<Row>>,
    ) {
        if self.stopped {
            return;
        }
        tables[t] = chosen.clone();
        self.table(k + 1, tables);
        if chosen.len() == self.scope.max_rows {
            return;
        }
        let pk = self.model.schema.tables[t].pk;
        for i in from..rows.len() {
            if chosen.last().is_some_and(|last| last[pk] >= rows[i][pk]) {
                continue;
            }
            chosen.push(rows[i].clone());
            self.subsets(k, t, rows, i + 1, chosen, tables);
            chosen.pop();
        }
    }
}

#[derive(Clone, Debug)]
enum Given {
    Read(i64),
    Load(Vec<i64>),
}

struct TrieNode {
    children: Vec<(PathStep, usize)>,
    /// Target index ending here, per terminal.
    exit: Option<usize>,
    abort: Option<usize>,
    /// Targets below this node not found yet.
    remaining: usize,
}

struct Trie {
    nodes: Vec<TrieNode>,
}

impl Trie {
    fn new(paths: &[Path]) -> Trie {
        let mut t = Trie {
            nodes: vec![TrieNode {
                children: Vec::new(),
                exit: None,
                abort: None,
                remaining: 0,
            }],
        };
        for (i, p) in paths.iter().enumerate() {
            let mut at = 0;
            t.nodes[0].remaining += 1;
            for &s in &p.steps {
                at = match t.child(at, s) {
                    Some(c) => c,
                    None => {
                        t.nodes.push(TrieNode {
                            children: Vec::new(),
                            exit: None,
                            abort: None,
                            remaining: 0,
                        });
                        let c = t.nodes.len() - 1;
                        t.nodes[at].children.push((s, c));
                        c
                    }
                };
                t.nodes[at].remaining += 1;
            }
            let slot = match p.terminal {
                Terminal::Exit => &mut t.nodes[at].exit,
                Terminal::Abort => &mut t.nodes[at].abort,
            };
            if slot.is_some() {
                // Duplicate target: only the first copy is searched for.
                let mut at = 0;
                t.nodes[0].remaining -= 1;
                for &s in &p.steps {
                    at = t.child(at, s).expect("inserted");
                    t.nodes[at].remaining -= 1;
                }
            } else {
                *slot = Some(i);
            }
        }
        t
    }

    fn child(&self, at: usize, s: PathStep) -> Option<usize> {
        self.nodes[at]
            .children
            .iter()
            .find(|(k, _)| *k == s)
            .map(|&(_, c)| c)
    }

    fn mark_found(&mut self, steps: &[PathStep]) {
        let mut at = 0;
        self.nodes[0].remaining -= 1;
        for &s in steps {
            at = self.child(at, s).expect("on trie");
            self.nodes[at].remaining -= 1;
        }
    }
}

struct Walker<'t> {
    trie: &'t Trie,
    at: usize,
}

impl Observer for Walker<'_> {
    fn step(&mut self, step: PathStep) -> bool {
        match self.trie.child(self.at, step) {
            Some(c) if self.trie.nodes[c].remaining > 0 => {
                self.at = c;
                true
            }
            _ => false,
        }
    }
}

struct Replay<'g> {
    given: &'g [Given],
    next: usize,
    /// Kind of the first request beyond `given`: `true` for LOAD.
    wanted_load: Option<bool>,
}

impl InputSource for Replay<'_> {
    fn read(&mut self, _: StmtId) -> Option<i64> {
        match self.given.get(self.next) {
            Some(Given::Read(x)) => {
                self.next += 1;
                Some(*x)
            }
            Some(Given::Load(_)) => unreachable!("replayed inputs follow the same run"),
            None => {
                self.wanted_load = Some(false);
                None
            }
        }
    }

    fn load(&mut self, _: StmtId) -> Option<Vec<i64>> {
        match self.given.get(self.next) {
            Some(Given::Load(xs)) => {
                self.next += 1;
                Some(xs.clone())
            }
            Some(Given::Read(_)) => unreachable!("replayed inputs follow the same run"),
            None => {
                self.wanted_load = Some(true);
                None
            }
        }
    }
}

struct Search<'a> {
    model: &'a CheckedModel,
    scope: &'a Scope,
    trie: Trie,
    found: Vec<Option<TestInput>>,
    config: RunConfig,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.trie.nodes[0].remaining == 0
    }

    fn inputs(&mut self, tables: &[Vec<Row>], given: &mut Vec<Given>) {
        let mut source = Replay {
            given,
            next: 0,
            wanted_load: None,
        };
        let mut walker = Walker {
            trie: &self.trie,
            at: 0,
        };
        let r = run_with(
            self.model,
            &self.config,
            DbState::new(tables.to_vec()),
            &mut source,
            &mut walker,
        );
        let (at, wanted) = (walker.at, source.wanted_load);
        match r {
            Ok(res) => {
                let node = &self.trie.nodes[at];
                let target = match res.terminal() {
                    Terminal::Exit => node.exit,
                    Terminal::Abort => node.abort,
                };
                if let Some(i) = target {
                    if self.found[i].is_none() {
                        self.found[i] = Some(self.test_input(tables, given));
                        let steps = res.trace.steps.clone();
                        self.trie.mark_found(&steps);
                    }
                }
            }
            Err(RunError::InputUnderflow(_)) => {
                let w = self.scope.bitwidth;
                if wanted == Some(true) {
                    for len in 0..=self.scope.max_list_len {
                        let mut xs = vec![0i64; len];
                        loop {
                            if self.trie.nodes[at].remaining == 0 {
                                return;
                            }
                            given.push(Given::Load(xs.clone()));
                            self.inputs(tables, given);
                            given.pop();
                            if !next_tuple(&mut xs, w) {
                                break;
                            }
                        }
                    }
                } else {
                    for v in w.values() {
                        if self.trie.nodes[at].remaining == 0 {
                            return;
                        }
                        given.push(Given::Read(v));
                        self.inputs(tables, given);
                        given.pop();
                    }
                }
            }
            Err(_) => {}
        }
    }

    fn test_input(&self, tables: &[Vec<Row>], given: &[Given]) -> TestInput {
        let mut input = TestInput {
            tables: BTreeMap::new(),
            reads: Vec::new(),
            loads: Vec::new(),
        };
        for (t, ts) in self.model.schema.tables.iter().enumerate() {
            input.tables.insert(ts.name.clone(), tables[t].clone());
        }
        for g in given {
            match g {
                Given::Read(x) => input.reads.push(*x),
                Given::Load(xs) => input.loads.push(xs.clone()),
            }
        }
        input
    }
}

/// Advance `xs` to the next tuple in `Bitwidth::values` order.
fn next_tuple(xs: &mut [i64], w: crate::Bitwidth) -> bool {
    for x in xs.iter_mut().rev() {
        let next = if *x == -1 {
            None
        } else if *x == w.max_value() {
            Some(w.min_value())
        } else {
            Some(*x + 1)
        };
        match next {
            Some(n) => {
                *x = n;
                return true;
            }
            None => *x = 0,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{Label, PathStep};
    use crate::frontend::load_model;

    #[test]
    fn tuples_cover_every_value_once() {
        let w = crate::Bitwidth::new(2).unwrap();
        let mut xs = vec![0, 0];
        let mut seen = vec![xs.clone()];
        while next_tuple(&mut xs, w) {
            seen.push(xs.clone());
        }
        assert_eq!(seen.len(), 16);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn initial_databases_respect_keys_and_references() {
        let m = load_model(
            "MODEL m TABLE a (k,PRIMARY KEY(k)); TABLE b (i,r,PRIMARY KEY(i),FOREIGN KEY(r) REFERENCES a); COMMIT(); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let scope = Scope::tiny();
        // Table a alone: the empty table, 8 singletons and 28 key-sorted pairs.
        let mut per_a = std::collections::BTreeMap::new();
        for_each_initial_db(&m, &scope, &mut |t| {
            assert!(t[1].iter().all(|row| t[0].iter().any(|x| x[0] == row[1])));
            *per_a.entry(t[0].clone()).or_insert(0usize) += 1;
            true
        });
        assert_eq!(per_a.len(), 37);
        // With n keys in a, b draws from 8n rows; pairs with distinct keys
        // number 28n^2.
        let b_count = |n: usize| {
            let rows = 8 * n;
            1 + rows + (rows * rows - rows * n) / 2
        };
        let want: usize = per_a.keys().map(|a| b_count(a.len())).sum();
        assert_eq!(count_initial_dbs(&m, &scope, usize::MAX - 1), want);
        assert_eq!(count_initial_dbs(&m, &scope, 10), 11);
    }

    #[test]
    fn straight_line_and_contradiction() {
        let m = load_model(
            "MODEL m COMMIT(); READ(x); IF (x = 1) THEN IF (x = 2) THEN y = 1; ELSE y = 2; ENDIF; ELSE y = 3; ENDIF; COMMIT(); ENDMODEL",
        )
        .unwrap();
        let feasible = Path {
            steps: vec![PathStep::new(2, Label::Then), PathStep::new(3, Label::Else)],
            terminal: Terminal::Exit,
        };
        let infeasible = Path {
            steps: vec![PathStep::new(2, Label::Then), PathStep::new(3, Label::Then)],
            terminal: Terminal::Exit,
        };
        let scope = Scope::tiny();
        let got = brute_force_oracle(&m, &feasible, &scope).unwrap();
        assert_eq!(got.reads, vec![1]);
        assert_eq!(brute_force_oracle(&m, &infeasible, &scope), None);
    }
}
