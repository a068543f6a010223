use crate::cfg::Violation;
use crate::frontend::{Schema, TableSchema};
use crate::word::Bitwidth;

pub type Row = Vec<i64>;

/// Rows of one table, kept sorted by primary key.
pub type Table = Vec<Row>;

/// A pending db-write, resolved to concrete rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Change {
    Insert(Row),
    /// (index in the working table, rewritten row)
    Update { attr: usize, rows: Vec<(usize, Row)> },
    /// Indices in the working table.
    Delete(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbState {
    pub committed: Vec<Table>,
    pub working: Vec<Table>,
}

impl DbState {
    pub fn new(tables: Vec<Table>) -> DbState {
        DbState {
            committed: tables.clone(),
            working: tables,
        }
    }

    pub fn empty(schema: &Schema) -> DbState {
        DbState::new(vec![Vec::new(); schema.tables.len()])
    }

    pub fn commit(&mut self) {
        self.committed.clone_from(&self.working);
    }

    pub fn rollback(&mut self) {
        self.working.clone_from(&self.committed);
    }

    /// Apply `change` to table `t` of the working state, or report the first
    /// violated constraint in check order and leave the state untouched.
    pub fn apply(
        &mut self,
        schema: &Schema,
        w: Bitwidth,
        t: usize,
        change: Change,
    ) -> Result<(), Violation> {
        let ts = &schema.tables[t];
        match change {
            Change::Insert(row) => {
                let rows = &self.working[t];
                if rows.iter().any(|r| r[ts.pk] == row[ts.pk]) {
                    return Err(Violation::PrimaryKey);
                }
                for (i, &(a, r)) in ts.fks.iter().enumerate() {
                    if !self.has_key(schema, r, row[a]) {
                        return Err(Violation::ForeignKey(i));
                    }
                }
                for (i, &(a, op, bound)) in ts.constraints.iter().enumerate() {
                    if !op.holds(row[a], w.natural(bound)) {
                        return Err(Violation::Arith(i));
                    }
                }
                let rows = &mut self.working[t];
                let at = rows.partition_point(|r| r[ts.pk] < row[ts.pk]);
                rows.insert(at, row);
                Ok(())
            }
            Change::Update { attr, rows: changed } => {
                let mut next = self.working[t].clone();
                for (i, row) in &changed {
                    next[*i] = row.clone();
                }
                if attr == ts.pk {
                    let mut keys: Vec<i64> = next.iter().map(|r| r[ts.pk]).collect();
                    keys.sort_unstable();
                    if keys.windows(2).any(|p| p[0] == p[1]) {
                        return Err(Violation::PrimaryKey);
                    }
                }
                for (i, &(a, r)) in ts.fks.iter().enumerate() {
                    if a == attr && changed.iter().any(|(_, row)| !self.has_key(schema, r, row[a])) {
                        return Err(Violation::ForeignKey(i));
                    }
                }
                for (i, &(a, op, bound)) in ts.constraints.iter().enumerate() {
                    if a == attr
                        && changed
                            .iter()
                            .any(|(_, row)| !op.holds(row[a], w.natural(bound)))
                    {
                        return Err(Violation::Arith(i));
                    }
                }
                if attr == ts.pk {
                    let old = &self.working[t];
                    let moved = changed
                        .iter()
                        .filter(|(i, row)| old[*i][ts.pk] != row[ts.pk])
                        .any(|(i, _)| self.is_referenced(schema, ts, old[*i][ts.pk]));
                    if moved {
                        return Err(Violation::ReferencedRow);
                    }
                }
                next.sort_by_key(|r| r[ts.pk]);
                self.working[t] = next;
                Ok(())
            }
            Change::Delete(idx) => {
                let old = &self.working[t];
                if idx.iter().any(|&i| self.is_referenced(schema, ts, old[i][ts.pk])) {
                    return Err(Violation::ReferencedRow);
                }
                let mut keep = vec![true; old.len()];
                for i in idx {
                    keep[i] = false;
                }
                let mut k = keep.into_iter();
                self.working[t].retain(|_| k.next().unwrap());
                Ok(())
            }
        }
    }

    fn has_key(&self, schema: &Schema, t: usize, key: i64) -> bool {
        let pk = schema.tables[t].pk;
        self.working[t].iter().any(|r| r[pk] == key)
    }

    fn is_referenced(&self, schema: &Schema, ts: &TableSchema, key: i64) -> bool {
        ts.incoming.iter().any(|&(s, k)| {
            let a = schema.tables[s].fks[k].0;
            self.working[s].iter().any(|r| r[a] == key)
        })
    }
}

/// Why a table list does not satisfy the schema.
pub fn schema_violation(
    schema: &Schema,
    w: Bitwidth,
    tables: &[Table],
) -> Option<(usize, String)> {
    for (t, ts) in schema.tables.iter().enumerate() {
        let rows = &tables[t];
        for row in rows {
            if row.len() != ts.arity() {
                return Some((t, format!("row {row:?} has {} values, expected {}", row.len(), ts.arity())));
            }
            if let Some(v) = row.iter().find(|v| !w.contains(**v)) {
                return Some((t, format!("value {v} is outside the {w} range")));
            }
        }
        let mut keys: Vec<i64> = rows.iter().map(|r| r[ts.pk]).collect();
        keys.sort_unstable();
        if keys.windows(2).any(|p| p[0] == p[1]) {
            return Some((t, "duplicate primary key".into()));
        }
        for row in rows {
            for &(a, r) in &ts.fks {
                let pk = schema.tables[r].pk;
                if !tables[r].iter().any(|x| x[pk] == row[a]) {
                    return Some((
                        t,
                        format!(
                            "`{}` = {} references no row of `{}`",
                            ts.attributes[a], row[a], schema.tables[r].name
                        ),
                    ));
                }
            }
            for &(a, op, bound) in &ts.constraints {
                if !op.holds(row[a], w.natural(bound)) {
                    return Some((
                        t,
                        format!(
                            "`{}` = {} breaks `{} {} {bound}`",
                            ts.attributes[a],
                            row[a],
                            ts.attributes[a],
                            op.as_str()
                        ),
                    ));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;

    fn plays() -> Schema {
        load_model(
            "MODEL example
             TABLE author (name,numberOfPlays,PRIMARY KEY(name),numberOfPlays > 0);
             TABLE play (title,theAuthor,PRIMARY KEY(title),FOREIGN KEY(theAuthor) REFERENCES author);
             COMMIT(); COMMIT(); ENDMODEL",
        )
        .unwrap()
        .schema
    }

    #[test]
    fn insert_checks_in_order() {
        let s = plays();
        let w = Bitwidth::default();
        let mut db = DbState::empty(&s);
        assert_eq!(db.apply(&s, w, 0, Change::Insert(vec![7, 0])), Err(Violation::Arith(0)));
        assert_eq!(db.apply(&s, w, 0, Change::Insert(vec![7, 1])), Ok(()));
        assert_eq!(db.working[0], vec![vec![7, 1]]);
        assert_eq!(db.apply(&s, w, 0, Change::Insert(vec![7, 0])), Err(Violation::PrimaryKey));
        assert_eq!(db.apply(&s, w, 1, Change::Insert(vec![1, 3])), Err(Violation::ForeignKey(0)));
        assert_eq!(db.apply(&s, w, 1, Change::Insert(vec![1, 7])), Ok(()));
    }

    #[test]
    fn referenced_rows_are_protected() {
        let s = plays();
        let w = Bitwidth::default();
        let mut db = DbState::new(vec![vec![vec![2, 1], vec![7, 1]], vec![vec![1, 7]]]);
        let before = db.clone();
        assert_eq!(db.apply(&s, w, 0, Change::Delete(vec![1])), Err(Violation::ReferencedRow));
        assert_eq!(
            db.apply(&s, w, 0, Change::Update { attr: 0, rows: vec![(1, vec![3, 1])] }),
            Err(Violation::ReferencedRow)
        );
        assert_eq!(
            db.apply(&s, w, 0, Change::Update { attr: 0, rows: vec![(1, vec![2, 1])] }),
            Err(Violation::PrimaryKey)
        );
        assert_eq!(db, before);
        assert_eq!(db.apply(&s, w, 0, Change::Delete(vec![0])), Ok(()));
        assert_eq!(
            db.apply(&s, w, 0, Change::Update { attr: 1, rows: vec![(0, vec![7, 5])] }),
            Ok(())
        );
        assert_eq!(db.working[0], vec![vec![7, 5]]);
    }

    #[test]
    fn update_keeps_key_order() {
        let s = plays();
        let w = Bitwidth::default();
        let mut db = DbState::new(vec![vec![vec![1, 1], vec![2, 1]], vec![]]);
        db.apply(&s, w, 0, Change::Update { attr: 0, rows: vec![(0, vec![5, 1])] })
            .unwrap();
        assert_eq!(db.working[0], vec![vec![2, 1], vec![5, 1]]);
        db.rollback();
        assert_eq!(db.working[0], vec![vec![1, 1], vec![2, 1]]);
    }

    #[test]
    fn schema_check_of_inputs() {
        let s = plays();
        let w = Bitwidth::default();
        assert!(schema_violation(&s, w, &[vec![vec![1, 1]], vec![vec![3, 1]]]).is_none());
        assert!(schema_violation(&s, w, &[vec![vec![1, 1]], vec![vec![3, 2]]]).is_some());
        assert!(schema_violation(&s, w, &[vec![vec![1, 1], vec![1, 2]], vec![]]).is_some());
        assert!(schema_violation(&s, w, &[vec![vec![1, 9]], vec![]]).is_some());
    }
}
