use super::ast::*;
use super::lexer::{Keyword, Pos, Token, TokenKind};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

/// Parse a token stream produced by [`super::lexer::tokenize`].
pub fn parse(tokens: &[Token]) -> Result<ModelDecl, ParseError> {
    let mut p = Parser { tokens, at: 0 };
    let model = p.model()?;
    if p.at != tokens.len() {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(model)
}

enum Item {
    Cond(Cond),
    Expr(Expr),
}

struct Parser<'t> {
    tokens: &'t [Token],
    at: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn peek2(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.at + 1).map(|t| &t.kind)
    }

    fn pos(&self) -> Pos {
        match self.tokens.get(self.at) {
            Some(t) => t.pos,
            None => self
                .tokens
                .last()
                .map(|t| Pos::new(t.pos.line, t.pos.col + 1))
                .unwrap_or(Pos::new(1, 1)),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: match self.peek() {
                Some(k) => k.to_string(),
                None => "end of input".to_string(),
            },
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.unexpected(&[&kind.to_string()]))
        }
    }

    fn kw(&mut self, k: Keyword) -> Result<(), ParseError> {
        self.expect(TokenKind::Keyword(k))
    }

    fn at_kw(&self, k: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(k))
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                self.at += 1;
                Ok(name.clone())
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn nat(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Some(TokenKind::Nat(n)) => {
                self.at += 1;
                Ok(*n)
            }
            _ => Err(self.unexpected(&["natural number"])),
        }
    }

    fn model(&mut self) -> Result<ModelDecl, ParseError> {
        self.kw(Keyword::Model)?;
        let name = self.ident()?;
        let mut tables = Vec::new();
        while self.at_kw(Keyword::Table) {
            tables.push(self.table()?);
        }
        self.commit_sentinel()?;
        let mut body = self.stmts(&[Keyword::EndModel])?;
        match body.last() {
            Some(Stmt {
                kind: StmtKind::Commit,
                ..
            }) => {
                body.pop();
            }
            _ => {
                return Err(ParseError {
                    pos: self.pos(),
                    expected: vec!["closing `COMMIT();`".into()],
                    found: TokenKind::Keyword(Keyword::EndModel).to_string(),
                })
            }
        }
        self.kw(Keyword::EndModel)?;
        let mut model = ModelDecl { name, tables, body };
        model.renumber();
        Ok(model)
    }

    fn commit_sentinel(&mut self) -> Result<(), ParseError> {
        if !self.at_kw(Keyword::Commit) {
            return Err(self.unexpected(&["opening `COMMIT();`"]));
        }
        self.at += 1;
        self.expect(TokenKind::LParen)?;
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)
    }

    fn table(&mut self) -> Result<TableDecl, ParseError> {
        let pos = self.pos();
        self.kw(Keyword::Table)?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut attributes = vec![self.ident()?];
        self.expect(TokenKind::Comma)?;
        while let Some(TokenKind::Ident(_)) = self.peek() {
            attributes.push(self.ident()?);
            self.expect(TokenKind::Comma)?;
        }
        if !self.at_kw(Keyword::Primary) {
            return Err(self.unexpected(&["attribute", "PRIMARY"]));
        }
        self.kw(Keyword::Primary)?;
        self.kw(Keyword::Key)?;
        self.expect(TokenKind::LParen)?;
        let primary_key = self.ident()?;
        self.expect(TokenKind::RParen)?;
        let mut foreign_keys = Vec::new();
        let mut constraints = Vec::new();
        while self.eat(&TokenKind::Comma) {
            if self.at_kw(Keyword::Foreign) && constraints.is_empty() {
                self.kw(Keyword::Foreign)?;
                self.kw(Keyword::Key)?;
                self.expect(TokenKind::LParen)?;
                let attribute = self.ident()?;
                self.expect(TokenKind::RParen)?;
                self.kw(Keyword::References)?;
                let table = self.ident()?;
                foreign_keys.push(ForeignKey { attribute, table });
            } else {
                let attribute = match self.peek() {
                    Some(TokenKind::Ident(_)) => self.ident()?,
                    _ if constraints.is_empty() => {
                        return Err(self.unexpected(&["FOREIGN", "identifier"]))
                    }
                    _ => return Err(self.unexpected(&["identifier"])),
                };
                let op = self.cmp_op()?;
                let bound = self.nat()?;
                constraints.push(ArithConstraint {
                    attribute,
                    op,
                    bound,
                });
            }
        }
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        Ok(TableDecl {
            name,
            attributes,
            primary_key,
            foreign_keys,
            constraints,
            pos,
        })
    }

    fn cmp_op(&mut self) -> Result<CmpOp, ParseError> {
        let op = match self.peek() {
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Gt) => CmpOp::Gt,
            _ => return Err(self.unexpected(&["`<`", "`=`", "`>`"])),
        };
        self.at += 1;
        Ok(op)
    }

    fn stmts(&mut self, terminators: &[Keyword]) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(k)) if terminators.contains(k) => return Ok(out),
                None => {
                    let expected: Vec<&str> = terminators.iter().map(|k| k.as_str()).collect();
                    return Err(self.unexpected(&expected));
                }
                _ => out.push(self.stmt()?),
            }
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let kind = match self.peek() {
            Some(TokenKind::Keyword(Keyword::If)) => {
                self.at += 1;
                let cond = self.cond()?;
                self.kw(Keyword::Then)?;
                let then_branch = self.stmts(&[Keyword::Else])?;
                self.kw(Keyword::Else)?;
                let else_branch = self.stmts(&[Keyword::EndIf])?;
                self.kw(Keyword::EndIf)?;
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Some(TokenKind::Keyword(Keyword::While)) => {
                self.at += 1;
                let cond = self.cond()?;
                self.kw(Keyword::Do)?;
                let body = self.stmts(&[Keyword::EndWhile])?;
                self.kw(Keyword::EndWhile)?;
                StmtKind::While { cond, body }
            }
            Some(TokenKind::Keyword(k @ (Keyword::Read | Keyword::Load | Keyword::Next))) => {
                self.at += 1;
                self.expect(TokenKind::LParen)?;
                let id = self.ident()?;
                self.expect(TokenKind::RParen)?;
                match k {
                    Keyword::Read => StmtKind::Read(id),
                    Keyword::Load => StmtKind::Load(id),
                    _ => StmtKind::Next(id),
                }
            }
            Some(TokenKind::Keyword(k @ (Keyword::Commit | Keyword::Rollback))) => {
                self.at += 1;
                self.expect(TokenKind::LParen)?;
                self.expect(TokenKind::RParen)?;
                if *k == Keyword::Commit {
                    StmtKind::Commit
                } else {
                    StmtKind::Rollback
                }
            }
            Some(TokenKind::Keyword(Keyword::Insert | Keyword::Update | Keyword::Delete)) => {
                StmtKind::Write(self.db_write()?)
            }
            Some(TokenKind::Ident(_)) => {
                let target = self.ident()?;
                self.expect(TokenKind::Eq)?;
                self.assign_rhs(target)?
            }
            _ => {
                return Err(self.unexpected(&[
                    "IF", "WHILE", "READ", "LOAD", "NEXT", "COMMIT", "ROLLBACK", "INSERT",
                    "UPDATE", "DELETE", "identifier",
                ]))
            }
        };
        self.expect(TokenKind::Semi)?;
        Ok(Stmt {
            id: StmtId(0),
            pos,
            kind,
        })
    }

    fn assign_rhs(&mut self, target: Ident) -> Result<StmtKind, ParseError> {
        if self.at_kw(Keyword::Select) {
            self.at += 1;
            let mut columns = vec![self.ident()?];
            while self.eat(&TokenKind::Comma) {
                columns.push(self.ident()?);
            }
            self.kw(Keyword::From)?;
            let table = self.ident()?;
            self.kw(Keyword::Where)?;
            let cond = self.db_cond()?;
            return Ok(StmtKind::Select {
                target,
                columns,
                table,
                cond,
            });
        }
        if self.at_kw(Keyword::Catch) {
            self.at += 1;
            self.expect(TokenKind::LParen)?;
            let kind = if self.at_kw(Keyword::Next) {
                self.at += 1;
                self.expect(TokenKind::LParen)?;
                let cursor = self.ident()?;
                self.expect(TokenKind::RParen)?;
                StmtKind::CatchNext {
                    flag: target,
                    cursor,
                }
            } else if matches!(
                self.peek(),
                Some(TokenKind::Keyword(
                    Keyword::Insert | Keyword::Update | Keyword::Delete
                ))
            ) {
                StmtKind::CatchWrite {
                    flag: target,
                    write: self.db_write()?,
                }
            } else {
                return Err(self.unexpected(&["NEXT", "INSERT", "UPDATE", "DELETE"]));
            };
            self.expect(TokenKind::RParen)?;
            return Ok(kind);
        }
        let expr = self.expr()?;
        Ok(StmtKind::Assign { target, expr })
    }

    fn db_write(&mut self) -> Result<DbWrite, ParseError> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Insert)) => {
                self.at += 1;
                self.kw(Keyword::Into)?;
                let table = self.ident()?;
                self.kw(Keyword::Values)?;
                self.expect(TokenKind::LParen)?;
                let mut values = vec![self.expr()?];
                while self.eat(&TokenKind::Comma) {
                    values.push(self.expr()?);
                }
                self.expect(TokenKind::RParen)?;
                Ok(DbWrite::Insert { table, values })
            }
            Some(TokenKind::Keyword(Keyword::Update)) => {
                self.at += 1;
                let table = self.ident()?;
                self.kw(Keyword::Set)?;
                let attribute = self.ident()?;
                self.expect(TokenKind::Eq)?;
                let value = self.expr()?;
                self.kw(Keyword::Where)?;
                let cond = self.db_cond()?;
                Ok(DbWrite::Update {
                    table,
                    attribute,
                    value,
                    cond,
                })
            }
            Some(TokenKind::Keyword(Keyword::Delete)) => {
                self.at += 1;
                self.kw(Keyword::From)?;
                let table = self.ident()?;
                self.kw(Keyword::Where)?;
                let cond = self.db_cond()?;
                Ok(DbWrite::Delete { table, cond })
            }
            _ => Err(self.unexpected(&["INSERT", "UPDATE", "DELETE"])),
        }
    }

    fn bool_op(&self) -> Option<BoolOp> {
        match self.peek() {
            Some(TokenKind::AndAnd) => Some(BoolOp::And),
            Some(TokenKind::OrOr) => Some(BoolOp::Or),
            _ => None,
        }
    }

    fn arith_op(&self) -> Option<ArithOp> {
        match self.peek() {
            Some(TokenKind::Plus) => Some(ArithOp::Add),
            Some(TokenKind::Minus) => Some(ArithOp::Sub),
            Some(TokenKind::Star) => Some(ArithOp::Mul),
            Some(TokenKind::Slash) => Some(ArithOp::Div),
            _ => None,
        }
    }

    fn db_cond(&mut self) -> Result<DbCond, ParseError> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.at += 1;
                Ok(DbCond::True)
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.at += 1;
                Ok(DbCond::False)
            }
            Some(TokenKind::LParen) => {
                self.at += 1;
                let c = if self.eat(&TokenKind::Bang) {
                    DbCond::Not(Box::new(self.db_cond()?))
                } else if let Some(TokenKind::Ident(_)) = self.peek() {
                    let attribute = self.ident()?;
                    let op = self.cmp_op()?;
                    let rhs = self.expr()?;
                    DbCond::Cmp { attribute, op, rhs }
                } else {
                    let lhs = self.db_cond()?;
                    let op = self
                        .bool_op()
                        .ok_or_else(|| self.unexpected(&["`&&`", "`||`"]))?;
                    self.at += 1;
                    let rhs = self.db_cond()?;
                    DbCond::Bin {
                        op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    }
                };
                self.expect(TokenKind::RParen)?;
                Ok(c)
            }
            _ => Err(self.unexpected(&["TRUE", "FALSE", "`(`"])),
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let pos = self.at;
        match self.item()? {
            Item::Cond(c) => Ok(c),
            Item::Expr(_) => {
                self.at = pos;
                Err(self.unexpected(&["condition"]))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.at;
        match self.item()? {
            Item::Expr(e) => Ok(e),
            Item::Cond(_) => {
                self.at = pos;
                Err(self.unexpected(&["expression"]))
            }
        }
    }

    /// A condition or an expression; parenthesized forms are told apart by
    /// their operator.
    fn item(&mut self) -> Result<Item, ParseError> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.at += 1;
                Ok(Item::Cond(Cond::True))
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.at += 1;
                Ok(Item::Cond(Cond::False))
            }
            Some(TokenKind::Keyword(Keyword::Nil)) => {
                self.at += 1;
                Ok(Item::Expr(Expr::Nil))
            }
            Some(TokenKind::Nat(n)) => {
                self.at += 1;
                Ok(Item::Expr(Expr::Nat(*n)))
            }
            Some(TokenKind::LBracket) => {
                self.at += 1;
                let head = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let tail = self.expr()?;
                self.expect(TokenKind::RBracket)?;
                Ok(Item::Expr(Expr::Cons {
                    head: Box::new(head),
                    tail: Box::new(tail),
                }))
            }
            Some(TokenKind::Ident(_)) => {
                let id = self.ident()?;
                if self.eat(&TokenKind::Dot) {
                    if self.eat(&TokenKind::Keyword(Keyword::Head)) {
                        return Ok(Item::Expr(Expr::Head(id)));
                    }
                    if self.eat(&TokenKind::Keyword(Keyword::Tail)) {
                        return Ok(Item::Expr(Expr::Tail(id)));
                    }
                    return Err(self.unexpected(&["HEAD", "TAIL"]));
                }
                if self.peek() == Some(&TokenKind::LParen)
                    && matches!(self.peek2(), Some(TokenKind::Ident(_)))
                {
                    self.at += 1;
                    let attribute = self.ident()?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(Item::Expr(Expr::Column {
                        cursor: id,
                        attribute,
                    }));
                }
                Ok(Item::Expr(Expr::Var(id)))
            }
            Some(TokenKind::LParen) => {
                self.at += 1;
                let item = self.paren_item()?;
                self.expect(TokenKind::RParen)?;
                Ok(item)
            }
            _ => Err(self.unexpected(&[
                "identifier",
                "natural number",
                "NIL",
                "TRUE",
                "FALSE",
                "`(`",
                "`[`",
            ])),
        }
    }

    fn paren_item(&mut self) -> Result<Item, ParseError> {
        if self.eat(&TokenKind::Bang) {
            return Ok(Item::Cond(Cond::Not(Box::new(self.cond()?))));
        }
        if self.eat(&TokenKind::Minus) {
            return Ok(Item::Expr(Expr::Neg(Box::new(self.expr()?))));
        }
        let lhs_at = self.at;
        let lhs = self.item()?;
        if let Some(op) = self.bool_op() {
            let Item::Cond(lhs) = lhs else {
                self.at = lhs_at;
                return Err(self.unexpected(&["condition"]));
            };
            self.at += 1;
            let rhs = self.cond()?;
            return Ok(Item::Cond(Cond::Bin {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            }));
        }
        let Item::Expr(lhs) = lhs else {
            return Err(self.unexpected(&["`&&`", "`||`"]));
        };
        if let Some(op) = self.arith_op() {
            self.at += 1;
            let rhs = self.expr()?;
            return Ok(Item::Expr(Expr::Arith {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            }));
        }
        let op = match self.cmp_op() {
            Ok(op) => op,
            Err(_) => {
                return Err(self.unexpected(&[
                    "`+`", "`-`", "`*`", "`/`", "`<`", "`=`", "`>`",
                ]))
            }
        };
        if op == CmpOp::Eq && self.at_kw(Keyword::Nil) {
            if let Expr::Var(id) = lhs {
                self.at += 1;
                return Ok(Item::Cond(Cond::IsNil(id)));
            }
        }
        let rhs = self.expr()?;
        Ok(Item::Cond(Cond::Cmp { lhs, op, rhs }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn parse_src(src: &str) -> Result<ModelDecl, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn minimal_model() {
        let m = parse_src("MODEL m COMMIT(); COMMIT(); ENDMODEL").unwrap();
        assert_eq!(m.name, "m");
        assert!(m.tables.is_empty());
        assert!(m.body.is_empty());
        assert_eq!(m.closing_commit(), StmtId(1));
    }

    #[test]
    fn missing_sentinels() {
        assert!(parse_src("MODEL m ENDMODEL").is_err());
        assert!(parse_src("MODEL m COMMIT(); ENDMODEL").is_err());
        assert!(parse_src("MODEL m COMMIT(); x = 1; ENDMODEL").is_err());
    }

    #[test]
    fn inner_commit_before_closing() {
        let m = parse_src("MODEL m COMMIT(); COMMIT(); COMMIT(); ENDMODEL").unwrap();
        assert_eq!(m.body.len(), 1);
        assert_eq!(m.body[0].kind, StmtKind::Commit);
    }

    #[test]
    fn conditions_and_expressions() {
        let m = parse_src(
            "MODEL m COMMIT(); IF (((a + 1) < b) && (!(xs = NIL))) THEN y = (- [1, xs].HEAD); ELSE ENDIF; COMMIT(); ENDMODEL",
        );
        assert!(m.is_err(), "HEAD applies to identifiers only");
        let m = parse_src(
            "MODEL m COMMIT(); IF (((a + 1) < b) && (!(xs = NIL))) THEN y = (- xs.HEAD); ELSE ENDIF; COMMIT(); ENDMODEL",
        )
        .unwrap();
        let StmtKind::If { cond, then_branch, .. } = &m.body[0].kind else {
            panic!()
        };
        assert!(matches!(cond, Cond::Bin { op: BoolOp::And, .. }));
        assert_eq!(
            then_branch[0].kind,
            StmtKind::Assign {
                target: "y".into(),
                expr: Expr::Neg(Box::new(Expr::Head("xs".into())))
            }
        );
    }

    #[test]
    fn table_declaration() {
        let m = parse_src(
            "MODEL m TABLE t (a,b,PRIMARY KEY(a),FOREIGN KEY(b) REFERENCES u,b > 0,b < 5); COMMIT(); COMMIT(); ENDMODEL",
        )
        .unwrap();
        let t = &m.tables[0];
        assert_eq!(t.attributes, vec!["a", "b"]);
        assert_eq!(t.foreign_keys.len(), 1);
        assert_eq!(t.constraints.len(), 2);
        assert!(parse_src("MODEL m TABLE t (PRIMARY KEY(a)); COMMIT(); COMMIT(); ENDMODEL").is_err());
        assert!(parse_src("MODEL m TABLE t (a,b,PRIMARY KEY(a),b > 0,FOREIGN KEY(b) REFERENCES u); COMMIT(); COMMIT(); ENDMODEL").is_err());
    }

    #[test]
    fn catch_forms() {
        let m = parse_src(
            "MODEL m COMMIT(); r = SELECT a FROM t WHERE TRUE; e = CATCH(NEXT(r)); f = CATCH(DELETE FROM t WHERE (a = r(a))); COMMIT(); ENDMODEL",
        )
        .unwrap();
        assert!(matches!(m.body[1].kind, StmtKind::CatchNext { .. }));
        assert!(matches!(
            m.body[2].kind,
            StmtKind::CatchWrite {
                write: DbWrite::Delete { .. },
                ..
            }
        ));
    }

    #[test]
    fn error_reports_position() {
        let e = parse_src("MODEL m COMMIT();\n x = ; COMMIT(); ENDMODEL").unwrap_err();
        assert_eq!(e.pos, Pos::new(2, 6));
    }
}
