use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ConsqlError, Result};
use crate::relation::CmpOp;

const RESERVED: &[&str] = &[
    "ALL",
    "AND",
    "AS",
    "CHECK",
    "COUNT",
    "CREATE",
    "EXISTS",
    "FROM",
    "FUNCTION_TO",
    "GUESS",
    "IN",
    "MAXIMIZE",
    "MINIMIZE",
    "NOT",
    "OF",
    "OR",
    "PARTIAL",
    "PARTITION",
    "PERMUTATION",
    "RETURN",
    "SELECT",
    "SPECIFICATION",
    "SUBSET",
    "SUM",
    "TABLE",
    "TOTAL",
    "UNION",
    "WHERE",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(s))
}

/// Parses a whole source file.
pub fn parse_script(src: &str) -> Result<Script> {
    let mut p = Parser::new(src)?;
    let mut script = Script::default();
    loop {
        while p.eat(&Tok::Semi) {}
        if p.at(&Tok::Eof) {
            return Ok(script);
        }
        if p.at_kw("CREATE") {
            script.specs.push(p.specification()?);
        } else if p.at_kw("SELECT") {
            script.queries.push(p.query()?);
        } else {
            return Err(p.unexpected("CREATE SPECIFICATION or SELECT"));
        }
    }
}

/// Parses a source file holding exactly one specification (and nothing
/// else but comments).
pub fn parse_spec(src: &str) -> Result<Specification> {
    let mut p = Parser::new(src)?;
    let spec = p.specification()?;
    while p.eat(&Tok::Semi) {}
    p.expect(&Tok::Eof, "end of input")?;
    Ok(spec)
}

/// Parses a single query.
pub fn parse_query(src: &str) -> Result<Query> {
    let mut p = Parser::new(src)?;
    let q = p.query()?;
    while p.eat(&Tok::Semi) {}
    p.expect(&Tok::Eof, "end of input")?;
    Ok(q)
}

/// Parses a single boolean or scalar expression.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect(&Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: String) -> ConsqlError {
        let t = &self.toks[self.pos];
        ConsqlError::Syntax {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn unexpected(&self, wanted: &str) -> ConsqlError {
        self.error_here(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: &Tok, wanted: &str) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn kw_at(&self, k: usize, kw: &str) -> bool {
        matches!(self.peek_at(k), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.kw_at(0, kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Tok::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn at_plain_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !is_reserved(s))
    }

    fn ident_list(&mut self) -> Result<Vec<String>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn specification(&mut self) -> Result<Specification> {
        self.expect_kw("CREATE")?;
        self.expect_kw("SPECIFICATION")?;
        let name = self.ident()?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut guesses = Vec::new();
        while self.at_kw("GUESS") {
            guesses.push(self.guess_table()?);
        }
        if guesses.is_empty() {
            return Err(self.unexpected("GUESS"));
        }
        let objective = if self.at_kw("MINIMIZE") || self.at_kw("MAXIMIZE") {
            let direction = if self.eat_kw("MINIMIZE") {
                Direction::Minimize
            } else {
                self.bump();
                Direction::Maximize
            };
            self.expect(&Tok::LParen, "`(`")?;
            let query = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            Some(Objective { direction, query })
        } else {
            None
        };
        let mut checks = Vec::new();
        while self.eat_kw("CHECK") {
            self.expect(&Tok::LParen, "`(`")?;
            checks.push(self.expr()?);
            self.expect(&Tok::RParen, "`)`")?;
        }
        if checks.is_empty() {
            if !self.at(&Tok::RParen) && !self.at_kw("RETURN") {
                return Err(self.unexpected("CHECK"));
            }
            let t = &self.toks[self.pos];
            return Err(ConsqlError::NoChecks {
                line: t.line,
                col: t.col,
            });
        }
        let mut returns = Vec::new();
        while self.eat_kw("RETURN") {
            self.expect_kw("TABLE")?;
            let name = self.ident()?;
            self.expect_kw("AS")?;
            returns.push(ReturnTable {
                name,
                query: self.query()?,
            });
        }
        self.expect(&Tok::RParen, "`)`")?;
        Ok(Specification {
            name,
            guesses,
            objective,
            checks,
            returns,
        })
    }

    fn guess_table(&mut self) -> Result<GuessTable> {
        self.expect_kw("GUESS")?;
        self.expect_kw("TABLE")?;
        let name = self.ident()?;
        let aliases = if self.eat(&Tok::LParen) {
            let names = self.ident_list()?;
            self.expect(&Tok::RParen, "`)`")?;
            Some(names)
        } else {
            None
        };
        self.expect_kw("AS")?;
        let body = self.select(true)?;
        Ok(GuessTable {
            name,
            aliases,
            body,
        })
    }

    fn query(&mut self) -> Result<Query> {
        let mut q = Query::Select(Box::new(self.select(false)?));
        while self.eat_kw("UNION") {
            let all = self.eat_kw("ALL");
            let right = Query::Select(Box::new(self.select(false)?));
            q = Query::Union {
                left: Box::new(q),
                right: Box::new(right),
                all,
            };
        }
        Ok(q)
    }

    fn select(&mut self, guessed: bool) -> Result<Select> {
        self.expect_kw("SELECT")?;
        let mut items = vec![self.select_item()?];
        while self.eat(&Tok::Comma) {
            items.push(self.select_item()?);
        }
        self.expect_kw("FROM")?;
        let from = self.from_list(guessed)?;
        let filter = if self.eat_kw("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(Select {
            items,
            from,
            filter,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat(&Tok::Star) {
            return Ok(SelectItem::Wildcard);
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn at_shape(&self, k: usize) -> bool {
        ["SUBSET", "TOTAL", "PARTIAL", "FUNCTION_TO", "PARTITION", "PERMUTATION"]
            .iter()
            .any(|kw| self.kw_at(k, kw))
    }

    fn from_list(&mut self, guessed: bool) -> Result<Vec<FromItem>> {
        let mut items = Vec::new();
        loop {
            if guessed && self.at_shape(0) {
                // an unparenthesized shape takes the rest of the list
                let shape = self.shape()?;
                items.push(FromItem::Shaped { shape, alias: None });
                return Ok(items);
            }
            items.push(self.from_item(guessed)?);
            if !self.eat(&Tok::Comma) {
                return Ok(items);
            }
        }
    }

    fn optional_alias(&mut self) -> Result<Option<String>> {
        if self.eat_kw("AS") || self.at_plain_ident() {
            Ok(Some(self.ident()?))
        } else {
            Ok(None)
        }
    }

    fn from_item(&mut self, guessed: bool) -> Result<FromItem> {
        if self.eat(&Tok::LParen) {
            if self.at_shape(0) {
                if !guessed {
                    return Err(self.error_here(
                        "search-space declarations are only allowed in GUESS tables".into(),
                    ));
                }
                let shape = self.shape()?;
                self.expect(&Tok::RParen, "`)`")?;
                let alias = self.optional_alias()?;
                return Ok(FromItem::Shaped { shape, alias });
            }
            if !self.at_kw("SELECT") {
                return Err(self.unexpected("SELECT or a search-space declaration"));
            }
            let query = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            let alias = match self.optional_alias()? {
                Some(a) => a,
                None => return Err(self.unexpected("alias for derived table")),
            };
            return Ok(FromItem::Derived { query, alias });
        }
        if self.at_shape(0) {
            return Err(ConsqlError::UnknownShape {
                line: self.toks[self.pos].line,
                col: self.toks[self.pos].col,
                found: self.peek().describe(),
            });
        }
        let first = self.ident()?;
        let name = if self.at(&Tok::Dot) && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            TableName {
                schema: Some(first),
                name: self.ident()?,
            }
        } else {
            TableName {
                schema: None,
                name: first,
            }
        };
        let alias = self.optional_alias()?;
        Ok(FromItem::Table { name, alias })
    }

    fn shape(&mut self) -> Result<Shape> {
        let here = (self.toks[self.pos].line, self.toks[self.pos].col);
        let shape = if self.eat_kw("SUBSET") {
            self.expect_kw("OF")?;
            Shape::Subset {
                of: self.of_clause()?,
            }
        } else if self.at_kw("TOTAL") || self.at_kw("PARTIAL") || self.at_kw("FUNCTION_TO") {
            let totality = if self.eat_kw("PARTIAL") {
                Totality::Partial
            } else {
                self.eat_kw("TOTAL");
                Totality::Total
            };
            self.expect_kw("FUNCTION_TO")?;
            self.expect(&Tok::LParen, "`(`")?;
            let range = if self.at_plain_ident() && matches!(self.peek_at(1), Tok::RParen) {
                Range::Table(self.ident()?)
            } else {
                let lo = self.additive()?;
                self.expect(&Tok::DotDot, "`..`")?;
                let hi = self.additive()?;
                Range::Interval(lo, hi)
            };
            self.expect(&Tok::RParen, "`)`")?;
            self.expect_kw("AS")?;
            let fields = self.ident_list()?;
            self.expect_kw("OF")?;
            Shape::Function {
                totality,
                range,
                fields,
                of: self.of_clause()?,
            }
        } else if self.eat_kw("PARTITION") {
            self.expect(&Tok::LParen, "`(`")?;
            let blocks = match self.bump() {
                Tok::Int(n) if n >= 1 && n <= u32::MAX as i64 => n as u32,
                _ => {
                    return Err(ConsqlError::Syntax {
                        line: here.0,
                        col: here.1,
                        message: "PARTITION needs a positive block count".into(),
                    })
                }
            };
            self.expect(&Tok::RParen, "`)`")?;
            self.expect_kw("AS")?;
            let field = self.ident()?;
            self.expect_kw("OF")?;
            Shape::Partition {
                blocks,
                field,
                of: self.of_clause()?,
            }
        } else if self.eat_kw("PERMUTATION") {
            self.expect_kw("AS")?;
            let field = self.ident()?;
            self.expect_kw("OF")?;
            Shape::Permutation {
                field,
                of: self.of_clause()?,
            }
        } else {
            return Err(ConsqlError::UnknownShape {
                line: here.0,
                col: here.1,
                found: self.peek().describe(),
            });
        };
        Ok(shape)
    }

    fn of_clause(&mut self) -> Result<Vec<FromItem>> {
        let mut items = vec![self.from_item(false)?];
        while self.eat(&Tok::Comma) {
            items.push(self.from_item(false)?);
        }
        Ok(items)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_kw("OR") {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.not_expr()?;
        while self.eat_kw("AND") {
            e = Expr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.predicate()
    }

    fn predicate(&mut self) -> Result<Expr> {
        if self.eat_kw("EXISTS") {
            self.expect(&Tok::LParen, "`(`")?;
            let q = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(Expr::Exists(Box::new(q)));
        }
        let left = self.additive()?;
        if let Tok::Op(op) = self.peek() {
            let op = CmpOp::from_symbol(op).expect("lexer emits known operators");
            self.bump();
            let right = self.additive()?;
            return Ok(Expr::cmp(op, left, right));
        }
        let negated = self.at_kw("NOT") && self.kw_at(1, "IN");
        if negated {
            self.bump();
        }
        if self.eat_kw("IN") {
            self.expect(&Tok::LParen, "`(`")?;
            let q = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(Expr::In {
                expr: Box::new(left),
                query: Box::new(q),
                negated,
            });
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::Arith(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while self.eat(&Tok::Star) {
            e = Expr::Arith(ArithOp::Mul, Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = if self.at_kw("SELECT") {
                    Expr::Subquery(Box::new(self.query()?))
                } else {
                    self.expr()?
                };
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("COUNT") => {
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                self.expect(&Tok::Star, "`*`")?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Count)
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("SUM") => {
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Sum(Box::new(e)))
            }
            Tok::Ident(_) => {
                let first = self.ident()?;
                if self.eat(&Tok::Dot) {
                    let name = self.ident()?;
                    Ok(Expr::Column(ColumnRef {
                        qualifier: Some(first),
                        name,
                    }))
                } else {
                    Ok(Expr::Column(ColumnRef {
                        qualifier: None,
                        name: first,
                    }))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_expr("a + b * 2 < c AND NOT x = 1 OR y <> 'q'").unwrap();
        let Expr::Or(l, _) = e else { panic!() };
        let Expr::And(cmp, not) = *l else { panic!() };
        assert!(matches!(*not, Expr::Not(_)));
        let Expr::Cmp(CmpOp::Lt, sum, _) = *cmp else {
            panic!()
        };
        assert!(matches!(*sum, Expr::Arith(ArithOp::Add, _, _)));
    }

    #[test]
    fn not_in_and_scalar_subquery() {
        let e = parse_expr("x NOT IN (SELECT a FROM T) AND 2 = (SELECT COUNT(*) FROM T)").unwrap();
        let Expr::And(l, r) = e else { panic!() };
        assert!(matches!(*l, Expr::In { negated: true, .. }));
        let Expr::Cmp(_, _, sub) = *r else { panic!() };
        assert!(matches!(*sub, Expr::Subquery(_)));
    }

    #[test]
    fn missing_check_is_rejected() {
        let src = "CREATE SPECIFICATION P (\n GUESS TABLE G AS SELECT * FROM SUBSET OF T\n)";
        match parse_spec(src) {
            Err(ConsqlError::NoChecks { line: 3, col: 1 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_shape_is_rejected() {
        let src = "CREATE SPECIFICATION P ( GUESS TABLE G AS SELECT * FROM FUNCTION_TO T \
                   CHECK (1 = 1) )";
        assert!(matches!(parse_spec(src), Err(ConsqlError::Syntax { .. })));
        let src = "SELECT * FROM SUBSET OF T";
        assert!(matches!(
            parse_query(src),
            Err(ConsqlError::UnknownShape { .. })
        ));
    }

    #[test]
    fn qualified_table_in_post_query() {
        let q = parse_query("SELECT * FROM Graph_Coloring.SOLUTION").unwrap();
        let Query::Select(s) = q else { panic!() };
        assert_eq!(
            s.from[0],
            FromItem::Table {
                name: TableName {
                    schema: Some("Graph_Coloring".into()),
                    name: "SOLUTION".into()
                },
                alias: None
            }
        );
    }
}
