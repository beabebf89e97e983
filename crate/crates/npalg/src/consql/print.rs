use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;
use crate::relation::CmpOp;

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Ne => "<>",
        other => other.symbol(),
    }
}

fn list<T: Display>(f: &mut Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl Display for Script {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for s in &self.specs {
            writeln!(f, "{s}")?;
        }
        for q in &self.queries {
            writeln!(f, "{q};")?;
        }
        Ok(())
    }
}

impl Display for Specification {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "CREATE SPECIFICATION {} (", self.name)?;
        for g in &self.guesses {
            write!(f, "  GUESS TABLE {}", g.name)?;
            if let Some(a) = &g.aliases {
                f.write_char('(')?;
                list(f, a, ", ")?;
                f.write_char(')')?;
            }
            writeln!(f, " AS {}", g.body)?;
        }
        if let Some(o) = &self.objective {
            let kw = match o.direction {
                Direction::Minimize => "MINIMIZE",
                Direction::Maximize => "MAXIMIZE",
            };
            writeln!(f, "  {kw} ({})", o.query)?;
        }
        for c in &self.checks {
            writeln!(f, "  CHECK ({c})")?;
        }
        for r in &self.returns {
            writeln!(f, "  RETURN TABLE {} AS {}", r.name, r.query)?;
        }
        f.write_char(')')
    }
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Query::Select(s) => write!(f, "{s}"),
            Query::Union { left, right, all } => {
                let kw = if *all { "UNION ALL" } else { "UNION" };
                write!(f, "{left} {kw} {right}")
            }
        }
    }
}

impl Display for Select {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        list(f, &self.items, ", ")?;
        f.write_str(" FROM ")?;
        let last = self.from.len().saturating_sub(1);
        for (i, it) in self.from.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match it {
                FromItem::Shaped { shape, alias: None } if i == last => write!(f, "{shape}")?,
                other => write!(f, "{other}")?,
            }
        }
        if let Some(w) = &self.filter {
            write!(f, " WHERE {w}")?;
        }
        Ok(())
    }
}

impl Display for SelectItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Wildcard => f.write_char('*'),
            SelectItem::Expr { expr, alias } => {
                write!(f, "{expr}")?;
                if let Some(a) = alias {
                    write!(f, " AS {a}")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for TableName {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.schema {
            write!(f, "{s}.")?;
        }
        f.write_str(&self.name)
    }
}

impl Display for FromItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            FromItem::Table { name, alias } => {
                write!(f, "{name}")?;
                if let Some(a) = alias {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            FromItem::Derived { query, alias } => write!(f, "({query}) {alias}"),
            FromItem::Shaped { shape, alias } => {
                write!(f, "({shape})")?;
                if let Some(a) = alias {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for Shape {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Subset { of } => {
                f.write_str("SUBSET OF ")?;
                list(f, of, ", ")
            }
            Shape::Function {
                totality,
                range,
                fields,
                of,
            } => {
                let t = match totality {
                    Totality::Total => "TOTAL",
                    Totality::Partial => "PARTIAL",
                };
                write!(f, "{t} FUNCTION_TO(")?;
                match range {
                    Range::Table(t) => f.write_str(t)?,
                    Range::Interval(lo, hi) => write!(f, "{lo}..{hi}")?,
                }
                f.write_str(") AS ")?;
                list(f, fields, ", ")?;
                f.write_str(" OF ")?;
                list(f, of, ", ")
            }
            Shape::Partition { blocks, field, of } => {
                write!(f, "PARTITION({blocks}) AS {field} OF ")?;
                list(f, of, ", ")
            }
            Shape::Permutation { field, of } => {
                write!(f, "PERMUTATION AS {field} OF ")?;
                list(f, of, ", ")
            }
        }
    }
}

impl Display for ColumnRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(q) = &self.qualifier {
            write!(f, "{q}.")?;
        }
        f.write_str(&self.name)
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => write!(f, "{c}"),
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Expr::Arith(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Cmp(op, a, b) => write!(f, "({a} {} {b})", cmp_symbol(*op)),
            Expr::And(a, b) => write!(f, "({a} AND {b})"),
            Expr::Or(a, b) => write!(f, "({a} OR {b})"),
            Expr::Not(a) => write!(f, "(NOT {a})"),
            Expr::Exists(q) => write!(f, "EXISTS ({q})"),
            Expr::In {
                expr,
                query,
                negated,
            } => {
                let kw = if *negated { "NOT IN" } else { "IN" };
                write!(f, "({expr} {kw} ({query}))")
            }
            Expr::Subquery(q) => write!(f, "({q})"),
            Expr::Count => f.write_str("COUNT(*)"),
            Expr::Sum(e) => write!(f, "SUM({e})"),
        }
    }
}
