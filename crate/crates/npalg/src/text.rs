//! S-expression text formats for NP-Alg queries and ESO sentences.
//!
//! ```text
//! (query
//!   (guess Q1 1) (guess Q2 1)
//!   (base EDGES 2)
//!   (let COL (union (guessed Q1) (guessed Q2)))
//!   (fail (minus (dom 1) (ref COL))))
//! ```
//!
//! Expressions: `(base R)`, `(guessed Q)`, `(ref L)`, `(dom k)`,
//! `(select P E)`, `(project (A ...) E)`, `(product E E)`, `(union E E)`,
//! `(minus E E)`, `(intersect E E)`, `(symdiff E E)`, `(divide E E)`,
//! `(join P E E)`, `(natjoin E E)`, `(rename ALIAS (NAME ...) E)` with `_`
//! for no alias, and `(let L E BODY)`.
//!
//! Attributes are `$i` (1-based), `name` or `qualifier.name`. Predicates are
//! `true`, `(OP X Y)` with OP one of `= != < <= > >=`, `(and P ...)`,
//! `(or P ...)` and `(not P)`. Operands are attributes, integers, strings
//! (symbols) or `(text "s")`.
//!
//! ESO sentences:
//!
//! ```text
//! (eso (guess S 1) (forall x y) (exists z) (or (not (E x y)) (S x)))
//! ```
//!
//! Formulas are atoms `(P t ...)`, `(= t t)`, `(and F F ...)`,
//! `(or F F ...)` and `(not F)`; terms are variables, integers, strings or
//! `(text "s")`.

use lexpr::Value;
use thiserror::Error;

use crate::guess::{GuessDecl, NpAlgQuery};
use crate::relation::{AlgebraExpr, AttrRef, CmpOp, Constant, Operand, Pred};
use crate::translate::{EsoSentence, FoFormula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("malformed `{form}`: {message}")]
    Form { form: String, message: String },
}

type Result<T> = std::result::Result<T, TextError>;

fn bad(form: &Value, message: impl Into<String>) -> TextError {
    let mut form = form.to_string();
    if form.len() > 60 {
        form.truncate(57);
        form.push_str("...");
    }
    TextError::Form {
        form,
        message: message.into(),
    }
}

fn read(src: &str) -> Result<Value> {
    lexpr::from_str(src).map_err(|e| {
        let (line, col) = e
            .location()
            .map_or((0, 0), |l| (l.line(), l.column() + 1));
        TextError::Syntax {
            line,
            col,
            message: e.to_string(),
        }
    })
}

fn items(v: &Value) -> Option<Vec<&Value>> {
    match v {
        Value::Null => Some(Vec::new()),
        Value::Cons(_) => v.list_iter().map(|it| it.collect()),
        _ => None,
    }
}

/// Splits `(head arg ...)`.
fn call(v: &Value) -> Option<(&str, Vec<&Value>)> {
    let xs = items(v)?;
    let (head, rest) = xs.split_first()?;
    Some((head.as_symbol()?, rest.to_vec()))
}

fn symbol<'a>(v: &'a Value, ctx: &Value) -> Result<&'a str> {
    v.as_symbol().ok_or_else(|| bad(ctx, format!("expected a name, found `{v}`")))
}

fn count(v: &Value, ctx: &Value) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| bad(ctx, format!("expected a non-negative integer, found `{v}`")))
}

fn arity(args: &[&Value], n: usize, ctx: &Value) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(bad(ctx, format!("expected {n} arguments, found {}", args.len())))
    }
}

fn constant(v: &Value) -> Option<Constant> {
    if let Some(i) = v.as_i64() {
        return Some(Constant::Int(i));
    }
    if let Some(s) = v.as_str() {
        return Some(Constant::sym(s));
    }
    match call(v)? {
        ("text", args) if args.len() == 1 => args[0].as_str().map(Constant::text),
        _ => None,
    }
}

fn constant_value(c: &Constant) -> Value {
    match c {
        Constant::Int(i) => Value::from(*i),
        Constant::Sym(s) => Value::string(&**s),
        Constant::Text(s) => Value::list(vec![Value::symbol("text"), Value::string(&**s)]),
    }
}

fn attr(v: &Value, ctx: &Value) -> Result<AttrRef> {
    let s = symbol(v, ctx)?;
    if let Some(pos) = s.strip_prefix('$') {
        return match pos.parse::<usize>() {
            Ok(i) if i > 0 => Ok(AttrRef::Pos(i)),
            _ => Err(bad(ctx, format!("bad column position `{s}`"))),
        };
    }
    Ok(match s.split_once('.') {
        Some((q, n)) => AttrRef::qualified(q, n),
        None => AttrRef::name(s),
    })
}

fn attr_value(a: &AttrRef) -> Value {
    Value::symbol(match a {
        AttrRef::Pos(i) => format!("${i}"),
        AttrRef::Named {
            qualifier: Some(q),
            name,
        } => format!("{q}.{name}"),
        AttrRef::Named {
            qualifier: None,
            name,
        } => name.clone(),
    })
}

fn operand(v: &Value, ctx: &Value) -> Result<Operand> {
    match constant(v) {
        Some(c) => Ok(Operand::Const(c)),
        None => Ok(Operand::Attr(attr(v, ctx)?)),
    }
}

fn operand_value(o: &Operand) -> Value {
    match o {
        Operand::Attr(a) => attr_value(a),
        Operand::Const(c) => constant_value(c),
    }
}

fn pred(v: &Value) -> Result<Pred> {
    if v.as_symbol() == Some("true") {
        return Ok(Pred::True);
    }
    let (head, args) = call(v).ok_or_else(|| bad(v, "expected a predicate"))?;
    Ok(match head {
        "and" => Pred::And(args.into_iter().map(pred).collect::<Result<_>>()?),
        "or" => Pred::Or(args.into_iter().map(pred).collect::<Result<_>>()?),
        "not" => {
            arity(&args, 1, v)?;
            Pred::Not(Box::new(pred(args[0])?))
        }
        op => {
            let op = CmpOp::from_symbol(op).ok_or_else(|| bad(v, format!("unknown predicate `{op}`")))?;
            arity(&args, 2, v)?;
            Pred::Cmp(operand(args[0], v)?, op, operand(args[1], v)?)
        }
    })
}

fn pred_value(p: &Pred) -> Value {
    let list = |head: &str, rest: Vec<Value>| {
        Value::list(std::iter::once(Value::symbol(head)).chain(rest).collect::<Vec<_>>())
    };
    match p {
        Pred::True => Value::symbol("true"),
        Pred::Cmp(a, op, b) => list(op.symbol(), vec![operand_value(a), operand_value(b)]),
        Pred::And(ps) => list("and", ps.iter().map(pred_value).collect()),
        Pred::Or(ps) => list("or", ps.iter().map(pred_value).collect()),
        Pred::Not(p) => list("not", vec![pred_value(p)]),
    }
}

fn expr(v: &Value) -> Result<AlgebraExpr> {
    let (head, args) = call(v).ok_or_else(|| bad(v, "expected an expression"))?;
    let binary = |f: fn(Box<AlgebraExpr>, Box<AlgebraExpr>) -> AlgebraExpr| -> Result<AlgebraExpr> {
        arity(&args, 2, v)?;
        Ok(f(Box::new(expr(args[0])?), Box::new(expr(args[1])?)))
    };
    Ok(match head {
        "base" | "guessed" | "ref" => {
            arity(&args, 1, v)?;
            let name = symbol(args[0], v)?.to_string();
            match head {
                "base" => AlgebraExpr::Base(name),
                "guessed" => AlgebraExpr::Guessed(name),
                _ => AlgebraExpr::LetRef(name),
            }
        }
        "dom" => {
            arity(&args, 1, v)?;
            AlgebraExpr::DomPower(count(args[0], v)?)
        }
        "select" => {
            arity(&args, 2, v)?;
            expr(args[1])?.select(pred(args[0])?)
        }
        "project" => {
            arity(&args, 2, v)?;
            let cols = items(args[0]).ok_or_else(|| bad(v, "expected a column list"))?;
            let cols = cols.into_iter().map(|c| attr(c, v)).collect::<Result<_>>()?;
            expr(args[1])?.project(cols)
        }
        "product" => binary(AlgebraExpr::Product)?,
        "union" => binary(AlgebraExpr::Union)?,
        "minus" => binary(AlgebraExpr::Difference)?,
        "intersect" => binary(AlgebraExpr::Intersect)?,
        "symdiff" => binary(AlgebraExpr::SymDiff)?,
        "divide" => binary(AlgebraExpr::Divide)?,
        "natjoin" => binary(AlgebraExpr::NaturalJoin)?,
        "join" => {
            arity(&args, 3, v)?;
            expr(args[1])?.join(pred(args[0])?, expr(args[2])?)
        }
        "rename" => {
            arity(&args, 3, v)?;
            let alias = match symbol(args[0], v)? {
                "_" => None,
                a => Some(a.to_string()),
            };
            let names = items(args[1]).ok_or_else(|| bad(v, "expected a name list"))?;
            let names = names
                .into_iter()
                .map(|n| symbol(n, v).map(str::to_string))
                .collect::<Result<_>>()?;
            AlgebraExpr::Rename {
                alias,
                names,
                input: Box::new(expr(args[2])?),
            }
        }
        "let" => {
            arity(&args, 3, v)?;
            AlgebraExpr::Let {
                name: symbol(args[0], v)?.to_string(),
                value: Box::new(expr(args[1])?),
                body: Box::new(expr(args[2])?),
            }
        }
        other => return Err(bad(v, format!("unknown operator `{other}`"))),
    })
}

fn expr_value(e: &AlgebraExpr) -> Value {
    let list = |head: &str, rest: Vec<Value>| {
        Value::list(std::iter::once(Value::symbol(head)).chain(rest).collect::<Vec<_>>())
    };
    let bin = |head: &str, a: &AlgebraExpr, b: &AlgebraExpr| list(head, vec![expr_value(a), expr_value(b)]);
    match e {
        AlgebraExpr::Base(n) => list("base", vec![Value::symbol(n.as_str())]),
        AlgebraExpr::Guessed(n) => list("guessed", vec![Value::symbol(n.as_str())]),
        AlgebraExpr::LetRef(n) => list("ref", vec![Value::symbol(n.as_str())]),
        AlgebraExpr::DomPower(k) => list("dom", vec![Value::from(*k as u64)]),
        AlgebraExpr::Select(p, a) => list("select", vec![pred_value(p), expr_value(a)]),
        AlgebraExpr::Project(cols, a) => list(
            "project",
            vec![Value::list(cols.iter().map(attr_value).collect::<Vec<_>>()), expr_value(a)],
        ),
        AlgebraExpr::Product(a, b) => bin("product", a, b),
        AlgebraExpr::Union(a, b) => bin("union", a, b),
        AlgebraExpr::Difference(a, b) => bin("minus", a, b),
        AlgebraExpr::Intersect(a, b) => bin("intersect", a, b),
        AlgebraExpr::SymDiff(a, b) => bin("symdiff", a, b),
        AlgebraExpr::Divide(a, b) => bin("divide", a, b),
        AlgebraExpr::NaturalJoin(a, b) => bin("natjoin", a, b),
        AlgebraExpr::Join(p, a, b) => list("join", vec![pred_value(p), expr_value(a), expr_value(b)]),
        AlgebraExpr::Rename { alias, names, input } => list(
            "rename",
            vec![
                Value::symbol(alias.as_deref().unwrap_or("_")),
                Value::list(names.iter().map(|n| Value::symbol(n.as_str())).collect::<Vec<_>>()),
                expr_value(input),
            ],
        ),
        AlgebraExpr::Let { name, value, body } => list(
            "let",
            vec![Value::symbol(name.as_str()), expr_value(value), expr_value(body)],
        ),
    }
}

pub fn parse_algebra(src: &str) -> Result<AlgebraExpr> {
    expr(&read(src)?)
}

pub fn print_algebra(e: &AlgebraExpr) -> String {
    pretty(&expr_value(e))
}

pub fn parse_query(src: &str) -> Result<NpAlgQuery> {
    let v = read(src)?;
    let (head, clauses) = call(&v).ok_or_else(|| bad(&v, "expected `(query ...)`"))?;
    if head != "query" {
        return Err(bad(&v, "expected `(query ...)`"));
    }
    let mut fail = None;
    let mut q = NpAlgQuery::new(AlgebraExpr::dom());
    for c in clauses {
        let (kind, args) = call(c).ok_or_else(|| bad(c, "expected a clause"))?;
        match kind {
            "guess" => {
                arity(&args, 2, c)?;
                q.guesses.push(GuessDecl::new(symbol(args[0], c)?, count(args[1], c)?));
            }
            "base" => {
                arity(&args, 2, c)?;
                q.base_arities.insert(symbol(args[0], c)?.to_string(), count(args[1], c)?);
            }
            "let" => {
                arity(&args, 2, c)?;
                q.lets.push((symbol(args[0], c)?.to_string(), expr(args[1])?));
            }
            "fail" => {
                arity(&args, 1, c)?;
                if fail.replace(expr(args[0])?).is_some() {
                    return Err(bad(c, "FAIL is defined twice"));
                }
            }
            other => return Err(bad(c, format!("unknown clause `{other}`"))),
        }
    }
    q.fail = fail.ok_or_else(|| bad(&v, "missing `(fail ...)`"))?;
    Ok(q)
}

pub fn print_query(q: &NpAlgQuery) -> String {
    let mut clauses = vec![Value::symbol("query")];
    for g in &q.guesses {
        clauses.push(Value::list(vec![
            Value::symbol("guess"),
            Value::symbol(g.name.as_str()),
            Value::from(g.arity as u64),
        ]));
    }
    for (name, k) in &q.base_arities {
        clauses.push(Value::list(vec![
            Value::symbol("base"),
            Value::symbol(name.as_str()),
            Value::from(*k as u64),
        ]));
    }
    for (name, e) in &q.lets {
        clauses.push(Value::list(vec![Value::symbol("let"), Value::symbol(name.as_str()), expr_value(e)]));
    }
    clauses.push(Value::list(vec![Value::symbol("fail"), expr_value(&q.fail)]));
    pretty(&Value::list(clauses))
}

fn term(v: &Value, ctx: &Value) -> Result<Term> {
    match constant(v) {
        Some(c) => Ok(Term::Const(c)),
        None => Ok(Term::Var(symbol(v, ctx)?.to_string())),
    }
}

fn term_value(t: &Term) -> Value {
    match t {
        Term::Var(v) => Value::symbol(v.as_str()),
        Term::Const(c) => constant_value(c),
    }
}

fn formula(v: &Value) -> Result<FoFormula> {
    let (head, args) = call(v).ok_or_else(|| bad(v, "expected a formula"))?;
    let fold = |args: Vec<&Value>, f: fn(FoFormula, FoFormula) -> FoFormula| -> Result<FoFormula> {
        let mut it = args.into_iter().map(formula);
        let first = it.next().ok_or_else(|| bad(v, "expected at least one operand"))??;
        it.try_fold(first, |acc, x| Ok(f(acc, x?)))
    };
    Ok(match head {
        "and" => fold(args, FoFormula::and)?,
        "or" => fold(args, FoFormula::or)?,
        "not" => {
            arity(&args, 1, v)?;
            formula(args[0])?.not()
        }
        "=" => {
            arity(&args, 2, v)?;
            FoFormula::Eq(term(args[0], v)?, term(args[1], v)?)
        }
        pred => FoFormula::Atom {
            pred: pred.to_string(),
            args: args.into_iter().map(|a| term(a, v)).collect::<Result<_>>()?,
        },
    })
}

fn formula_value(f: &FoFormula) -> Value {
    let list = |head: &str, rest: Vec<Value>| {
        Value::list(std::iter::once(Value::symbol(head)).chain(rest).collect::<Vec<_>>())
    };
    match f {
        FoFormula::Atom { pred, args } => list(pred, args.iter().map(term_value).collect()),
        FoFormula::Eq(a, b) => list("=", vec![term_value(a), term_value(b)]),
        FoFormula::And(a, b) => list("and", vec![formula_value(a), formula_value(b)]),
        FoFormula::Or(a, b) => list("or", vec![formula_value(a), formula_value(b)]),
        FoFormula::Not(a) => list("not", vec![formula_value(a)]),
    }
}

pub fn parse_formula(src: &str) -> Result<FoFormula> {
    formula(&read(src)?)
}

pub fn parse_eso(src: &str) -> Result<EsoSentence> {
    let v = read(src)?;
    let (head, clauses) = call(&v).ok_or_else(|| bad(&v, "expected `(eso ...)`"))?;
    if head != "eso" {
        return Err(bad(&v, "expected `(eso ...)`"));
    }
    let mut s = EsoSentence {
        second_order: Vec::new(),
        universal: Vec::new(),
        existential: Vec::new(),
        matrix: FoFormula::Eq(Term::var("_"), Term::var("_")),
    };
    let mut matrix = None;
    for c in clauses {
        match call(c) {
            Some(("guess", args)) => {
                arity(&args, 2, c)?;
                s.second_order.push((symbol(args[0], c)?.to_string(), count(args[1], c)?));
            }
            Some(("forall", args)) => {
                for a in args {
                    s.universal.push(symbol(a, c)?.to_string());
                }
            }
            Some(("exists", args)) => {
                for a in args {
                    s.existential.push(symbol(a, c)?.to_string());
                }
            }
            _ => {
                if matrix.replace(formula(c)?).is_some() {
                    return Err(bad(c, "more than one matrix"));
                }
            }
        }
    }
    s.matrix = matrix.ok_or_else(|| bad(&v, "missing matrix formula"))?;
    Ok(s)
}

pub fn print_eso(s: &EsoSentence) -> String {
    let mut clauses = vec![Value::symbol("eso")];
    for (name, k) in &s.second_order {
        clauses.push(Value::list(vec![
            Value::symbol("guess"),
            Value::symbol(name.as_str()),
            Value::from(*k as u64),
        ]));
    }
    let vars = |head: &str, vs: &[String]| {
        Value::list(
            std::iter::once(Value::symbol(head))
                .chain(vs.iter().map(|v| Value::symbol(v.as_str())))
                .collect::<Vec<_>>(),
        )
    };
    if !s.universal.is_empty() {
        clauses.push(vars("forall", &s.universal));
    }
    if !s.existential.is_empty() {
        clauses.push(vars("exists", &s.existential));
    }
    clauses.push(formula_value(&s.matrix));
    pretty(&Value::list(clauses))
}

const WIDTH: usize = 78;

/// Prints `v` on one line when it fits, otherwise one child per line.
fn pretty(v: &Value) -> String {
    let mut out = String::new();
    pretty_into(v, 0, &mut out);
    out.push('\n');
    out
}

fn pretty_into(v: &Value, indent: usize, out: &mut String) {
    let flat = v.to_string();
    let xs = match items(v) {
        Some(xs) if xs.len() > 1 && indent + flat.len() > WIDTH => xs,
        _ => {
            out.push_str(&flat);
            return;
        }
    };
    out.push('(');
    out.push_str(&xs[0].to_string());
    let mut rest = &xs[1..];
    while let [x, tail @ ..] = rest {
        if items(x).is_some() || tail.is_empty() {
            break;
        }
        out.push(' ');
        out.push_str(&x.to_string());
        rest = tail;
    }
    for x in rest {
        out.push('\n');
        out.push_str(&" ".repeat(indent + 2));
        pretty_into(x, indent + 2, out);
    }
    out.push(')');
}
