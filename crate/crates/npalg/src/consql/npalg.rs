use std::collections::BTreeMap;

use super::ast::*;
use super::eval::Table;
use super::{ConsqlError, Result};
use crate::guess::{GuessDecl, NpAlgQuery};
use crate::relation::{AlgebraExpr, Constant, Database, Operand, Pred, Relation, Schema, Tuple};
use crate::sugar::{self, FunctionKind};

/// A decision specification rewritten as an NP-Alg query. Integer ranges
/// become extra unary relations of `db`; `universes` lists the tuples each
/// guessed relation may contain without failing (usable as
/// `ExactOptions::universes`).
#[derive(Clone, Debug)]
pub struct NpAlgLowering {
    pub query: NpAlgQuery,
    pub db: Database,
    pub universes: BTreeMap<String, Vec<Tuple>>,
}

fn unsupported(what: impl Into<String>) -> ConsqlError {
    ConsqlError::Unsupported(what.into())
}

struct Leaf {
    expr: AlgebraExpr,
    qualifier: String,
    columns: Vec<String>,
    rows: Vec<Tuple>,
}

fn base_leaf(db: &Database, name: &str, qualifier: &str) -> Result<Leaf> {
    let (stored, rel) = db
        .relations()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| ConsqlError::UnknownTable(name.to_string()))?;
    let table = Table::from_relation(rel);
    Ok(Leaf {
        expr: AlgebraExpr::base(stored),
        qualifier: qualifier.to_string(),
        columns: table.columns,
        rows: table.rows,
    })
}

fn product_rows(leaves: &[Leaf]) -> Vec<Tuple> {
    leaves.iter().fold(vec![Vec::new()], |acc, l| {
        acc.iter()
            .flat_map(|a| {
                l.rows.iter().map(move |r| {
                    let mut t = a.clone();
                    t.extend(r.iter().cloned());
                    t
                })
            })
            .collect()
    })
}

fn int_values(lo: i64, hi: i64) -> Vec<Constant> {
    (lo..=hi).map(Constant::Int).collect()
}

fn fresh_name(db: &Database, stem: &str) -> String {
    let mut name = stem.to_string();
    let mut i = 1;
    while db.relations().any(|(n, _)| n.eq_ignore_ascii_case(&name)) {
        i += 1;
        name = format!("{stem}{i}");
    }
    name
}

fn with_int_range(db: Database, stem: &str, lo: i64, hi: i64) -> Result<(Database, AlgebraExpr)> {
    let name = fresh_name(&db, stem);
    let rel = Relation::unary(Schema::named(Some(&name), &["v"]), lo..=hi)
        .expect("unary relation of integers");
    Ok((db.with_relation(&name, rel), AlgebraExpr::base(&name)))
}

/// Rewrites an objective-free specification whose guessed tables are
/// single search-space declarations selected verbatim, and whose checks
/// are `EXISTS` / `NOT EXISTS` over comma joins filtered by comparisons.
pub fn lower_to_npalg(spec: &Specification, db: &Database) -> Result<NpAlgLowering> {
    if spec.objective.is_some() {
        return Err(unsupported("objective functions"));
    }
    let mut db = db.clone();
    let mut decls = Vec::new();
    let mut fails = Vec::new();
    let mut guessed: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
    let mut universes = BTreeMap::new();
    for g in &spec.guesses {
        let body = &g.body;
        let [FromItem::Shaped { shape, .. }] = body.from.as_slice() else {
            return Err(unsupported(format!(
                "guessed table `{}` must consist of one search-space declaration",
                g.name
            )));
        };
        if body.filter.is_some() {
            return Err(unsupported(format!("WHERE in guessed table `{}`", g.name)));
        }
        let mut leaves = Vec::new();
        for it in shape.of() {
            let FromItem::Table { name, alias } = it else {
                return Err(unsupported("derived table in a search-space declaration"));
            };
            leaves.push(base_leaf(&db, &name.name, alias.as_deref().unwrap_or(&name.name))?);
        }
        let d: usize = leaves.iter().map(|l| l.columns.len()).sum();
        let rows = product_rows(&leaves);
        if d == 0 {
            return Err(unsupported("search-space declaration over zero columns"));
        }
        let mut columns: Vec<String> = leaves.iter().flat_map(|l| l.columns.clone()).collect();
        let fields = shape.fields();
        columns.extend(fields.iter().cloned());
        let verbatim = match body.items.as_slice() {
            [SelectItem::Wildcard] => true,
            items => {
                items.len() == columns.len()
                    && items.iter().zip(&columns).all(|(it, c)| {
                        matches!(it, SelectItem::Expr { expr: Expr::Column(r), alias: None }
                            if r.name.eq_ignore_ascii_case(c))
                    })
            }
        };
        if !verbatim {
            return Err(unsupported(format!(
                "guessed table `{}` must select the declaration's columns in order",
                g.name
            )));
        }
        let dom = AlgebraExpr::product_all(leaves.into_iter().map(|l| l.expr).collect())
            .expect("at least one table");
        let fun = AlgebraExpr::guessed(&g.name);
        let stem = format!("{}_RANGE", g.name.to_uppercase());
        let (range, values, kinds): (AlgebraExpr, Vec<Constant>, &[FunctionKind]) = match shape {
            Shape::Subset { .. } => {
                fails.push(fun.clone().minus(dom.clone()).project_pos([1]));
                (AlgebraExpr::dom(), Vec::new(), &[])
            }
            Shape::Function {
                totality, range, ..
            } => {
                if fields.len() != 1 {
                    return Err(unsupported("FUNCTION_TO with several fields"));
                }
                let (r, values) = match range {
                    Range::Table(t) => {
                        let (stored, rel) = db
                            .relations()
                            .find(|(n, _)| n.eq_ignore_ascii_case(t))
                            .ok_or_else(|| ConsqlError::UnknownTable(t.clone()))?;
                        let key = db.key_column(stored);
                        let mut values: Vec<Constant> = rel.iter().map(|row| row[key].clone()).collect();
                        values.sort();
                        values.dedup();
                        (AlgebraExpr::base(stored).project_pos([key + 1]), values)
                    }
                    Range::Interval(lo, hi) => {
                        let bound = |e: &Expr| match e {
                            Expr::Int(v) => Ok(*v),
                            Expr::Neg(inner) => match **inner {
                                Expr::Int(v) => Ok(-v),
                                _ => Err(unsupported("non-literal interval bound")),
                            },
                            _ => Err(unsupported("non-literal interval bound")),
                        };
                        let (lo, hi) = (bound(lo)?, bound(hi)?);
                        let (next, r) = with_int_range(db, &stem, lo, hi)?;
                        db = next;
                        (r, int_values(lo, hi))
                    }
                };
                let kinds: &[FunctionKind] = match totality {
                    Totality::Total => &[FunctionKind::Function, FunctionKind::Total],
                    Totality::Partial => &[FunctionKind::Function],
                };
                (r, values, kinds)
            }
            Shape::Partition { blocks, .. } => {
                let (next, r) = with_int_range(db, &stem, 1, *blocks as i64)?;
                db = next;
                (r, int_values(1, *blocks as i64), &[FunctionKind::Function, FunctionKind::Total])
            }
            Shape::Permutation { .. } => {
                let n = rows.len() as i64;
                let (next, r) = with_int_range(db, &stem, 1, n)?;
                db = next;
                (
                    r,
                    int_values(1, n),
                    &[
                        FunctionKind::Function,
                        FunctionKind::Total,
                        FunctionKind::Injective,
                        FunctionKind::Surjective,
                    ],
                )
            }
        };
        for &kind in kinds {
            fails.push(
                sugar::fail_function(kind, fun.clone(), dom.clone(), range.clone(), d, 1)
                    .map_err(|e| unsupported(e.to_string()))?,
            );
        }
        let universe: Vec<Tuple> = if values.is_empty() && kinds.is_empty() {
            rows
        } else {
            rows.iter()
                .flat_map(|row| {
                    values.iter().map(move |v| {
                        let mut t = row.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect()
        };
        universes.insert(g.name.clone(), universe);
        let visible = g.aliases.clone().unwrap_or(columns);
        decls.push(GuessDecl::new(&g.name, d + fields.len()));
        guessed.insert(g.name.to_uppercase(), (g.name.clone(), visible));
    }
    for c in &spec.checks {
        match c {
            Expr::Not(inner) => match &**inner {
                Expr::Exists(q) => fails.push(join_expr(q, &db, &guessed)?.project_pos([1])),
                _ => return Err(unsupported(format!("check `{c}`"))),
            },
            Expr::Exists(q) => fails.push(sugar::empty(join_expr(q, &db, &guessed)?)),
            _ => return Err(unsupported(format!("check `{c}`"))),
        }
    }
    let fail = AlgebraExpr::union_all(fails).expect("at least one check");
    Ok(NpAlgLowering {
        query: NpAlgQuery::new(fail).with_guesses(decls),
        db,
        universes,
    })
}

fn join_expr(
    q: &Query,
    db: &Database,
    guessed: &BTreeMap<String, (String, Vec<String>)>,
) -> Result<AlgebraExpr> {
    let Query::Select(s) = q else {
        return Err(unsupported("UNION inside a check"));
    };
    let mut leaves = Vec::new();
    for it in &s.from {
        let FromItem::Table { name, alias } = it else {
            return Err(unsupported("derived table inside a check"));
        };
        let qualifier = alias.as_deref().unwrap_or(&name.name);
        leaves.push(match guessed.get(&name.name.to_uppercase()) {
            Some((stored, cols)) => Leaf {
                expr: AlgebraExpr::guessed(stored),
                qualifier: qualifier.to_string(),
                columns: cols.clone(),
                rows: Vec::new(),
            },
            None => base_leaf(db, &name.name, qualifier)?,
        });
    }
    let cols: Vec<(&str, &str)> = leaves
        .iter()
        .flat_map(|l| l.columns.iter().map(move |c| (l.qualifier.as_str(), c.as_str())))
        .collect();
    let mut expr = AlgebraExpr::product_all(leaves.iter().map(|l| l.expr.clone()).collect())
        .expect("FROM is never empty");
    if let Some(w) = &s.filter {
        expr = expr.select(pred(w, &cols)?);
    }
    Ok(expr)
}

fn pred(e: &Expr, cols: &[(&str, &str)]) -> Result<Pred> {
    Ok(match e {
        Expr::Cmp(op, a, b) => Pred::Cmp(operand(a, cols)?, *op, operand(b, cols)?),
        Expr::And(a, b) => Pred::and(vec![pred(a, cols)?, pred(b, cols)?]),
        Expr::Or(a, b) => Pred::or(vec![pred(a, cols)?, pred(b, cols)?]),
        Expr::Not(a) => Pred::Not(Box::new(pred(a, cols)?)),
        other => return Err(unsupported(format!("condition `{other}` inside a check"))),
    })
}

fn operand(e: &Expr, cols: &[(&str, &str)]) -> Result<Operand> {
    Ok(match e {
        Expr::Int(v) => Operand::Const(Constant::Int(*v)),
        Expr::Str(s) => Operand::Const(Constant::sym(s)),
        Expr::Column(r) => {
            let hits: Vec<usize> = cols
                .iter()
                .enumerate()
                .filter(|(_, (q, n))| {
                    n.eq_ignore_ascii_case(&r.name)
                        && r.qualifier.as_ref().is_none_or(|rq| rq.eq_ignore_ascii_case(q))
                })
                .map(|(i, _)| i + 1)
                .collect();
            match hits.as_slice() {
                [i] => Operand::pos(*i),
                [] => return Err(ConsqlError::UnknownColumn(r.to_string())),
                _ => return Err(ConsqlError::AmbiguousColumn(r.to_string())),
            }
        }
        other => return Err(unsupported(format!("operand `{other}` inside a check"))),
    })
}
