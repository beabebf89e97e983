//! Compilation of queries into resolved plans, and their execution with
//! bag semantics.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use super::ast::*;
use super::{ConsqlError, Result};
use crate::relation::{CmpOp, Constant, Relation, Schema, Tuple};

/// A bag of rows with named columns.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Tuple>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Tuple>) -> Self {
        Table { columns, rows }
    }

    /// Rows in sorted order; column names from the schema, or `c1, c2, ...`
    /// for anonymous columns.
    pub fn from_relation(rel: &Relation) -> Self {
        let columns = rel
            .schema()
            .attrs()
            .iter()
            .enumerate()
            .map(|(i, a)| a.name.as_deref().map(str::to_string).unwrap_or_else(|| format!("c{}", i + 1)))
            .collect();
        Table {
            columns,
            rows: rel.sorted_owned(),
        }
    }

    /// Deduplicated copy as a relation qualified by `name`.
    pub fn to_relation(&self, name: &str) -> Relation {
        let names: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        Relation::from_tuples(Schema::named(Some(name), &names), self.rows.iter().cloned())
            .expect("rows match the column count")
    }
}

/// A column visible in a FROM scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Col {
    pub qualifier: Option<String>,
    pub name: String,
}

impl Col {
    pub fn new(qualifier: Option<&str>, name: &str) -> Self {
        Col {
            qualifier: qualifier.map(str::to_string),
            name: name.to_string(),
        }
    }

    fn matches(&self, r: &ColumnRef) -> bool {
        self.name.eq_ignore_ascii_case(&r.name)
            && match &r.qualifier {
                None => true,
                Some(q) => self
                    .qualifier
                    .as_deref()
                    .is_some_and(|mine| mine.eq_ignore_ascii_case(q)),
            }
    }
}

/// Named tables known at compile time; a plan refers to them by slot.
#[derive(Clone, Debug, Default)]
pub struct Env {
    slots: Vec<(String, Vec<String>)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    /// Registers a table under `key` (matched case-insensitively); returns
    /// its slot.
    pub fn add(&mut self, key: &str, columns: Vec<String>) -> Result<usize> {
        let key = key.to_uppercase();
        if self.lookup(&key).is_some() {
            return Err(ConsqlError::DuplicateTable(key));
        }
        self.slots.push((key, columns));
        Ok(self.slots.len() - 1)
    }

    pub fn lookup(&self, key: &str) -> Option<usize> {
        let key = key.to_uppercase();
        self.slots.iter().position(|(k, _)| *k == key)
    }

    pub fn columns(&self, slot: usize) -> &[String] {
        &self.slots[slot].1
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CExpr {
    Col { up: usize, item: usize, col: usize },
    Const(Constant),
    Arith(ArithOp, Box<CExpr>, Box<CExpr>),
    Neg(Box<CExpr>),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Not(Box<CExpr>),
    Exists(Box<Plan>),
    In {
        expr: Box<CExpr>,
        plan: Box<Plan>,
        negated: bool,
    },
    Scalar(Box<Plan>),
}

#[derive(Clone, Debug)]
pub(crate) enum Source {
    Slot(usize),
    Derived(Box<Plan>),
    Component(usize),
}

#[derive(Clone, Debug)]
enum Output {
    Rows(Vec<CExpr>),
    Aggregate(Vec<Option<CExpr>>),
}

#[derive(Clone, Debug)]
pub(crate) struct SelectPlan {
    sources: Vec<Source>,
    early: Vec<CExpr>,
    filters: Vec<Vec<CExpr>>,
    output: Output,
    columns: Vec<String>,
}

#[derive(Clone, Debug)]
pub(crate) enum Plan {
    Select(SelectPlan),
    Union {
        left: Box<Plan>,
        right: Box<Plan>,
        all: bool,
    },
}

impl Plan {
    pub(crate) fn columns(&self) -> &[String] {
        match self {
            Plan::Select(s) => &s.columns,
            Plan::Union { left, .. } => left.columns(),
        }
    }
}

struct Scope<'s> {
    items: Vec<Vec<Col>>,
    parent: Option<&'s Scope<'s>>,
}

fn is_condition(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Cmp(..) | Expr::And(..) | Expr::Or(..) | Expr::Not(_) | Expr::Exists(_) | Expr::In { .. }
    )
}

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Largest FROM index of the scope `level` steps out that `e` reads.
fn max_local(e: &CExpr, level: usize) -> Option<usize> {
    use CExpr::*;
    match e {
        Col { up, item, .. } => (*up == level).then_some(*item),
        Const(_) => None,
        Neg(a) | Not(a) => max_local(a, level),
        Arith(_, a, b) | Cmp(_, a, b) | And(a, b) | Or(a, b) => {
            max_local(a, level).max(max_local(b, level))
        }
        Exists(p) | Scalar(p) => plan_max_local(p, level + 1),
        In { expr, plan, .. } => max_local(expr, level).max(plan_max_local(plan, level + 1)),
    }
}

fn plan_max_local(p: &Plan, level: usize) -> Option<usize> {
    match p {
        Plan::Union { left, right, .. } => {
            plan_max_local(left, level).max(plan_max_local(right, level))
        }
        Plan::Select(s) => {
            let mut m = None;
            for src in &s.sources {
                // a derived table shares the parent scope of its select
                if let Source::Derived(d) = src {
                    m = m.max(plan_max_local(d, level));
                }
            }
            let exprs = s.early.iter().chain(s.filters.iter().flatten());
            for e in exprs {
                m = m.max(max_local(e, level));
            }
            match &s.output {
                Output::Rows(items) => {
                    for e in items {
                        m = m.max(max_local(e, level));
                    }
                }
                Output::Aggregate(items) => {
                    for e in items.iter().flatten() {
                        m = m.max(max_local(e, level));
                    }
                }
            }
            m
        }
    }
}

/// Turns queries into plans against an [`Env`].
pub(crate) struct Compiler<'e> {
    pub env: &'e Env,
}

impl Compiler<'_> {
    pub(crate) fn query(&self, q: &Query) -> Result<Plan> {
        self.query_in(q, None)
    }

    /// A condition with no FROM scope of its own (a CHECK body).
    pub(crate) fn condition(&self, e: &Expr) -> Result<CExpr> {
        let scope = Scope {
            items: vec![],
            parent: None,
        };
        self.boolean(e, &scope)
    }

    /// A value with no FROM scope (an interval bound).
    pub(crate) fn scalar(&self, e: &Expr) -> Result<CExpr> {
        let scope = Scope {
            items: vec![],
            parent: None,
        };
        self.value(e, &scope)
    }

    /// Compiles a guessed table body: the k-th shaped FROM item reads
    /// component `shaped[k].0`, whose columns are `shaped[k].1`.
    pub(crate) fn guess_body(&self, s: &Select, shaped: &[(usize, Vec<Col>)]) -> Result<Plan> {
        Ok(Plan::Select(self.select(s, None, shaped)?))
    }

    fn query_in(&self, q: &Query, outer: Option<&Scope>) -> Result<Plan> {
        match q {
            Query::Select(s) => Ok(Plan::Select(self.select(s, outer, &[])?)),
            Query::Union { left, right, all } => {
                let l = self.query_in(left, outer)?;
                let r = self.query_in(right, outer)?;
                if l.columns().len() != r.columns().len() {
                    return Err(ConsqlError::UnionWidth {
                        left: l.columns().len(),
                        right: r.columns().len(),
                    });
                }
                Ok(Plan::Union {
                    left: Box::new(l),
                    right: Box::new(r),
                    all: *all,
                })
            }
        }
    }

    fn select(
        &self,
        s: &Select,
        outer: Option<&Scope>,
        shaped: &[(usize, Vec<Col>)],
    ) -> Result<SelectPlan> {
        let mut sources = Vec::new();
        let mut items = Vec::new();
        let mut next_shape = shaped.iter();
        for it in &s.from {
            match it {
                FromItem::Table { name, alias } => {
                    let slot = self
                        .env
                        .lookup(&name.key())
                        .ok_or_else(|| ConsqlError::UnknownTable(name.to_string()))?;
                    let q = alias.clone().unwrap_or_else(|| name.name.clone());
                    items.push(
                        self.env
                            .columns(slot)
                            .iter()
                            .map(|c| Col::new(Some(&q), c))
                            .collect(),
                    );
                    sources.push(Source::Slot(slot));
                }
                FromItem::Derived { query, alias } => {
                    let plan = self.query_in(query, outer)?;
                    items.push(
                        plan.columns()
                            .iter()
                            .map(|c| Col::new(Some(alias), c))
                            .collect(),
                    );
                    sources.push(Source::Derived(Box::new(plan)));
                }
                FromItem::Shaped { .. } => {
                    let (comp, cols) = next_shape.next().ok_or_else(|| {
                        ConsqlError::Unsupported(
                            "search-space declaration outside a GUESS table".into(),
                        )
                    })?;
                    items.push(cols.clone());
                    sources.push(Source::Component(*comp));
                }
            }
        }
        let scope = Scope {
            items,
            parent: outer,
        };
        let mut early = Vec::new();
        let mut filters = vec![Vec::new(); sources.len()];
        if let Some(w) = &s.filter {
            let mut parts = Vec::new();
            conjuncts(w, &mut parts);
            for p in &parts {
                let c = self.boolean(p, &scope)?;
                match max_local(&c, 0) {
                    None => early.push(c),
                    Some(i) => filters[i].push(c),
                }
            }
        }
        let aggregate = s
            .items
            .iter()
            .any(|it| matches!(it, SelectItem::Expr { expr, .. } if expr.is_aggregate()));
        let mut columns = Vec::new();
        let output = if aggregate {
            let mut aggs = Vec::new();
            for it in &s.items {
                match it {
                    SelectItem::Expr { expr: Expr::Count, alias } => {
                        aggs.push(None);
                        columns.push(alias.clone().unwrap_or_else(|| "count".into()));
                    }
                    SelectItem::Expr {
                        expr: Expr::Sum(e),
                        alias,
                    } => {
                        aggs.push(Some(self.value(e, &scope)?));
                        columns.push(alias.clone().unwrap_or_else(|| "sum".into()));
                    }
                    _ => {
                        return Err(ConsqlError::Unsupported(
                            "aggregates mixed with plain select items".into(),
                        ))
                    }
                }
            }
            Output::Aggregate(aggs)
        } else {
            let mut exprs = Vec::new();
            for it in &s.items {
                match it {
                    SelectItem::Wildcard => {
                        for (i, cols) in scope.items.iter().enumerate() {
                            for (j, c) in cols.iter().enumerate() {
                                exprs.push(CExpr::Col {
                                    up: 0,
                                    item: i,
                                    col: j,
                                });
                                columns.push(c.name.clone());
                            }
                        }
                    }
                    SelectItem::Expr { expr, alias } => {
                        exprs.push(self.value(expr, &scope)?);
                        columns.push(match (alias, expr) {
                            (Some(a), _) => a.clone(),
                            (None, Expr::Column(c)) => c.name.clone(),
                            (None, _) => format!("col{}", columns.len() + 1),
                        });
                    }
                }
            }
            Output::Rows(exprs)
        };
        Ok(SelectPlan {
            sources,
            early,
            filters,
            output,
            columns,
        })
    }

    fn resolve(&self, r: &ColumnRef, scope: &Scope) -> Result<CExpr> {
        let mut cur = Some(scope);
        let mut up = 0;
        while let Some(s) = cur {
            let mut found = None;
            for (i, cols) in s.items.iter().enumerate() {
                for (j, c) in cols.iter().enumerate() {
                    if c.matches(r) {
                        if found.is_some() {
                            return Err(ConsqlError::AmbiguousColumn(r.to_string()));
                        }
                        found = Some((i, j));
                    }
                }
            }
            if let Some((item, col)) = found {
                return Ok(CExpr::Col { up, item, col });
            }
            cur = s.parent;
            up += 1;
        }
        Err(ConsqlError::UnknownColumn(r.to_string()))
    }

    fn value(&self, e: &Expr, scope: &Scope) -> Result<CExpr> {
        let b = |x: &Expr| self.value(x, scope).map(Box::new);
        Ok(match e {
            Expr::Column(r) => self.resolve(r, scope)?,
            Expr::Int(v) => CExpr::Const(Constant::Int(*v)),
            Expr::Str(s) => CExpr::Const(Constant::text(s)),
            Expr::Arith(op, x, y) => CExpr::Arith(*op, b(x)?, b(y)?),
            Expr::Neg(x) => CExpr::Neg(b(x)?),
            Expr::Subquery(q) => {
                let plan = self.query_in(q, Some(scope))?;
                if plan.columns().len() != 1 {
                    return Err(ConsqlError::NotScalar(format!(
                        "subquery yields {} columns",
                        plan.columns().len()
                    )));
                }
                CExpr::Scalar(Box::new(plan))
            }
            Expr::Count | Expr::Sum(_) => {
                return Err(ConsqlError::Unsupported(format!(
                    "aggregate `{e}` outside a select list"
                )))
            }
            cond => {
                return Err(ConsqlError::Type(format!(
                    "condition `{cond}` used as a value"
                )))
            }
        })
    }

    fn boolean(&self, e: &Expr, scope: &Scope) -> Result<CExpr> {
        let b = |x: &Expr| self.boolean(x, scope).map(Box::new);
        Ok(match e {
            Expr::Cmp(op, x, y) => CExpr::Cmp(
                *op,
                Box::new(self.value(x, scope)?),
                Box::new(self.value(y, scope)?),
            ),
            Expr::And(x, y) => CExpr::And(b(x)?, b(y)?),
            Expr::Or(x, y) => CExpr::Or(b(x)?, b(y)?),
            Expr::Not(x) => CExpr::Not(b(x)?),
            Expr::Exists(q) => CExpr::Exists(Box::new(self.query_in(q, Some(scope))?)),
            Expr::In {
                expr,
                query,
                negated,
            } => {
                let plan = self.query_in(query, Some(scope))?;
                if plan.columns().len() != 1 {
                    return Err(ConsqlError::NotScalar(format!(
                        "IN subquery yields {} columns",
                        plan.columns().len()
                    )));
                }
                CExpr::In {
                    expr: Box::new(self.value(expr, scope)?),
                    plan: Box::new(plan),
                    negated: *negated,
                }
            }
            v => {
                debug_assert!(!is_condition(v));
                return Err(ConsqlError::Type(format!("value `{v}` used as a condition")));
            }
        })
    }
}

/// Compares two constants: integers numerically, texts and symbols by
/// their characters.
pub fn compare(a: &Constant, b: &Constant) -> Result<Ordering> {
    match (a, b) {
        (Constant::Int(x), Constant::Int(y)) => Ok(x.cmp(y)),
        (Constant::Int(_), _) | (_, Constant::Int(_)) => Err(ConsqlError::Type(format!(
            "cannot compare `{a}` with `{b}`"
        ))),
        _ => Ok(a.as_str().cmp(&b.as_str())),
    }
}

fn cmp_holds(op: CmpOp, o: Ordering) -> bool {
    match op {
        CmpOp::Eq => o == Ordering::Equal,
        CmpOp::Ne => o != Ordering::Equal,
        CmpOp::Lt => o == Ordering::Less,
        CmpOp::Le => o != Ordering::Greater,
        CmpOp::Gt => o == Ordering::Greater,
        CmpOp::Ge => o != Ordering::Less,
    }
}

struct Frame<'a> {
    rows: &'a [&'a [Constant]],
    parent: Option<&'a Frame<'a>>,
}

enum Acc {
    Rows(Vec<Tuple>),
    Aggregate { count: i64, sums: Vec<i64> },
}

/// Runs plans against concrete tables.
pub(crate) struct Exec<'a> {
    pub slots: &'a [Arc<Table>],
    pub components: &'a [Arc<Table>],
}

impl Exec<'_> {
    pub(crate) fn run(&self, plan: &Plan) -> Result<Vec<Tuple>> {
        self.run_in(plan, None)
    }

    pub(crate) fn value_top(&self, e: &CExpr) -> Result<Constant> {
        let f = Frame {
            rows: &[],
            parent: None,
        };
        self.value(e, &f)
    }

    /// `(holds, violations)` for a CHECK body.
    pub(crate) fn violations(&self, e: &CExpr) -> Result<(bool, u64)> {
        let f = Frame {
            rows: &[],
            parent: None,
        };
        let n = match e {
            CExpr::Not(inner) => match &**inner {
                CExpr::Exists(plan) => self.run_in(plan, None)?.len() as u64,
                other => u64::from(self.truth(other, &f)?),
            },
            CExpr::Exists(plan) => u64::from(self.run_in(plan, None)?.is_empty()),
            other => u64::from(!self.truth(other, &f)?),
        };
        Ok((n == 0, n))
    }

    fn run_in(&self, plan: &Plan, outer: Option<&Frame>) -> Result<Vec<Tuple>> {
        match plan {
            Plan::Select(s) => self.run_select(s, outer),
            Plan::Union { left, right, all } => {
                let mut rows = self.run_in(left, outer)?;
                rows.extend(self.run_in(right, outer)?);
                if !*all {
                    let mut seen = HashSet::new();
                    rows.retain(|r| seen.insert(r.clone()));
                }
                Ok(rows)
            }
        }
    }

    fn run_select(&self, s: &SelectPlan, outer: Option<&Frame>) -> Result<Vec<Tuple>> {
        let mut acc = match &s.output {
            Output::Rows(_) => Acc::Rows(Vec::new()),
            Output::Aggregate(items) => Acc::Aggregate {
                count: 0,
                sums: vec![0; items.len()],
            },
        };
        let probe = Frame { rows: &[], parent: outer };
        let mut pass = true;
        for e in &s.early {
            if !self.truth(e, &probe)? {
                pass = false;
                break;
            }
        }
        if pass {
            let mut tables = Vec::with_capacity(s.sources.len());
            for src in &s.sources {
                tables.push(match src {
                    Source::Slot(i) => self.slots[*i].clone(),
                    Source::Component(i) => self.components[*i].clone(),
                    Source::Derived(p) => Arc::new(Table::new(
                        p.columns().to_vec(),
                        self.run_in(p, outer)?,
                    )),
                });
            }
            let mut rows = Vec::with_capacity(tables.len());
            self.bind(s, &tables, &mut rows, outer, &mut acc)?;
        }
        Ok(match acc {
            Acc::Rows(r) => r,
            Acc::Aggregate { count, sums } => {
                let Output::Aggregate(items) = &s.output else {
                    unreachable!()
                };
                vec![items
                    .iter()
                    .zip(sums)
                    .map(|(it, sum)| Constant::Int(if it.is_some() { sum } else { count }))
                    .collect()]
            }
        })
    }

    fn bind<'t>(
        &self,
        s: &SelectPlan,
        tables: &'t [Arc<Table>],
        rows: &mut Vec<&'t [Constant]>,
        outer: Option<&Frame>,
        acc: &mut Acc,
    ) -> Result<()> {
        let depth = rows.len();
        if depth == tables.len() {
            let f = Frame {
                rows: &rows[..],
                parent: outer,
            };
            return self.emit(s, &f, acc);
        }
        for row in &tables[depth].rows {
            rows.push(row);
            let keep = {
                let f = Frame {
                    rows: &rows[..],
                    parent: outer,
                };
                let mut ok = true;
                for e in &s.filters[depth] {
                    if !self.truth(e, &f)? {
                        ok = false;
                        break;
                    }
                }
                ok
            };
            if keep {
                self.bind(s, tables, rows, outer, acc)?;
            }
            rows.pop();
        }
        Ok(())
    }

    fn emit(&self, s: &SelectPlan, f: &Frame, acc: &mut Acc) -> Result<()> {
        match (&s.output, acc) {
            (Output::Rows(items), Acc::Rows(out)) => {
                let row = items
                    .iter()
                    .map(|e| self.value(e, f))
                    .collect::<Result<Tuple>>()?;
                out.push(row);
            }
            (Output::Aggregate(items), Acc::Aggregate { count, sums }) => {
                *count += 1;
                for (it, sum) in items.iter().zip(sums.iter_mut()) {
                    if let Some(e) = it {
                        let v = self.value(e, f)?;
                        let v = v.as_int().ok_or_else(|| {
                            ConsqlError::Type(format!("SUM over non-integer `{v}`"))
                        })?;
                        *sum = sum.checked_add(v).ok_or(ConsqlError::Overflow)?;
                    }
                }
            }
            _ => unreachable!("accumulator matches the output kind"),
        }
        Ok(())
    }

    fn value(&self, e: &CExpr, f: &Frame) -> Result<Constant> {
        Ok(match e {
            CExpr::Col { up, item, col } => {
                let mut fr = f;
                for _ in 0..*up {
                    fr = fr.parent.expect("scope depth checked at compile time");
                }
                fr.rows[*item][*col].clone()
            }
            CExpr::Const(c) => c.clone(),
            CExpr::Arith(op, a, b) => {
                let (x, y) = (self.int(a, f)?, self.int(b, f)?);
                let r = match op {
                    ArithOp::Add => x.checked_add(y),
                    ArithOp::Sub => x.checked_sub(y),
                    ArithOp::Mul => x.checked_mul(y),
                };
                Constant::Int(r.ok_or(ConsqlError::Overflow)?)
            }
            CExpr::Neg(a) => Constant::Int(self.int(a, f)?.checked_neg().ok_or(ConsqlError::Overflow)?),
            CExpr::Scalar(plan) => {
                let rows = self.run_in(plan, Some(f))?;
                if rows.len() != 1 {
                    return Err(ConsqlError::NotScalar(format!(
                        "subquery yields {} rows",
                        rows.len()
                    )));
                }
                rows.into_iter().next().unwrap().swap_remove(0)
            }
            _ => unreachable!("conditions are rejected in value position at compile time"),
        })
    }

    fn int(&self, e: &CExpr, f: &Frame) -> Result<i64> {
        let v = self.value(e, f)?;
        v.as_int()
            .ok_or_else(|| ConsqlError::Type(format!("arithmetic on non-integer `{v}`")))
    }

    fn truth(&self, e: &CExpr, f: &Frame) -> Result<bool> {
        Ok(match e {
            CExpr::Cmp(op, a, b) => cmp_holds(*op, compare(&self.value(a, f)?, &self.value(b, f)?)?),
            CExpr::And(a, b) => self.truth(a, f)? && self.truth(b, f)?,
            CExpr::Or(a, b) => self.truth(a, f)? || self.truth(b, f)?,
            CExpr::Not(a) => !self.truth(a, f)?,
            CExpr::Exists(plan) => !self.run_in(plan, Some(f))?.is_empty(),
            CExpr::In {
                expr,
                plan,
                negated,
            } => {
                let v = self.value(expr, f)?;
                let mut hit = false;
                for row in self.run_in(plan, Some(f))? {
                    if compare(&v, &row[0])? == Ordering::Equal {
                        hit = true;
                        break;
                    }
                }
                hit != *negated
            }
            _ => unreachable!("values are rejected in condition position at compile time"),
        })
    }
}
