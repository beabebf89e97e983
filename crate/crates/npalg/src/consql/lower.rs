use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::eval::{CExpr, Col, Compiler, Env, Exec, Plan, Table};
use super::{ConsqlError, Result};
use crate::relation::{Constant, Database, Relation, Tuple};
use crate::search::{
    is_valid, space_size, ComponentLayout, Cost, SearchError, SearchSpace, SearchState, ShapeKind,
    UNASSIGNED,
};

/// Largest integer interval accepted as a function range.
pub const MAX_INTERVAL: i64 = 1 << 20;

/// One search-space declaration of a guessed table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// The guessed table it belongs to.
    pub guess: String,
    pub layout: ComponentLayout,
    /// Rows of the declaration's FROM clause, in order.
    pub domain: Vec<Tuple>,
    /// Values a row may be mapped to (empty for subsets).
    pub range: Vec<Constant>,
    pub columns: Vec<String>,
}

impl Component {
    fn table(&self, part: &[u32]) -> Table {
        let mut rows = Vec::new();
        for (row, &v) in self.domain.iter().zip(part) {
            match self.layout.shape {
                ShapeKind::Subset if v == 1 => rows.push(row.clone()),
                ShapeKind::Subset => {}
                _ if v == UNASSIGNED => {}
                _ => {
                    let mut r = row.clone();
                    r.push(self.range[v as usize].clone());
                    rows.push(r);
                }
            }
        }
        Table::new(self.columns.clone(), rows)
    }
}

struct GuessPlan {
    name: String,
    columns: Vec<String>,
    plan: Plan,
}

/// A specification grounded on a database: the state components, and
/// compiled checks, objective and return queries.
pub struct SearchProblem {
    spec: Specification,
    components: Vec<Component>,
    layout: Vec<ComponentLayout>,
    base: Vec<Arc<Table>>,
    guesses: Vec<GuessPlan>,
    checks: Vec<CExpr>,
    objective: Option<(Direction, Plan)>,
    returns: Vec<(String, Plan)>,
}

fn find_relation<'d>(db: &'d Database, name: &str) -> Option<(&'d String, &'d Relation)> {
    db.relations().find(|(n, _)| n.eq_ignore_ascii_case(name))
}

fn int_range(lo: i64, hi: i64) -> Vec<Constant> {
    (lo..=hi).map(Constant::Int).collect()
}

fn build_component(
    db: &Database,
    env: &Env,
    base: &[Arc<Table>],
    guess: &str,
    shape: &Shape,
    alias: Option<&str>,
) -> Result<(Component, Vec<Col>)> {
    let mut cols = Vec::new();
    let mut domain: Vec<Tuple> = vec![vec![]];
    for it in shape.of() {
        let FromItem::Table { name, alias } = it else {
            return Err(ConsqlError::Unsupported(
                "derived table in a search-space declaration".into(),
            ));
        };
        let slot = env
            .lookup(&name.key())
            .filter(|&s| s < base.len())
            .ok_or_else(|| ConsqlError::UnknownTable(name.to_string()))?;
        let q = alias.clone().unwrap_or_else(|| name.name.clone());
        cols.extend(base[slot].columns.iter().map(|c| Col::new(Some(&q), c)));
        let mut next = Vec::with_capacity(domain.len() * base[slot].rows.len());
        for d in &domain {
            for r in &base[slot].rows {
                let mut t = d.clone();
                t.extend(r.iter().cloned());
                next.push(t);
            }
        }
        domain = next;
    }
    let rows = domain.len();
    let (layout, range) = match shape {
        Shape::Subset { .. } => (ComponentLayout::subset(rows), vec![]),
        Shape::Function {
            totality,
            range,
            fields,
            ..
        } => {
            if fields.len() != 1 {
                return Err(ConsqlError::Unsupported(format!(
                    "FUNCTION_TO with {} fields",
                    fields.len()
                )));
            }
            let values = match range {
                Range::Table(t) => {
                    let (stored, rel) = find_relation(db, t)
                        .ok_or_else(|| ConsqlError::UnknownTable(t.clone()))?;
                    let key = db.key_column(stored);
                    let mut vals: Vec<Constant> = rel.iter().map(|r| r[key].clone()).collect();
                    vals.sort();
                    vals.dedup();
                    vals
                }
                Range::Interval(lo, hi) => {
                    let c = Compiler { env };
                    let ex = Exec {
                        slots: &[],
                        components: &[],
                    };
                    let bound = |e: &Expr| -> Result<i64> {
                        let v = ex.value_top(&c.scalar(e)?)?;
                        v.as_int()
                            .ok_or_else(|| ConsqlError::Type(format!("interval bound `{v}`")))
                    };
                    let (lo, hi) = (bound(lo)?, bound(hi)?);
                    if hi.saturating_sub(lo) >= MAX_INTERVAL {
                        return Err(ConsqlError::Unsupported(format!(
                            "interval {lo}..{hi} is too wide"
                        )));
                    }
                    int_range(lo, hi)
                }
            };
            let total = *totality == Totality::Total;
            if total && values.is_empty() && rows > 0 {
                return Err(ConsqlError::EmptyRange(guess.to_string()));
            }
            (
                ComponentLayout::function(rows, values.len() as u32, total),
                values,
            )
        }
        Shape::Partition { blocks, .. } => (
            ComponentLayout::partition(rows, *blocks),
            int_range(1, *blocks as i64),
        ),
        Shape::Permutation { .. } => (ComponentLayout::permutation(rows), int_range(1, rows as i64)),
    };
    cols.extend(shape.fields().iter().map(|f| Col::new(None, f)));
    if let Some(a) = alias {
        for c in &mut cols {
            c.qualifier = Some(a.to_string());
        }
    }
    let component = Component {
        guess: guess.to_string(),
        layout,
        domain,
        range,
        columns: cols.iter().map(|c| c.name.clone()).collect(),
    };
    Ok((component, cols))
}

/// Grounds `spec` on `db`.
pub fn lower_spec(spec: &Specification, db: &Database) -> Result<SearchProblem> {
    let mut env = Env::new();
    let mut base = Vec::new();
    for (name, rel) in db.relations() {
        let t = Table::from_relation(rel);
        env.add(name, t.columns.clone())?;
        base.push(Arc::new(t));
    }
    let mut components: Vec<Component> = Vec::new();
    let mut guesses = Vec::new();
    for g in &spec.guesses {
        let mut shaped = Vec::new();
        for it in &g.body.from {
            if let FromItem::Shaped { shape, alias } = it {
                let (comp, cols) =
                    build_component(db, &env, &base, &g.name, shape, alias.as_deref())?;
                shaped.push((components.len(), cols));
                components.push(comp);
            }
        }
        let plan = Compiler { env: &env }.guess_body(&g.body, &shaped)?;
        let columns = match &g.aliases {
            Some(a) if a.len() != plan.columns().len() => {
                return Err(ConsqlError::AliasCount {
                    table: g.name.clone(),
                    names: a.len(),
                    width: plan.columns().len(),
                })
            }
            Some(a) => a.clone(),
            None => plan.columns().to_vec(),
        };
        env.add(&g.name, columns.clone())?;
        guesses.push(GuessPlan {
            name: g.name.clone(),
            columns,
            plan,
        });
    }
    let c = Compiler { env: &env };
    let checks = spec
        .checks
        .iter()
        .map(|e| c.condition(e))
        .collect::<Result<Vec<_>>>()?;
    let objective = match &spec.objective {
        None => None,
        Some(o) => {
            let plan = c.query(&o.query)?;
            if plan.columns().len() != 1 {
                return Err(ConsqlError::NotScalar(format!(
                    "objective yields {} columns",
                    plan.columns().len()
                )));
            }
            Some((o.direction, plan))
        }
    };
    let returns = spec
        .returns
        .iter()
        .map(|r| Ok((r.name.clone(), c.query(&r.query)?)))
        .collect::<Result<Vec<_>>>()?;
    let layout = components.iter().map(|c| c.layout).collect();
    Ok(SearchProblem {
        spec: spec.clone(),
        components,
        layout,
        base,
        guesses,
        checks,
        objective,
        returns,
    })
}

impl SearchProblem {
    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn space_size(&self) -> u128 {
        space_size(&self.layout)
    }

    pub fn direction(&self) -> Option<Direction> {
        self.objective.as_ref().map(|(d, _)| *d)
    }

    pub fn check_count(&self) -> usize {
        self.checks.len()
    }

    fn slots(&self, state: &SearchState) -> Result<(Vec<Arc<Table>>, Vec<Arc<Table>>)> {
        if !is_valid(&self.layout, state) {
            return Err(ConsqlError::BadState);
        }
        let comps: Vec<Arc<Table>> = self
            .components
            .iter()
            .zip(&state.parts)
            .map(|(c, p)| Arc::new(c.table(p)))
            .collect();
        let mut slots = self.base.clone();
        for g in &self.guesses {
            let mut rows = Exec {
                slots: &slots,
                components: &comps,
            }
            .run(&g.plan)?;
            let mut seen = HashSet::new();
            rows.retain(|r| seen.insert(r.clone()));
            slots.push(Arc::new(Table::new(g.columns.clone(), rows)));
        }
        Ok((slots, comps))
    }

    /// Extensions of the guessed tables in `state`.
    pub fn guessed_tables(&self, state: &SearchState) -> Result<BTreeMap<String, Relation>> {
        let (slots, _) = self.slots(state)?;
        Ok(self
            .guesses
            .iter()
            .zip(&slots[self.base.len()..])
            .map(|(g, t)| (g.name.clone(), t.to_relation(&g.name)))
            .collect())
    }

    /// `(holds, violation count)` of CHECK number `i`.
    pub fn eval_condition(&self, i: usize, state: &SearchState) -> Result<(bool, u64)> {
        let (slots, comps) = self.slots(state)?;
        Exec {
            slots: &slots,
            components: &comps,
        }
        .violations(&self.checks[i])
    }

    fn evaluate(&self, state: &SearchState, with_objective: bool) -> Result<(u64, Option<i64>)> {
        let (slots, comps) = self.slots(state)?;
        let ex = Exec {
            slots: &slots,
            components: &comps,
        };
        let mut total = 0u64;
        for c in &self.checks {
            total += ex.violations(c)?.1;
        }
        let obj = match (&self.objective, with_objective) {
            (Some((_, plan)), true) => Some(scalar_of(ex.run(plan)?)?),
            _ => None,
        };
        Ok((total, obj))
    }

    /// Sum of the violation counts of all checks.
    pub fn violations(&self, state: &SearchState) -> Result<u64> {
        Ok(self.evaluate(state, false)?.0)
    }

    pub fn eval_objective(&self, state: &SearchState) -> Result<i64> {
        if self.objective.is_none() {
            return Err(ConsqlError::NoObjective);
        }
        Ok(self.evaluate(state, true)?.1.expect("objective present"))
    }

    /// RETURN tables and `ANSWER`, evaluated on a solution state; with
    /// no solution every table is empty, `ANSWER` included.
    pub fn eval_returns(&self, state: Option<&SearchState>) -> Result<BTreeMap<String, Relation>> {
        let mut out = BTreeMap::new();
        let answer = Table::new(vec!["n".into()], vec![]);
        match state {
            None => {
                for (name, plan) in &self.returns {
                    let t = Table::new(plan.columns().to_vec(), vec![]);
                    out.insert(name.clone(), t.to_relation(name));
                }
                out.insert("ANSWER".into(), answer.to_relation("ANSWER"));
            }
            Some(s) => {
                let (slots, comps) = self.slots(s)?;
                let ex = Exec {
                    slots: &slots,
                    components: &comps,
                };
                for (name, plan) in &self.returns {
                    let t = Table::new(plan.columns().to_vec(), ex.run(plan)?);
                    out.insert(name.clone(), t.to_relation(name));
                }
                let answer = Table::new(answer.columns, vec![vec![Constant::Int(1)]]);
                out.insert("ANSWER".into(), answer.to_relation("ANSWER"));
            }
        }
        Ok(out)
    }
}

fn scalar_of(rows: Vec<Tuple>) -> Result<i64> {
    match rows.as_slice() {
        [row] if row.len() == 1 => row[0]
            .as_int()
            .ok_or_else(|| ConsqlError::Type(format!("objective value `{}`", row[0]))),
        _ => Err(ConsqlError::NotScalar(format!(
            "objective yields {} rows",
            rows.len()
        ))),
    }
}

impl SearchSpace for SearchProblem {
    fn layout(&self) -> &[ComponentLayout] {
        &self.layout
    }

    fn cost(&self, state: &SearchState) -> std::result::Result<Cost, SearchError> {
        let (violations, objective) = self.evaluate(state, true)?;
        Ok(Cost {
            violations,
            objective,
            maximize: self.direction() == Some(Direction::Maximize),
        })
    }
}

/// Runs a standalone query over named relations (for instance the RETURN
/// tables of solved problems, keyed `PROBLEM.TABLE`).
pub fn run_query(query: &Query, tables: &BTreeMap<String, Relation>) -> Result<Table> {
    let mut env = Env::new();
    let mut slots = Vec::new();
    for (name, rel) in tables {
        let t = Table::from_relation(rel);
        env.add(name, t.columns.clone())?;
        slots.push(Arc::new(t));
    }
    let plan = Compiler { env: &env }.query(query)?;
    let rows = Exec {
        slots: &slots,
        components: &[],
    }
    .run(&plan)?;
    Ok(Table::new(plan.columns().to_vec(), rows))
}
