//! Recognition and polynomial-time evaluation of two NP-Alg fragments:
//!
//! * `Eaa`: `Guess Q^(s); FAIL = (DOM × DOM) - π_{Y1,Y2}(PHI)`;
//! * `E1e*aa`: `Guess Q^(1); X = PHI(X1..Xk, Y1, Y2) / ρ(DOM × DOM);
//!   FAIL = empty(X)`;
//!
//! with `PHI` q-free. Both are decided by grounding into 2SAT: every
//! candidate tuple of `Q` becomes a boolean variable, the query is evaluated
//! symbolically, and each grounded requirement is turned into clauses of at
//! most two literals.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::guess::{check, GuessError, NpAlgQuery, Witness};
use crate::relation::{
    dom_power, AlgebraError, AlgebraExpr, Attr, AttrRef, Constant, Database, Relation, Schema,
    Tuple,
};
use crate::translate::is_q_free;
use crate::twosat::{solve_2sat, Lit, TwoSatInstance};

/// Requirements with more variables than this are not converted to clauses.
pub const MAX_CLAUSE_VARS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FragmentError {
    #[error("query is not in a polynomial fragment: {0}")]
    NotInFragment(String),
    #[error("grounded requirement over {0} guessed tuples is not expressible in 2-CNF")]
    NotTwoCnf(usize),
    #[error("grounded requirement mentions {0} guessed tuples, more than the limit")]
    TooManyVars(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Guess(#[from] GuessError),
    #[error("reconstructed witness does not satisfy the query")]
    InvalidWitness,
}

type Result<T> = std::result::Result<T, FragmentError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FragmentClass {
    Eaa {
        guess: String,
        phi: AlgebraExpr,
    },
    E1eStarAa {
        guess: String,
        phi: AlgebraExpr,
    },
    General {
        reason: String,
    },
}

impl FragmentClass {
    pub fn tag(&self) -> &'static str {
        match self {
            FragmentClass::Eaa { .. } => "Eaa",
            FragmentClass::E1eStarAa { .. } => "E1eStarAa",
            FragmentClass::General { .. } => "General",
        }
    }

    pub fn is_general(&self) -> bool {
        matches!(self, FragmentClass::General { .. })
    }
}

impl fmt::Display for FragmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentClass::Eaa { guess, .. } | FragmentClass::E1eStarAa { guess, .. } => {
                write!(f, "{} (guess {guess})", self.tag())
            }
            FragmentClass::General { reason } => write!(f, "General ({reason})"),
        }
    }
}

fn general(reason: &str) -> FragmentClass {
    FragmentClass::General {
        reason: reason.to_string(),
    }
}

fn strip_rename(e: &AlgebraExpr) -> &AlgebraExpr {
    match e {
        AlgebraExpr::Rename { input, .. } => strip_rename(input),
        other => other,
    }
}

fn is_dom(e: &AlgebraExpr) -> bool {
    matches!(strip_rename(e), AlgebraExpr::DomPower(1))
}

fn is_dom_squared(e: &AlgebraExpr) -> bool {
    match strip_rename(e) {
        AlgebraExpr::DomPower(2) => true,
        AlgebraExpr::Product(a, b) => is_dom(a) && is_dom(b),
        _ => false,
    }
}

/// Structural classification. Anything not matching a fragment exactly is
/// `General`.
pub fn classify(query: &NpAlgQuery) -> FragmentClass {
    let [decl] = query.guesses.as_slice() else {
        return general("the fragments admit exactly one guessed relation");
    };
    let leaf = |e: &AlgebraExpr| match e {
        AlgebraExpr::Guessed(n) => query.decl(n).map(|d| d.arity),
        AlgebraExpr::Base(n) => query.base_arities.get(n).copied(),
        _ => None,
    };
    let fail = query.inlined_fail();
    let AlgebraExpr::Difference(left, right) = &fail else {
        return general("FAIL is not a difference");
    };
    if is_dom_squared(left) {
        let phi = match &**right {
            AlgebraExpr::Project(attrs, phi) if attrs.len() == 2 => (**phi).clone(),
            AlgebraExpr::Project(..) => return general("projection is not onto two attributes"),
            other => other.clone(),
        };
        if !is_q_free(&phi, &leaf) {
            return general("PHI is not q-free");
        }
        return FragmentClass::Eaa {
            guess: decl.name.clone(),
            phi,
        };
    }
    if is_dom(left) {
        // empty(X) = DOM - π_$1(DOM × X)
        let AlgebraExpr::Project(attrs, prod) = &**right else {
            return general("FAIL is not an emptiness test");
        };
        if attrs.as_slice() != [AttrRef::Pos(1)] {
            return general("FAIL is not an emptiness test");
        }
        let AlgebraExpr::Product(d, x) = &**prod else {
            return general("FAIL is not an emptiness test");
        };
        if !is_dom(d) {
            return general("FAIL is not an emptiness test");
        }
        let AlgebraExpr::Divide(phi, divisor) = strip_rename(x) else {
            return general("X is not a division");
        };
        if decl.arity != 1 {
            return general("E1e*aa needs a unary guessed relation");
        }
        if !is_dom_squared(divisor) {
            return general("divisor is not DOM × DOM");
        }
        if let Some(arity) = phi.static_arity(&leaf) {
            if arity < 3 {
                return general("PHI needs at least one X attribute");
            }
        }
        if !is_q_free(phi, &leaf) {
            return general("PHI is not q-free");
        }
        return FragmentClass::E1eStarAa {
            guess: decl.name.clone(),
            phi: (**phi).clone(),
        };
    }
    general("FAIL does not match a fragment shape")
}

/// Boolean formula over guessed-tuple variables.
#[derive(Debug)]
enum Form {
    Const(bool),
    Var(usize),
    Not(F),
    And(F, F),
    Or(F, F),
}

type F = Rc<Form>;

fn konst(b: bool) -> F {
    Rc::new(Form::Const(b))
}

fn is_const(f: &F) -> Option<bool> {
    match **f {
        Form::Const(b) => Some(b),
        _ => None,
    }
}

fn not(f: &F) -> F {
    match &**f {
        Form::Const(b) => konst(!b),
        Form::Not(g) => g.clone(),
        _ => Rc::new(Form::Not(f.clone())),
    }
}

fn and(a: &F, b: &F) -> F {
    match (is_const(a), is_const(b)) {
        (Some(false), _) | (_, Some(false)) => konst(false),
        (Some(true), _) => b.clone(),
        (_, Some(true)) => a.clone(),
        _ => Rc::new(Form::And(a.clone(), b.clone())),
    }
}

fn or(a: &F, b: &F) -> F {
    match (is_const(a), is_const(b)) {
        (Some(true), _) | (_, Some(true)) => konst(true),
        (Some(false), _) => b.clone(),
        (_, Some(false)) => a.clone(),
        _ => Rc::new(Form::Or(a.clone(), b.clone())),
    }
}

fn xor(a: &F, b: &F) -> F {
    or(&and(a, &not(b)), &and(&not(a), b))
}

fn vars_of(f: &F, out: &mut BTreeSet<usize>) {
    match &**f {
        Form::Const(_) => {}
        Form::Var(v) => {
            out.insert(*v);
        }
        Form::Not(g) => vars_of(g, out),
        Form::And(a, b) | Form::Or(a, b) => {
            vars_of(a, out);
            vars_of(b, out);
        }
    }
}

fn eval_form(f: &F, vars: &[usize], bits: u32) -> bool {
    match &**f {
        Form::Const(b) => *b,
        Form::Var(v) => {
            let i = vars.iter().position(|x| x == v).expect("collected var");
            bits >> i & 1 == 1
        }
        Form::Not(g) => !eval_form(g, vars, bits),
        Form::And(a, b) => eval_form(a, vars, bits) && eval_form(b, vars, bits),
        Form::Or(a, b) => eval_form(a, vars, bits) || eval_form(b, vars, bits),
    }
}

/// Clauses of at most two literals equivalent to `f`; `None` if `f` is
/// unsatisfiable.
fn two_cnf(f: &F) -> Result<Option<Vec<(Lit, Lit)>>> {
    if let Some(b) = is_const(f) {
        return Ok(b.then(Vec::new));
    }
    let mut set = BTreeSet::new();
    vars_of(f, &mut set);
    let vars: Vec<usize> = set.into_iter().collect();
    let m = vars.len();
    if m > MAX_CLAUSE_VARS {
        return Err(FragmentError::TooManyVars(m));
    }
    let table: Vec<bool> = (0..1u32 << m).map(|b| eval_form(f, &vars, b)).collect();
    if table.iter().all(|t| !t) {
        return Ok(None);
    }
    let lit_holds = |(i, pos): (usize, bool), bits: u32| (bits >> i & 1 == 1) == pos;
    let implied = |c: &[(usize, bool)]| {
        (0..1u32 << m).all(|b| !table[b as usize] || c.iter().any(|&l| lit_holds(l, b)))
    };
    let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    let lits: Vec<(usize, bool)> = (0..m).flat_map(|i| [(i, true), (i, false)]).collect();
    for &l in &lits {
        if implied(&[l]) {
            clauses.push(vec![l]);
        }
    }
    for (a, &la) in lits.iter().enumerate() {
        for &lb in &lits[a + 1..] {
            if la.0 == lb.0 {
                continue;
            }
            let subsumed = clauses.iter().any(|c| c.len() == 1 && (c[0] == la || c[0] == lb));
            if !subsumed && implied(&[la, lb]) {
                clauses.push(vec![la, lb]);
            }
        }
    }
    // the implied clauses must characterise f exactly
    let exact = (0..1u32 << m).all(|b| {
        let sat = clauses.iter().all(|c| c.iter().any(|&l| lit_holds(l, b)));
        sat == table[b as usize]
    });
    if !exact {
        return Err(FragmentError::NotTwoCnf(m));
    }
    let to_lit = |(i, pos): (usize, bool)| Lit {
        var: vars[i],
        positive: pos,
    };
    Ok(Some(
        clauses
            .into_iter()
            .map(|c| (to_lit(c[0]), to_lit(*c.last().expect("non-empty clause"))))
            .collect(),
    ))
}

/// Relation whose tuples are present under the attached condition.
struct SymRel {
    schema: Schema,
    rows: HashMap<Tuple, F>,
}

impl SymRel {
    fn get(&self, t: &[Constant]) -> F {
        self.rows.get(t).cloned().unwrap_or_else(|| konst(false))
    }

    fn add(&mut self, t: Tuple, f: F) {
        if is_const(&f) == Some(false) {
            return;
        }
        let merged = match self.rows.remove(&t) {
            Some(old) => or(&old, &f),
            None => f,
        };
        self.rows.insert(t, merged);
    }
}


struct Grounder<'a> {
    db: &'a Database,
    guess: String,
    arity: usize,
    /// Candidate tuples of the guessed relation; variable `i` is tuple `i`.
    tuples: &'a [Tuple],
    env: Vec<(String, Rc<SymRel>)>,
}

impl Grounder<'_> {
    fn qualify(schema: &Schema, name: &str) -> Schema {
        Schema(
            schema
                .attrs()
                .iter()
                .map(|a| Attr {
                    qualifier: a.qualifier.clone().or_else(|| Some(Arc::from(name))),
                    name: a.name.clone(),
                })
                .collect(),
        )
    }

    fn arity_check(op: &'static str, a: &SymRel, b: &SymRel) -> Result<()> {
        if a.schema.arity() != b.schema.arity() {
            return Err(AlgebraError::ArityMismatch {
                op,
                left: a.schema.arity(),
                right: b.schema.arity(),
            }
            .into());
        }
        Ok(())
    }

    fn eval(&mut self, e: &AlgebraExpr) -> Result<Rc<SymRel>> {
        use AlgebraExpr::*;
        let out = match e {
            Base(n) => {
                let rel = self
                    .db
                    .get(n)
                    .ok_or_else(|| AlgebraError::UnknownRelation(n.clone()))?;
                SymRel {
                    schema: Self::qualify(rel.schema(), n),
                    rows: rel.iter().map(|t| (t.clone(), konst(true))).collect(),
                }
            }
            Guessed(n) => {
                if *n != self.guess {
                    return Err(AlgebraError::UnknownGuess(n.clone()).into());
                }
                SymRel {
                    schema: Self::qualify(&Schema::anonymous(self.arity), n),
                    rows: self
                        .tuples
                        .iter()
                        .enumerate()
                        .map(|(i, t)| (t.clone(), Rc::new(Form::Var(i))))
                        .collect(),
                }
            }
            LetRef(n) => {
                return self
                    .env
                    .iter()
                    .rev()
                    .find(|(k, _)| k == n)
                    .map(|(_, r)| r.clone())
                    .ok_or_else(|| AlgebraError::UnknownLet(n.clone()).into())
            }
            DomPower(k) => SymRel {
                schema: Schema::anonymous(*k),
                rows: dom_power(self.db, *k)?
                    .iter()
                    .map(|t| (t, konst(true)))
                    .collect(),
            },
            Select(p, input) => {
                let r = self.eval(input)?;
                let cp = p.compile(&r.schema)?;
                SymRel {
                    schema: r.schema.clone(),
                    rows: r
                        .rows
                        .iter()
                        .filter(|(t, _)| cp.eval(t))
                        .map(|(t, f)| (t.clone(), f.clone()))
                        .collect(),
                }
            }
            Project(attrs, input) => {
                let r = self.eval(input)?;
                let idx = attrs
                    .iter()
                    .map(|a| r.schema.resolve(a))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let mut out = SymRel {
                    schema: Schema(idx.iter().map(|&i| r.schema.0[i].clone()).collect()),
                    rows: HashMap::new(),
                };
                for (t, f) in &r.rows {
                    out.add(idx.iter().map(|&i| t[i].clone()).collect(), f.clone());
                }
                out
            }
            Product(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                self.product(&ra, &rb)
            }
            Join(p, a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                let prod = self.product(&ra, &rb);
                let cp = p.compile(&prod.schema)?;
                SymRel {
                    schema: prod.schema,
                    rows: prod.rows.into_iter().filter(|(t, _)| cp.eval(t)).collect(),
                }
            }
            Union(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                Self::arity_check("union", &ra, &rb)?;
                let mut out = SymRel {
                    schema: ra.schema.merge_for_set_op(&rb.schema),
                    rows: ra.rows.clone(),
                };
                for (t, f) in &rb.rows {
                    out.add(t.clone(), f.clone());
                }
                out
            }
            Difference(a, b) | Intersect(a, b) | SymDiff(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                Self::arity_check("set operator", &ra, &rb)?;
                let mut out = SymRel {
                    schema: ra.schema.merge_for_set_op(&rb.schema),
                    rows: HashMap::new(),
                };
                let keys: BTreeSet<&Tuple> = match e {
                    SymDiff(..) => ra.rows.keys().chain(rb.rows.keys()).collect(),
                    _ => ra.rows.keys().collect(),
                };
                for t in keys {
                    let (fa, fb) = (ra.get(t), rb.get(t));
                    let f = match e {
                        Difference(..) => and(&fa, &not(&fb)),
                        Intersect(..) => and(&fa, &fb),
                        _ => xor(&fa, &fb),
                    };
                    out.add(t.clone(), f);
                }
                out
            }
            Divide(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                let (n, r) = (ra.schema.arity(), rb.schema.arity());
                if r < 1 || n <= r {
                    return Err(AlgebraError::DivideArity {
                        dividend: n,
                        divisor: r,
                    }
                    .into());
                }
                if rb.rows.is_empty() {
                    return Err(AlgebraError::EmptyDivisor.into());
                }
                let d = n - r;
                let prefixes: BTreeSet<&[Constant]> = ra.rows.keys().map(|t| &t[..d]).collect();
                let mut out = SymRel {
                    schema: Schema(ra.schema.attrs()[..d].to_vec()),
                    rows: HashMap::new(),
                };
                for p in prefixes {
                    let mut f = konst(true);
                    for (u, fu) in &rb.rows {
                        let mut t = p.to_vec();
                        t.extend(u.iter().cloned());
                        f = and(&f, &or(&not(fu), &ra.get(&t)));
                    }
                    out.add(p.to_vec(), f);
                }
                out
            }
            NaturalJoin(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                self.natural_join(&ra, &rb)?
            }
            Rename {
                alias,
                names,
                input,
            } => {
                let r = self.eval(input)?;
                if !names.is_empty() && names.len() != r.schema.arity() {
                    return Err(AlgebraError::RenameArity {
                        names: names.len(),
                        arity: r.schema.arity(),
                    }
                    .into());
                }
                let schema = Schema(
                    r.schema
                        .attrs()
                        .iter()
                        .enumerate()
                        .map(|(i, a)| Attr {
                            qualifier: alias.as_deref().map(Arc::from).or_else(|| a.qualifier.clone()),
                            name: if names.is_empty() {
                                a.name.clone()
                            } else {
                                Some(Arc::from(names[i].as_str()))
                            },
                        })
                        .collect(),
                );
                SymRel {
                    schema,
                    rows: r.rows.clone(),
                }
            }
            Let { name, value, body } => {
                let v = self.eval(value)?;
                self.env.push((name.clone(), v));
                let r = self.eval(body);
                self.env.pop();
                return r;
            }
        };
        Ok(Rc::new(out))
    }

    fn product(&self, a: &SymRel, b: &SymRel) -> SymRel {
        let mut rows = HashMap::with_capacity(a.rows.len() * b.rows.len());
        for (x, fx) in &a.rows {
            for (y, fy) in &b.rows {
                let f = and(fx, fy);
                if is_const(&f) == Some(false) {
                    continue;
                }
                let mut t = x.clone();
                t.extend(y.iter().cloned());
                rows.insert(t, f);
            }
        }
        SymRel {
            schema: a.schema.concat(&b.schema),
            rows,
        }
    }

    fn natural_join(&self, a: &SymRel, b: &SymRel) -> Result<SymRel> {
        let mut shared = Vec::new();
        for (j, attr) in b.schema.attrs().iter().enumerate() {
            if let Some(n) = &attr.name {
                let hits: Vec<usize> = a
                    .schema
                    .attrs()
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| x.name.as_ref() == Some(n))
                    .map(|(i, _)| i)
                    .collect();
                match hits.as_slice() {
                    [] => {}
                    [i] => shared.push((*i, j)),
                    _ => return Err(AlgebraError::AmbiguousAttribute(n.to_string()).into()),
                }
            }
        }
        let keep_b: Vec<usize> = (0..b.schema.arity())
            .filter(|j| !shared.iter().any(|&(_, s)| s == *j))
            .collect();
        let mut attrs = a.schema.attrs().to_vec();
        attrs.extend(keep_b.iter().map(|&j| b.schema.attrs()[j].clone()));
        let mut rows = HashMap::new();
        for (x, fx) in &a.rows {
            for (y, fy) in &b.rows {
                if shared.iter().all(|&(i, j)| x[i] == y[j]) {
                    let f = and(fx, fy);
                    if is_const(&f) == Some(false) {
                        continue;
                    }
                    let mut t = x.clone();
                    t.extend(keep_b.iter().map(|&j| y[j].clone()));
                    rows.insert(t, f);
                }
            }
        }
        Ok(SymRel {
            schema: Schema(attrs),
            rows,
        })
    }
}

/// The 2SAT grounding of a fragment query over a database. The query holds
/// iff at least one instance is satisfiable (there is exactly one for
/// `Eaa`, one per candidate `X` tuple for `E1e*aa`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grounding {
    pub guess: String,
    /// Variable `i` stands for "tuple `i` belongs to the guessed relation".
    pub tuples: Vec<Tuple>,
    pub instances: Vec<TwoSatInstance>,
}

/// Adds the clauses of every requirement to `inst`; false if some
/// requirement is unsatisfiable on its own.
fn require(inst: &mut TwoSatInstance, reqs: impl IntoIterator<Item = F>) -> Result<bool> {
    for f in reqs {
        match two_cnf(&f)? {
            Some(cs) => cs.into_iter().for_each(|(a, b)| inst.add(a, b)),
            None => return Ok(false),
        }
    }
    Ok(true)
}

/// An instance with no solution, standing for an unsatisfiable requirement.
fn contradiction(num_vars: usize) -> TwoSatInstance {
    let mut inst = TwoSatInstance::new(num_vars.max(1));
    inst.add_unit(Lit::pos(0));
    inst.add_unit(Lit::neg(0));
    inst
}

pub fn to_2sat(query: &NpAlgQuery, db: &Database) -> Result<Grounding> {
    let class = classify(query);
    let decl = &query.guesses.first().ok_or_else(|| {
        FragmentError::NotInFragment("no guessed relation".to_string())
    })?;
    let tuples: Vec<Tuple> = dom_power(db, decl.arity)?.iter().collect();
    let num_vars = tuples.len();
    let mut g = Grounder {
        db,
        guess: decl.name.clone(),
        arity: decl.arity,
        tuples: &tuples,
        env: Vec::new(),
    };
    let instances = match &class {
        FragmentClass::General { reason } => {
            return Err(FragmentError::NotInFragment(reason.clone()))
        }
        FragmentClass::Eaa { .. } => {
            // every grounded FAIL tuple must be absent
            let fail = g.eval(&query.inlined_fail())?;
            let mut inst = TwoSatInstance::new(num_vars);
            let mut rows: Vec<(&Tuple, &F)> = fail.rows.iter().collect();
            rows.sort_by(|a, b| a.0.cmp(b.0));
            if require(&mut inst, rows.into_iter().map(|(_, f)| not(f)))? {
                vec![inst]
            } else {
                vec![contradiction(num_vars)]
            }
        }
        FragmentClass::E1eStarAa { phi, .. } => {
            let phi = g.eval(phi)?;
            let k = phi.schema.arity() - 2;
            let pairs: Vec<Tuple> = dom_power(db, 2)?.iter().collect();
            let mut out = Vec::new();
            for x in dom_power(db, k)?.iter() {
                let mut inst = TwoSatInstance::new(num_vars);
                let reqs = pairs.iter().map(|y| {
                    let mut t = x.clone();
                    t.extend(y.iter().cloned());
                    phi.get(&t)
                });
                if require(&mut inst, reqs)? {
                    out.push(inst);
                }
            }
            out
        }
    };
    Ok(Grounding {
        guess: decl.name.clone(),
        tuples,
        instances,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyOutcome {
    pub class: FragmentClass,
    pub satisfiable: bool,
    pub witness: Option<Witness>,
}

/// Decides a fragment query in polynomial time; satisfiable answers come
/// with a witness that has been re-checked against the query.
pub fn solve_poly(query: &NpAlgQuery, db: &Database) -> Result<PolyOutcome> {
    let class = classify(query);
    if let FragmentClass::General { reason } = &class {
        return Err(FragmentError::NotInFragment(reason.clone()));
    }
    query.validate(Some(db))?;
    let decl = &query.guesses[0];
    let finish = |w: Witness| -> Result<PolyOutcome> {
        if !check(query, db, &w)? {
            return Err(FragmentError::InvalidWitness);
        }
        Ok(PolyOutcome {
            class: class.clone(),
            satisfiable: true,
            witness: Some(w),
        })
    };
    if db.dom().is_empty() {
        // only the empty extension exists
        let w = Witness::new().with(&decl.name, Relation::with_arity(decl.arity));
        if check(query, db, &w)? {
            return finish(w);
        }
        return Ok(PolyOutcome {
            class,
            satisfiable: false,
            witness: None,
        });
    }
    let grounding = to_2sat(query, db)?;
    for inst in &grounding.instances {
        if let Some(assign) = solve_2sat(inst) {
            let rel = Relation::from_tuples(
                Schema::anonymous(decl.arity),
                grounding
                    .tuples
                    .iter()
                    .zip(&assign)
                    .filter(|(_, v)| **v)
                    .map(|(t, _)| t.clone()),
            )?;
            return finish(Witness::new().with(&decl.name, rel));
        }
    }
    Ok(PolyOutcome {
        class,
        satisfiable: false,
        witness: None,
    })
}
