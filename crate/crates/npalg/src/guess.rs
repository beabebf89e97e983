//! NP-Alg queries: guessed relations plus a FAIL expression, with the
//! existential semantics "some extension of the guessed relations makes FAIL
//! empty", decided here by exhaustive enumeration.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::relation::{
    dom_power, AlgebraError, AlgebraExpr, Database, Evaluator, Relation, Schema, Tuple,
};

/// Default number of candidate witnesses `solve_exact` may examine.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuessError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("guessed relation `{0}` is not declared")]
    Undeclared(String),
    #[error("guessed relation `{0}` is declared twice")]
    Duplicate(String),
    #[error("guessed relation `{0}` clashes with a base relation")]
    NameClash(String),
    #[error("guessed relation `{0}` must have positive arity")]
    ZeroArity(String),
    #[error("witness has no extension for `{0}`")]
    MissingExtension(String),
    #[error("extension of `{name}` has arity {got}, declared {expected}")]
    WitnessArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("extension of `{0}` contains a constant outside the active domain")]
    WitnessDomain(String),
    #[error("search budget of {0} candidate witnesses exhausted")]
    BudgetExhausted(u64),
    #[error("2^{0} candidate extensions do not fit in 64 bits")]
    TooLarge(u128),
}

type Result<T> = std::result::Result<T, GuessError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GuessDecl {
    pub name: String,
    pub arity: usize,
}

impl GuessDecl {
    pub fn new(name: &str, arity: usize) -> Self {
        GuessDecl {
            name: name.to_string(),
            arity,
        }
    }
}

/// `Guess Q1, ..., Qn; L1 = e1; ...; FAIL = e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpAlgQuery {
    pub guesses: Vec<GuessDecl>,
    /// Named intermediate expressions; each may refer to earlier ones
    /// through [`AlgebraExpr::LetRef`].
    pub lets: Vec<(String, AlgebraExpr)>,
    pub fail: AlgebraExpr,
    /// Optional declared arities of the base relations the query expects.
    pub base_arities: BTreeMap<String, usize>,
}

impl NpAlgQuery {
    pub fn new(fail: AlgebraExpr) -> Self {
        NpAlgQuery {
            guesses: Vec::new(),
            lets: Vec::new(),
            fail,
            base_arities: BTreeMap::new(),
        }
    }

    pub fn guess(mut self, name: &str, arity: usize) -> Self {
        self.guesses.push(GuessDecl::new(name, arity));
        self
    }

    pub fn with_guesses(mut self, decls: impl IntoIterator<Item = GuessDecl>) -> Self {
        self.guesses.extend(decls);
        self
    }

    pub fn with_let(mut self, name: &str, expr: AlgebraExpr) -> Self {
        self.lets.push((name.to_string(), expr));
        self
    }

    pub fn with_base(mut self, name: &str, arity: usize) -> Self {
        self.base_arities.insert(name.to_string(), arity);
        self
    }

    pub fn decl(&self, name: &str) -> Option<&GuessDecl> {
        self.guesses.iter().find(|g| g.name == name)
    }

    /// FAIL with every named expression inlined.
    pub fn inlined_fail(&self) -> AlgebraExpr {
        let mut env: Vec<(String, AlgebraExpr)> = Vec::new();
        for (name, e) in &self.lets {
            let e = e.substitute(&env);
            env.push((name.clone(), e));
        }
        self.fail.substitute(&env)
    }

    /// FAIL wrapped in nested [`AlgebraExpr::Let`] nodes, one per named
    /// expression, so it can be evaluated on its own.
    pub fn fail_with_lets(&self) -> AlgebraExpr {
        self.lets
            .iter()
            .rev()
            .fold(self.fail.clone(), |body, (name, value)| AlgebraExpr::Let {
                name: name.clone(),
                value: Box::new(value.clone()),
                body: Box::new(body),
            })
    }

    /// Structural checks; `db`, when given, is used to detect name clashes.
    pub fn validate(&self, db: Option<&Database>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for g in &self.guesses {
            if !seen.insert(g.name.as_str()) {
                return Err(GuessError::Duplicate(g.name.clone()));
            }
            if g.arity == 0 {
                return Err(GuessError::ZeroArity(g.name.clone()));
            }
            let clashes = db.is_some_and(|db| db.contains(&g.name))
                || self.base_arities.contains_key(&g.name);
            if clashes {
                return Err(GuessError::NameClash(g.name.clone()));
            }
        }
        let mut known_lets: Vec<String> = Vec::new();
        for (name, e) in &self.lets {
            self.check_refs(e, &known_lets, &mut Vec::new())?;
            known_lets.push(name.clone());
        }
        self.check_refs(&self.fail, &known_lets, &mut Vec::new())
    }

    fn check_refs(
        &self,
        e: &AlgebraExpr,
        lets: &[String],
        bound: &mut Vec<String>,
    ) -> Result<()> {
        match e {
            AlgebraExpr::Guessed(n) if self.decl(n).is_none() => {
                Err(GuessError::Undeclared(n.clone()))
            }
            AlgebraExpr::LetRef(n) if !lets.contains(n) && !bound.contains(n) => {
                Err(AlgebraError::UnknownLet(n.clone()).into())
            }
            AlgebraExpr::Let { name, value, body } => {
                self.check_refs(value, lets, bound)?;
                bound.push(name.clone());
                let r = self.check_refs(body, lets, bound);
                bound.pop();
                r
            }
            _ => e
                .children()
                .into_iter()
                .try_for_each(|c| self.check_refs(c, lets, bound)),
        }
    }

    fn evaluator<'a>(
        &'a self,
        db: &'a Database,
        ext: &'a BTreeMap<String, Relation>,
    ) -> Result<Evaluator<'a>> {
        let mut ev = Evaluator::new(db, ext);
        for (name, e) in &self.lets {
            ev.declare(name, e);
        }
        Ok(ev)
    }

    /// Evaluates FAIL under the given extensions (no witness validation).
    pub fn eval_fail(&self, db: &Database, w: &Witness) -> Result<Relation> {
        let mut ev = self.evaluator(db, &w.extensions)?;
        Ok(ev.eval(&self.fail)?)
    }

    /// Evaluates a named intermediate expression under `w`.
    pub fn eval_let(&self, name: &str, db: &Database, w: &Witness) -> Result<Relation> {
        let mut ev = self.evaluator(db, &w.extensions)?;
        Ok(ev.eval(&AlgebraExpr::let_ref(name))?)
    }

    /// Emptiness of a named `let`, stopping at the first non-empty union branch.
    pub fn let_is_empty(&self, name: &str, db: &Database, w: &Witness) -> Result<bool> {
        let mut ev = self.evaluator(db, &w.extensions)?;
        Ok(ev.is_empty(&AlgebraExpr::let_ref(name))?)
    }

    fn fail_is_empty(&self, db: &Database, ext: &BTreeMap<String, Relation>) -> Result<bool> {
        let mut ev = self.evaluator(db, ext)?;
        Ok(ev.is_empty(&self.fail)?)
    }
}

/// One extension per guessed relation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Witness {
    pub extensions: BTreeMap<String, Relation>,
}

impl Witness {
    pub fn new() -> Self {
        Witness::default()
    }

    pub fn with(mut self, name: &str, rel: Relation) -> Self {
        self.extensions.insert(name.to_string(), rel);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.extensions.get(name)
    }
}

fn validate_witness(query: &NpAlgQuery, db: &Database, w: &Witness) -> Result<()> {
    for g in &query.guesses {
        let rel = w
            .get(&g.name)
            .ok_or_else(|| GuessError::MissingExtension(g.name.clone()))?;
        if rel.arity() != g.arity {
            return Err(GuessError::WitnessArity {
                name: g.name.clone(),
                expected: g.arity,
                got: rel.arity(),
            });
        }
        if rel.iter().flatten().any(|c| !db.in_dom(c)) {
            return Err(GuessError::WitnessDomain(g.name.clone()));
        }
    }
    Ok(())
}

/// True iff FAIL evaluates to the empty relation under `w`.
pub fn check(query: &NpAlgQuery, db: &Database, w: &Witness) -> Result<bool> {
    query.validate(Some(db))?;
    validate_witness(query, db, w)?;
    query.fail_is_empty(db, &w.extensions)
}

/// `DOM - π_$1(DOM × FAIL)`: non-empty exactly when FAIL is empty (and DOM
/// is not).
pub fn found_expr(query: &NpAlgQuery) -> AlgebraExpr {
    AlgebraExpr::dom().minus(
        AlgebraExpr::dom()
            .product(query.fail_with_lets())
            .project_pos([1]),
    )
}

/// Number of candidate extensions of one guessed relation,
/// `2^(|DOM|^arity)`.
pub fn count_extensions(decl: &GuessDecl, db: &Database) -> Result<u64> {
    let exp = (db.dom().len() as u128)
        .checked_pow(decl.arity as u32)
        .unwrap_or(u128::MAX);
    if exp > 63 {
        return Err(GuessError::TooLarge(exp));
    }
    Ok(1u64 << exp)
}

#[derive(Clone, Debug)]
pub struct ExactOptions {
    /// Maximum number of candidate witnesses examined.
    pub budget: u64,
    /// Guessed relations whose extension is fixed rather than enumerated.
    pub fixed: BTreeMap<String, Relation>,
    /// Restricts the tuples a guessed relation may contain. Only sound when
    /// FAIL rejects every extension with a tuple outside the universe.
    pub universes: BTreeMap<String, Vec<Tuple>>,
    /// Worker threads; `None` uses the global pool, `Some(1)` runs inline.
    pub threads: Option<usize>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            budget: DEFAULT_BUDGET,
            fixed: BTreeMap::new(),
            universes: BTreeMap::new(),
            threads: None,
        }
    }
}

/// The enumeration space: for every free guess, its sorted candidate tuples.
/// Candidate `i` includes tuple `j` of guess `g` iff the bit
/// `offset[g] + j` of `i` is set; guess 0 occupies the lowest bits.
struct Space {
    free: Vec<(GuessDecl, Vec<Tuple>)>,
    bits: u128,
}

impl Space {
    fn new(query: &NpAlgQuery, db: &Database, opts: &ExactOptions) -> Result<Self> {
        let mut free = Vec::new();
        let mut bits: u128 = 0;
        for g in &query.guesses {
            if opts.fixed.contains_key(&g.name) {
                continue;
            }
            let mut universe: Vec<Tuple> = match opts.universes.get(&g.name) {
                Some(u) => u.clone(),
                None => {
                    let size = dom_power(db, g.arity)?.len();
                    if size > 64 {
                        // larger than any budget: enumerate the first tuples only
                        bits = u128::MAX;
                        dom_power(db, g.arity)?.iter().take(64).collect()
                    } else {
                        dom_power(db, g.arity)?.iter().collect()
                    }
                }
            };
            universe.sort();
            universe.dedup();
            bits = bits.saturating_add(universe.len() as u128);
            free.push((g.clone(), universe));
        }
        Ok(Space { free, bits })
    }

    /// Number of candidates, or `None` when it exceeds `u64`.
    fn size(&self) -> Option<u64> {
        (self.bits < 64).then(|| 1u64 << self.bits)
    }

    fn decode(&self, mut idx: u64, opts: &ExactOptions) -> BTreeMap<String, Relation> {
        let mut ext = opts.fixed.clone();
        for (g, universe) in &self.free {
            let mut rel = Relation::with_arity(g.arity);
            for t in universe {
                if idx & 1 == 1 {
                    // arity checked when the universe was built
                    let _ = rel.insert(t.clone());
                }
                idx >>= 1;
            }
            ext.insert(g.name.clone(), rel);
        }
        ext
    }
}

fn prepare(query: &NpAlgQuery, db: &Database, opts: &ExactOptions) -> Result<Space> {
    query.validate(Some(db))?;
    for (name, rel) in &opts.fixed {
        let decl = query
            .decl(name)
            .ok_or_else(|| GuessError::Undeclared(name.clone()))?;
        if rel.arity() != decl.arity {
            return Err(GuessError::WitnessArity {
                name: name.clone(),
                expected: decl.arity,
                got: rel.arity(),
            });
        }
    }
    for (name, universe) in &opts.universes {
        let decl = query
            .decl(name)
            .ok_or_else(|| GuessError::Undeclared(name.clone()))?;
        if let Some(t) = universe.iter().find(|t| t.len() != decl.arity) {
            return Err(GuessError::WitnessArity {
                name: name.clone(),
                expected: decl.arity,
                got: t.len(),
            });
        }
    }
    Space::new(query, db, opts)
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 1 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Searches the candidate witnesses in index order and returns the first
/// one making FAIL empty, `None` if there is none.
pub fn solve_exact(
    query: &NpAlgQuery,
    db: &Database,
    opts: &ExactOptions,
) -> Result<Option<Witness>> {
    let space = prepare(query, db, opts)?;
    let limit = space.size().map_or(opts.budget, |s| s.min(opts.budget));
    let test = |idx: u64| -> Option<Result<u64>> {
        let ext = space.decode(idx, opts);
        match query.fail_is_empty(db, &ext) {
            Ok(true) => Some(Ok(idx)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    };
    let found = if opts.threads == Some(1) {
        (0..limit).find_map(test)
    } else {
        run_in_pool(opts.threads, || {
            (0..limit).into_par_iter().find_map_first(test)
        })
    };
    match found {
        Some(Ok(idx)) => Ok(Some(Witness {
            extensions: space.decode(idx, opts),
        })),
        Some(Err(e)) => Err(e),
        None if space.size().is_some_and(|s| s <= opts.budget) => Ok(None),
        None => Err(GuessError::BudgetExhausted(opts.budget)),
    }
}

/// Result of running the enumeration to exhaustion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enumeration {
    /// Candidate witnesses examined.
    pub visited: u64,
    /// Every solution found, in enumeration order.
    pub solutions: Vec<Witness>,
}

/// Visits every candidate witness and collects all solutions.
pub fn enumerate_exact(
    query: &NpAlgQuery,
    db: &Database,
    opts: &ExactOptions,
) -> Result<Enumeration> {
    let space = prepare(query, db, opts)?;
    let size = match space.size() {
        Some(s) if s <= opts.budget => s,
        _ => return Err(GuessError::BudgetExhausted(opts.budget)),
    };
    let hits: Vec<Result<Option<u64>>> = run_in_pool(opts.threads, || {
        (0..size)
            .into_par_iter()
            .map(|idx| {
                let ext = space.decode(idx, opts);
                Ok(query.fail_is_empty(db, &ext)?.then_some(idx))
            })
            .collect()
    });
    let mut solutions = Vec::new();
    for h in hits {
        if let Some(idx) = h? {
            solutions.push(Witness {
                extensions: space.decode(idx, opts),
            });
        }
    }
    Ok(Enumeration {
        visited: size,
        solutions,
    })
}

/// Anonymous relation holding exactly the given tuples.
pub fn relation_of(arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Relation> {
    Ok(Relation::from_tuples(Schema::anonymous(arity), tuples)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{evaluate, Constant};

    fn db_ab() -> Database {
        Database::new().with_relation(
            "R",
            Relation::unary(Schema::anonymous(1), ["a", "b"]).unwrap(),
        )
    }

    fn trivial_query(arity: usize) -> NpAlgQuery {
        NpAlgQuery::new(AlgebraExpr::dom().minus(AlgebraExpr::dom())).guess("Q", arity)
    }

    #[test]
    fn trivially_empty_fail_accepts_any_witness() {
        let db = db_ab();
        let q = trivial_query(1);
        let w = Witness::new().with("Q", Relation::unary(Schema::anonymous(1), ["a"]).unwrap());
        assert!(check(&q, &db, &w).unwrap());
    }

    #[test]
    fn enumeration_counts() {
        let db = db_ab();
        let e = enumerate_exact(&trivial_query(1), &db, &ExactOptions::default()).unwrap();
        assert_eq!((e.visited, e.solutions.len()), (4, 4));
        let e = enumerate_exact(&trivial_query(2), &db, &ExactOptions::default()).unwrap();
        assert_eq!((e.visited, e.solutions.len()), (16, 16));
        let w = solve_exact(&trivial_query(1), &db, &ExactOptions::default())
            .unwrap()
            .unwrap();
        assert!(w.get("Q").unwrap().is_empty());
    }

    #[test]
    fn count_extensions_examples() {
        let db = db_ab();
        assert_eq!(count_extensions(&GuessDecl::new("Q", 1), &db).unwrap(), 4);
        assert_eq!(count_extensions(&GuessDecl::new("Q", 2), &db).unwrap(), 16);
        let db3 = Database::new().with_relation(
            "R",
            Relation::unary(Schema::anonymous(1), [1i64, 2, 3]).unwrap(),
        );
        assert_eq!(count_extensions(&GuessDecl::new("Q", 1), &db3).unwrap(), 8);
        assert!(matches!(
            count_extensions(&GuessDecl::new("Q", 4), &db3),
            Err(GuessError::TooLarge(81))
        ));
    }

    #[test]
    fn budget_exhaustion_is_not_no() {
        let db = db_ab();
        // FAIL = DOM: never empty
        let q = NpAlgQuery::new(AlgebraExpr::dom()).guess("Q", 2);
        let opts = ExactOptions {
            budget: 8,
            ..Default::default()
        };
        assert_eq!(
            solve_exact(&q, &db, &opts),
            Err(GuessError::BudgetExhausted(8))
        );
        assert_eq!(solve_exact(&q, &db, &ExactOptions::default()), Ok(None));
    }

    #[test]
    fn empty_domain_still_evaluated() {
        let db = Database::new();
        let q = NpAlgQuery::new(AlgebraExpr::guessed("Q")).guess("Q", 1);
        let w = solve_exact(&q, &db, &ExactOptions::default())
            .unwrap()
            .unwrap();
        assert!(w.get("Q").unwrap().is_empty());
    }

    #[test]
    fn found_is_complement_of_fail_emptiness() {
        let db = Database::new().with_relation(
            "R",
            Relation::unary(Schema::anonymous(1), [1i64, 2]).unwrap(),
        );
        let ext = BTreeMap::new();
        let empty = NpAlgQuery::new(AlgebraExpr::dom().minus(AlgebraExpr::dom()));
        let found = evaluate(&found_expr(&empty), &db, &ext).unwrap();
        assert_eq!(found.len(), 2);
        let full = NpAlgQuery::new(AlgebraExpr::dom());
        assert!(evaluate(&found_expr(&full), &db, &ext).unwrap().is_empty());
        let found = evaluate(&found_expr(&empty), &Database::new(), &ext).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn validation_errors() {
        let db = db_ab();
        let clash = NpAlgQuery::new(AlgebraExpr::guessed("R")).guess("R", 1);
        assert_eq!(
            check(&clash, &db, &Witness::new()),
            Err(GuessError::NameClash("R".into()))
        );
        let undeclared = NpAlgQuery::new(AlgebraExpr::guessed("Z"));
        assert_eq!(
            undeclared.validate(None),
            Err(GuessError::Undeclared("Z".into()))
        );
        let q = trivial_query(1);
        let bad = Witness::new().with("Q", relation_of(1, [vec![Constant::Int(9)]]).unwrap());
        assert_eq!(
            check(&q, &db, &bad),
            Err(GuessError::WitnessDomain("Q".into()))
        );
        assert_eq!(
            check(&q, &db, &Witness::new()),
            Err(GuessError::MissingExtension("Q".into()))
        );
    }

    #[test]
    fn parallel_matches_sequential() {
        let db = Database::new().with_relation(
            "R",
            Relation::unary(Schema::anonymous(1), [1i64, 2, 3]).unwrap(),
        );
        // FAIL = DOM - Q: the only solution is Q = DOM, the last index
        let q = NpAlgQuery::new(AlgebraExpr::dom().minus(AlgebraExpr::guessed("Q"))).guess("Q", 1);
        let seq = solve_exact(
            &q,
            &db,
            &ExactOptions {
                threads: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let par = solve_exact(
            &q,
            &db,
            &ExactOptions {
                threads: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.unwrap().get("Q").unwrap().len(), 3);
    }
}
