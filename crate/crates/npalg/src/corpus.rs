//! Worked problems shipped under `fixtures/`.
//!
//! ```text
//! fixtures/
//!   index.toml      one [[fixture]] table per problem
//!   queries/        NP-Alg queries in the s-expression format
//!   consql/         CREATE SPECIFICATION files
//!   data/<name>/    CSV instance directories
//!   eso/            ESO sentences
//!   circuits/       circuit JSON files
//! ```
//!
//! A fixture names exactly one of `query` or `spec`, a `data` directory and
//! the `expected` answer. Optional fields: `witness` (guessed relation to
//! rows, for queries), `objective` (optimum, for specs with an objective)
//! and `fragment` (the polynomial fragment tag of a query).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::consql::{self, ast::Specification, ConsqlError};
use crate::guess::{NpAlgQuery, Witness};
use crate::io::{self, IoError};
use crate::relation::{AlgebraExpr, CmpOp, Constant, Database, Pred, Tuple};
use crate::sugar::{self, FunctionKind, SizeCmp};
use crate::text::{self, TextError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("fixture index: {0}")]
    Index(String),
    #[error("{path}: {source}")]
    Text { path: PathBuf, source: TextError },
    #[error("{path}: {source}")]
    Consql { path: PathBuf, source: ConsqlError },
    #[error(transparent)]
    Io(#[from] IoError),
}

type Result<T> = std::result::Result<T, CorpusError>;

/// The `fixtures/` directory of this crate.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub query: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub data: PathBuf,
    pub expected: bool,
    #[serde(default)]
    pub witness: BTreeMap<String, Vec<Vec<toml::Value>>>,
    pub objective: Option<i64>,
    pub fragment: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Index {
    fixture: Vec<Fixture>,
}

pub enum Body {
    Query(NpAlgQuery),
    Spec(Specification),
}

pub struct Loaded {
    pub fixture: Fixture,
    pub body: Body,
    pub db: Database,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn constant(v: &toml::Value) -> Result<Constant> {
    match v {
        toml::Value::Integer(i) => Ok(Constant::Int(*i)),
        toml::Value::String(s) => Ok(Constant::sym(s)),
        other => Err(CorpusError::Index(format!("unsupported witness value {other}"))),
    }
}

impl Fixture {
    /// The expected witness, if the index gives one.
    pub fn witness(&self, query: &NpAlgQuery) -> Result<Option<Witness>> {
        if self.witness.is_empty() {
            return Ok(None);
        }
        let mut w = Witness::new();
        for g in &query.guesses {
            let rows = self
                .witness
                .get(&g.name)
                .ok_or_else(|| CorpusError::Index(format!("{}: no witness for {}", self.name, g.name)))?;
            let tuples = rows
                .iter()
                .map(|r| r.iter().map(constant).collect::<Result<Tuple>>())
                .collect::<Result<Vec<_>>>()?;
            let rel = crate::guess::relation_of(g.arity, tuples)
                .map_err(|e| CorpusError::Index(format!("{}: {e}", self.name)))?;
            w = w.with(&g.name, rel);
        }
        Ok(Some(w))
    }

    pub fn load(&self) -> Result<Loaded> {
        let dir = fixtures_dir();
        let body = match (&self.query, &self.spec) {
            (Some(q), None) => {
                let path = dir.join(q);
                Body::Query(text::parse_query(&read(&path)?).map_err(|source| CorpusError::Text { path, source })?)
            }
            (None, Some(s)) => {
                let path = dir.join(s);
                Body::Spec(consql::parse_spec(&read(&path)?).map_err(|source| CorpusError::Consql { path, source })?)
            }
            _ => {
                return Err(CorpusError::Index(format!(
                    "{}: exactly one of `query` and `spec` is required",
                    self.name
                )))
            }
        };
        Ok(Loaded {
            fixture: self.clone(),
            body,
            db: io::load_db(&dir.join(&self.data))?,
        })
    }
}

/// Every fixture listed in `fixtures/index.toml`, in file order.
pub fn fixtures() -> Result<Vec<Fixture>> {
    let index: Index = toml::from_str(&read(&fixtures_dir().join("index.toml"))?)
        .map_err(|e| CorpusError::Index(e.to_string()))?;
    Ok(index.fixture)
}

pub fn fixture(name: &str) -> Result<Fixture> {
    fixtures()?
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| CorpusError::Index(format!("no fixture `{name}`")))
}

fn g(name: &str) -> AlgebraExpr {
    AlgebraExpr::guessed(name)
}

fn b(name: &str) -> AlgebraExpr {
    AlgebraExpr::base(name)
}

fn first(e: AlgebraExpr) -> AlgebraExpr {
    e.project_pos([1])
}

fn union(parts: Vec<AlgebraExpr>) -> AlgebraExpr {
    AlgebraExpr::union_all(parts).expect("non-empty union")
}

fn sugar_ok<T>(r: std::result::Result<T, sugar::SugarError>) -> T {
    r.expect("builder arguments are well-formed")
}

/// Guess `Q1..Qk`; the color classes partition NODES and no edge joins two
/// nodes of one class.
pub fn k_coloring(k: usize) -> NpAlgQuery {
    let q = |i: usize| g(&format!("Q{i}"));
    let mut disjoint = Vec::new();
    for i in 1..=k {
        for j in 1..=k {
            if i != j {
                disjoint.push(q(i).intersect(q(j)));
            }
        }
    }
    let cover = b("NODES").sym_diff(union((1..=k).map(q).collect()));
    let monochrome = union(
        (1..=k)
            .map(|i| {
                q(i).product(q(i))
                    .select(Pred::cols(1, CmpOp::Ne, 2))
                    .join(
                        Pred::and(vec![Pred::cols(1, CmpOp::Eq, 3), Pred::cols(2, CmpOp::Eq, 4)]),
                        b("EDGES"),
                    )
            })
            .collect(),
    );
    let mut query = NpAlgQuery::new(AlgebraExpr::let_ref("FAIL_PARTITION").union(AlgebraExpr::let_ref("FAIL_COLORING")));
    for i in 1..=k {
        query = query.guess(&format!("Q{i}"), 1);
    }
    let disjoint = if k > 1 {
        union(disjoint)
    } else {
        q(1).minus(q(1))
    };
    query
        .with_base("NODES", 1)
        .with_base("EDGES", 2)
        .with_let("FAIL_DISJOINT", disjoint)
        .with_let("FAIL_COVER", cover)
        .with_let(
            "FAIL_PARTITION",
            AlgebraExpr::let_ref("FAIL_DISJOINT").union(AlgebraExpr::let_ref("FAIL_COVER")),
        )
        .with_let("FAIL_COLORING", first(monochrome))
}

/// Guess `N`; N is an independent set of NODES with `|N| >= |K|`.
pub fn independent_set() -> NpAlgQuery {
    let size = sugar_ok(sugar::fail_size(SizeCmp::Geq, "F", g("N"), 1, b("K"), 1));
    NpAlgQuery::new(union(vec![
        g("N").minus(b("NODES")),
        first(g("N").product(g("N")).intersect(b("EDGES"))),
        size.expr,
    ]))
    .guess("N", 1)
    .with_guesses(size.aux)
    .with_base("NODES", 1)
    .with_base("EDGES", 2)
    .with_base("K", 1)
}

/// Guess `C`; every two distinct nodes of C are linked and `|C| >= |K|`.
pub fn clique() -> NpAlgQuery {
    let size = sugar_ok(sugar::fail_size(SizeCmp::Geq, "F", g("C"), 1, b("K"), 1));
    NpAlgQuery::new(union(vec![
        g("C").minus(b("NODES")),
        first(g("C").product(g("C")).select(Pred::cols(1, CmpOp::Ne, 2)).minus(b("EDGES"))),
        size.expr,
    ]))
    .guess("C", 1)
    .with_guesses(size.aux)
    .with_base("NODES", 1)
    .with_base("EDGES", 2)
    .with_base("K", 1)
}

/// Guess `SUCC`; it is the successor relation of a total order of NODES
/// and every step follows an edge.
pub fn hamiltonian_path() -> NpAlgQuery {
    let succ = sugar_ok(sugar::fail_successor("SUCC", b("NODES"), 1, "LESS"));
    NpAlgQuery::new(succ.expr.union(first(g("SUCC").minus(b("EDGES")))))
        .guess("SUCC", 2)
        .with_guesses(succ.aux)
        .with_base("NODES", 1)
        .with_base("EDGES", 2)
}

/// Guess `CL`, a transitive relation containing EDGES; some such CL avoids
/// every pair of PAIR iff no pair is in the transitive closure.
pub fn unreachable() -> NpAlgQuery {
    let composed = g("CL")
        .product(g("CL"))
        .select(Pred::cols(2, CmpOp::Eq, 3))
        .project_pos([1, 4]);
    NpAlgQuery::new(union(vec![
        first(b("EDGES").minus(g("CL"))),
        first(composed.minus(g("CL"))),
        first(b("PAIR").intersect(g("CL"))),
    ]))
    .guess("CL", 2)
    .with_base("EDGES", 2)
    .with_base("PAIR", 2)
}

/// Guess `T`, the true variables; every clause of CLAUSE has a satisfied
/// literal in POS(clause, var) or NEG(clause, var).
pub fn satisfiability() -> NpAlgQuery {
    let hits = |lits: AlgebraExpr| lits.product(g("T")).select(Pred::cols(2, CmpOp::Eq, 3));
    let by_pos = first(hits(b("POS")));
    let by_neg = first(b("NEG").minus(hits(b("NEG")).project_pos([1, 2])));
    NpAlgQuery::new(g("T").minus(b("VARS")).union(b("CLAUSE").minus(by_pos.union(by_neg))))
        .guess("T", 1)
        .with_base("VARS", 1)
        .with_base("CLAUSE", 1)
        .with_base("POS", 2)
        .with_base("NEG", 2)
}

/// Guess `P`, a fixpoint-free symmetric total function on R, which pairs
/// up the elements of R.
pub fn evenness() -> NpAlgQuery {
    let f = |kind| sugar_ok(sugar::fail_function(kind, g("P"), b("R"), b("R"), 1, 1));
    NpAlgQuery::new(union(vec![
        f(FunctionKind::Function),
        f(FunctionKind::Total),
        first(g("P").select(Pred::cols(1, CmpOp::Eq, 2))),
        first(g("P").minus(g("P").project_pos([2, 1]))),
    ]))
    .guess("P", 2)
    .with_base("R", 1)
}

fn complement(e: AlgebraExpr, k: usize) -> AlgebraExpr {
    sugar_ok(sugar::complement(e, k))
}

/// Guess `C`; every edge joins C and its complement.
pub fn two_coloring() -> NpAlgQuery {
    let c = g("C");
    let not_c = complement(c.clone(), 1);
    let phi = complement(b("EDGES"), 2)
        .union(c.clone().product(not_c.clone()))
        .union(not_c.product(c));
    NpAlgQuery::new(AlgebraExpr::dom().product(AlgebraExpr::dom()).minus(phi))
        .guess("C", 1)
        .with_base("EDGES", 2)
}

/// Guess `P`; P and its complement both induce complete subgraphs.
pub fn two_cliques() -> NpAlgQuery {
    let p = g("P");
    let not_p = complement(p.clone(), 1);
    let diagonal = AlgebraExpr::dom_power(2).select(Pred::cols(1, CmpOp::Eq, 2));
    let phi = not_p
        .clone()
        .product(p.clone())
        .union(p.product(not_p))
        .union(b("EDGES"))
        .union(diagonal);
    NpAlgQuery::new(AlgebraExpr::dom().product(AlgebraExpr::dom()).minus(phi))
        .guess("P", 1)
        .with_base("EDGES", 2)
}

/// Guess `Q`; for some `x1 ∈ Q` and `x2 ∉ Q` no edge leaves Q or enters
/// it, so the graph with symmetric EDGES is disconnected.
pub fn disconnectivity() -> NpAlgQuery {
    let q = g("Q");
    let not_q = complement(q.clone(), 1);
    let d2 = || AlgebraExpr::dom_power(2);
    let closed = complement(b("EDGES"), 2)
        .union(q.clone().product(q.clone()))
        .union(not_q.clone().product(not_q.clone()));
    let phi = q.product(not_q).product(d2()).intersect(d2().product(closed));
    let x = phi.divide(AlgebraExpr::Rename {
        alias: None,
        names: vec!["Y1".into(), "Y2".into()],
        input: Box::new(d2()),
    });
    NpAlgQuery::new(sugar::empty(x))
        .guess("Q", 1)
        .with_base("EDGES", 2)
}

/// Builders of the fixture query files, keyed by file stem.
pub fn query_builders() -> Vec<(&'static str, NpAlgQuery)> {
    vec![
        ("coloring-3", k_coloring(3)),
        ("independent-set", independent_set()),
        ("clique", clique()),
        ("hamiltonian-path", hamiltonian_path()),
        ("unreachable", unreachable()),
        ("satisfiability", satisfiability()),
        ("evenness", evenness()),
        ("two-coloring", two_coloring()),
        ("two-cliques", two_cliques()),
        ("disconnectivity", disconnectivity()),
    ]
}
