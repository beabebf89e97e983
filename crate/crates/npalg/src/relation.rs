//! Relations, databases, and the relational-algebra evaluator.
//!
//! Relations have set semantics. Attributes can be addressed by position
//! (`$1`, 1-based), by name (`from`) or by qualified name (`EDGES.from`).
//! `DOM^k` is never materialised when it appears on the left of a difference
//! or under a selection; those cases stream over the sorted active domain.

use std::collections::BTreeMap;

use rustc_hash::{FxHashMap, FxHashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// A scalar value stored in a relation.
///
/// The derived order (integers, then texts, then symbols) is only used to
/// make iteration deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Int(i64),
    Text(Arc<str>),
    Sym(Arc<str>),
}

impl Constant {
    pub fn int(v: i64) -> Self {
        Constant::Int(v)
    }

    pub fn sym(s: &str) -> Self {
        Constant::Sym(Arc::from(s))
    }

    pub fn text(s: &str) -> Self {
        Constant::Text(Arc::from(s))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Constant::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Constant::Int(_) => None,
            Constant::Text(s) | Constant::Sym(s) => Some(s),
        }
    }
}

impl From<i64> for Constant {
    fn from(v: i64) -> Self {
        Constant::Int(v)
    }
}

impl From<&str> for Constant {
    fn from(s: &str) -> Self {
        Constant::sym(s)
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(v) => write!(f, "{v}"),
            Constant::Text(s) => write!(f, "{s:?}"),
            Constant::Sym(s) => write!(f, "{s}"),
        }
    }
}

pub type Tuple = Vec<Constant>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("unknown base relation `{0}`")]
    UnknownRelation(String),
    #[error("guessed relation `{0}` has no extension")]
    UnknownGuess(String),
    #[error("unknown named expression `{0}`")]
    UnknownLet(String),
    #[error("arity mismatch in {op}: {left} vs {right}")]
    ArityMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("ambiguous attribute `{0}`")]
    AmbiguousAttribute(String),
    #[error("attribute position ${pos} out of range for arity {arity}")]
    PositionOutOfRange { pos: usize, arity: usize },
    #[error("DOM power must be at least 1, got {0}")]
    BadDomPower(usize),
    #[error("division by an empty relation")]
    EmptyDivisor,
    #[error("division needs arity(dividend) > arity(divisor) >= 1, got {dividend} and {divisor}")]
    DivideArity { dividend: usize, divisor: usize },
    #[error("tuple of arity {got} inserted into relation of arity {expected}")]
    TupleArity { expected: usize, got: usize },
    #[error("rename lists {names} names for arity {arity}")]
    RenameArity { names: usize, arity: usize },
}

type Result<T> = std::result::Result<T, AlgebraError>;

/// One column of a schema. Both parts are optional: `DOM^k` columns are
/// anonymous and are addressable only by position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Attr {
    pub qualifier: Option<Arc<str>>,
    pub name: Option<Arc<str>>,
}

impl Attr {
    pub fn named(qualifier: Option<&str>, name: &str) -> Self {
        Attr {
            qualifier: qualifier.map(Arc::from),
            name: Some(Arc::from(name)),
        }
    }

    pub fn anonymous() -> Self {
        Attr::default()
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.qualifier, &self.name) {
            (Some(q), Some(n)) => write!(f, "{q}.{n}"),
            (None, Some(n)) => write!(f, "{n}"),
            (Some(q), None) => write!(f, "{q}.?"),
            (None, None) => write!(f, "?"),
        }
    }
}

/// Reference to an attribute inside a predicate or projection list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttrRef {
    /// 1-based position.
    Pos(usize),
    Named {
        qualifier: Option<String>,
        name: String,
    },
}

impl AttrRef {
    pub fn pos(i: usize) -> Self {
        AttrRef::Pos(i)
    }

    pub fn name(name: &str) -> Self {
        AttrRef::Named {
            qualifier: None,
            name: name.to_string(),
        }
    }

    pub fn qualified(qualifier: &str, name: &str) -> Self {
        AttrRef::Named {
            qualifier: Some(qualifier.to_string()),
            name: name.to_string(),
        }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrRef::Pos(i) => write!(f, "${i}"),
            AttrRef::Named {
                qualifier: Some(q),
                name,
            } => write!(f, "{q}.{name}"),
            AttrRef::Named {
                qualifier: None,
                name,
            } => write!(f, "{name}"),
        }
    }
}

impl FromStr for AttrRef {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix('$') {
            return match rest.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(AttrRef::Pos(i)),
                _ => Err(AlgebraError::UnknownAttribute(s.to_string())),
            };
        }
        match s.split_once('.') {
            Some((q, n)) if !q.is_empty() && !n.is_empty() => Ok(AttrRef::qualified(q, n)),
            None if !s.is_empty() => Ok(AttrRef::name(s)),
            _ => Err(AlgebraError::UnknownAttribute(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Schema(pub Vec<Attr>);

impl Schema {
    pub fn anonymous(arity: usize) -> Self {
        Schema(vec![Attr::anonymous(); arity])
    }

    pub fn named(qualifier: Option<&str>, names: &[&str]) -> Self {
        Schema(names.iter().map(|n| Attr::named(qualifier, n)).collect())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn attrs(&self) -> &[Attr] {
        &self.0
    }

    /// Resolve a reference to a 0-based column index.
    pub fn resolve(&self, r: &AttrRef) -> Result<usize> {
        match r {
            AttrRef::Pos(i) => {
                if *i >= 1 && *i <= self.arity() {
                    Ok(i - 1)
                } else {
                    Err(AlgebraError::PositionOutOfRange {
                        pos: *i,
                        arity: self.arity(),
                    })
                }
            }
            AttrRef::Named { qualifier, name } => {
                let mut found = None;
                for (i, a) in self.0.iter().enumerate() {
                    let name_ok = a.name.as_deref() == Some(name.as_str());
                    let qual_ok = match qualifier {
                        Some(q) => a.qualifier.as_deref() == Some(q.as_str()),
                        None => true,
                    };
                    if name_ok && qual_ok {
                        if found.is_some() {
                            return Err(AlgebraError::AmbiguousAttribute(r.to_string()));
                        }
                        found = Some(i);
                    }
                }
                found.ok_or_else(|| AlgebraError::UnknownAttribute(r.to_string()))
            }
        }
    }

    pub(crate) fn concat(&self, other: &Schema) -> Schema {
        let mut attrs = self.0.clone();
        attrs.extend(other.0.iter().cloned());
        Schema(attrs)
    }

    /// Schema of a set operator: the left schema, with anonymous columns
    /// taking the corresponding attribute of the right operand. This is what
    /// names the columns of `DOM^k - R` after `R`.
    pub(crate) fn merge_for_set_op(&self, other: &Schema) -> Schema {
        Schema(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(l, r)| if l.name.is_none() { r.clone() } else { l.clone() })
                .collect(),
        )
    }
}

/// A finite relation with set semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    tuples: Arc<FxHashSet<Tuple>>,
}

impl Relation {
    pub fn empty(schema: Schema) -> Self {
        Relation {
            schema,
            tuples: Arc::new(FxHashSet::default()),
        }
    }

    pub fn with_arity(arity: usize) -> Self {
        Relation::empty(Schema::anonymous(arity))
    }

    pub fn from_tuples<I>(schema: Schema, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Tuple>,
    {
        let mut rel = Relation::empty(schema);
        for t in tuples {
            rel.insert(t)?;
        }
        Ok(rel)
    }

    /// Unchecked constructor used by operators that already guarantee arity.
    fn from_set(schema: Schema, tuples: FxHashSet<Tuple>) -> Self {
        Relation {
            schema,
            tuples: Arc::new(tuples),
        }
    }

    /// Convenience constructor for unary relations.
    pub fn unary<I, C>(schema: Schema, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: Into<Constant>,
    {
        Relation::from_tuples(schema, values.into_iter().map(|c| vec![c.into()]))
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.arity()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Constant]) -> bool {
        self.tuples.contains(t)
    }

    pub fn insert(&mut self, t: Tuple) -> Result<bool> {
        if t.len() != self.arity() {
            return Err(AlgebraError::TupleArity {
                expected: self.arity(),
                got: t.len(),
            });
        }
        Ok(Arc::make_mut(&mut self.tuples).insert(t))
    }

    /// Unordered iteration; use [`Relation::sorted`] for output.
    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    /// Tuples in the total order of [`Constant`].
    pub fn sorted(&self) -> Vec<&Tuple> {
        let mut v: Vec<&Tuple> = self.tuples.iter().collect();
        v.sort();
        v
    }

    pub fn sorted_owned(&self) -> Vec<Tuple> {
        self.sorted().into_iter().cloned().collect()
    }

    /// True when both relations hold the same tuples, whatever their schemas.
    pub fn same_tuples(&self, other: &Relation) -> bool {
        self.tuples == other.tuples
    }

    pub fn with_schema(&self, schema: Schema) -> Result<Relation> {
        if schema.arity() != self.arity() {
            return Err(AlgebraError::RenameArity {
                names: schema.arity(),
                arity: self.arity(),
            });
        }
        Ok(Relation {
            schema,
            tuples: Arc::clone(&self.tuples),
        })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.sorted().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "(")?;
            for (j, c) in t.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        write!(f, "}}")
    }
}

/// An immutable collection of named base relations together with their
/// active domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
    keys: BTreeMap<String, usize>,
    dom: Vec<Constant>,
    dom_set: FxHashSet<Constant>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn from_relations<I, S>(relations: I) -> Self
    where
        I: IntoIterator<Item = (S, Relation)>,
        S: Into<String>,
    {
        let relations = relations
            .into_iter()
            .map(|(n, r)| (n.into(), r))
            .collect::<BTreeMap<_, _>>();
        let mut db = Database {
            relations,
            ..Default::default()
        };
        db.recompute_dom();
        db
    }

    /// Returns a new database with `name` bound to `rel` (replacing any
    /// previous binding).
    pub fn with_relation(mut self, name: &str, rel: Relation) -> Self {
        self.relations.insert(name.to_string(), rel);
        self.recompute_dom();
        self
    }

    /// Declares the key column (0-based) of a relation.
    pub fn with_key(mut self, name: &str, column: usize) -> Self {
        self.keys.insert(name.to_string(), column);
        self
    }

    fn recompute_dom(&mut self) {
        let mut set = FxHashSet::default();
        for rel in self.relations.values() {
            for t in rel.iter() {
                for c in t {
                    set.insert(c.clone());
                }
            }
        }
        let mut dom: Vec<Constant> = set.iter().cloned().collect();
        dom.sort();
        self.dom = dom;
        self.dom_set = set;
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&String, &Relation)> {
        self.relations.iter()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    /// Key column of a relation; the first column unless declared otherwise.
    pub fn key_column(&self, name: &str) -> usize {
        self.keys.get(name).copied().unwrap_or(0)
    }

    pub fn declared_keys(&self) -> &BTreeMap<String, usize> {
        &self.keys
    }

    /// The active domain, sorted.
    pub fn dom(&self) -> &[Constant] {
        &self.dom
    }

    pub fn in_dom(&self, c: &Constant) -> bool {
        self.dom_set.contains(c)
    }
}

/// The unary relation of all constants occurring in the base relations.
pub fn active_domain(db: &Database) -> Relation {
    Relation::from_set(
        Schema::anonymous(1),
        db.dom().iter().map(|c| vec![c.clone()]).collect(),
    )
}

/// `DOM^k` as a virtual relation: membership tests and ordered streaming
/// without materialisation.
#[derive(Clone, Copy, Debug)]
pub struct DomPower<'a> {
    db: &'a Database,
    k: usize,
}

impl<'a> DomPower<'a> {
    pub fn arity(&self) -> usize {
        self.k
    }

    /// Number of tuples, saturating at `u128::MAX`.
    pub fn len(&self) -> u128 {
        (self.db.dom().len() as u128)
            .checked_pow(self.k as u32)
            .unwrap_or(u128::MAX)
    }

    pub fn is_empty(&self) -> bool {
        self.db.dom().is_empty()
    }

    pub fn contains(&self, t: &[Constant]) -> bool {
        t.len() == self.k && t.iter().all(|c| self.db.in_dom(c))
    }

    /// Lexicographic enumeration over the sorted active domain.
    pub fn iter(&self) -> DomPowerIter<'a> {
        DomPowerIter::new(self.db.dom(), self.k)
    }

    pub fn materialize(&self) -> Relation {
        Relation::from_set(Schema::anonymous(self.k), self.iter().collect())
    }
}

pub fn dom_power(db: &Database, k: usize) -> Result<DomPower<'_>> {
    if k < 1 {
        return Err(AlgebraError::BadDomPower(k));
    }
    Ok(DomPower { db, k })
}

/// Odometer over `values^k` in lexicographic order.
pub struct DomPowerIter<'a> {
    values: &'a [Constant],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> DomPowerIter<'a> {
    pub fn new(values: &'a [Constant], k: usize) -> Self {
        DomPowerIter {
            values,
            idx: vec![0; k],
            done: values.is_empty() && k > 0,
        }
    }
}

impl Iterator for DomPowerIter<'_> {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        if self.done {
            return None;
        }
        let t = self.idx.iter().map(|&i| self.values[i].clone()).collect();
        // advance, rightmost fastest
        let mut pos = self.idx.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.idx[pos] += 1;
            if self.idx[pos] < self.values.len() {
                break;
            }
            self.idx[pos] = 0;
        }
        Some(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, a: &Constant, b: &Constant) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" | "<>" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Attr(AttrRef),
    Const(Constant),
}

impl Operand {
    pub fn pos(i: usize) -> Self {
        Operand::Attr(AttrRef::Pos(i))
    }
}

impl From<AttrRef> for Operand {
    fn from(a: AttrRef) -> Self {
        Operand::Attr(a)
    }
}

impl From<Constant> for Operand {
    fn from(c: Constant) -> Self {
        Operand::Const(c)
    }
}

/// Boolean combination of comparison atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    True,
    Cmp(Operand, CmpOp, Operand),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
}

impl Pred {
    pub fn cmp(a: impl Into<Operand>, op: CmpOp, b: impl Into<Operand>) -> Pred {
        Pred::Cmp(a.into(), op, b.into())
    }

    /// `$i op $j`.
    pub fn cols(i: usize, op: CmpOp, j: usize) -> Pred {
        Pred::Cmp(Operand::pos(i), op, Operand::pos(j))
    }

    /// `$i op c`.
    pub fn col_const(i: usize, op: CmpOp, c: Constant) -> Pred {
        Pred::Cmp(Operand::pos(i), op, Operand::Const(c))
    }

    pub fn and(preds: Vec<Pred>) -> Pred {
        match preds.len() {
            0 => Pred::True,
            1 => preds.into_iter().next().unwrap(),
            _ => Pred::And(preds),
        }
    }

    pub fn or(preds: Vec<Pred>) -> Pred {
        match preds.len() {
            1 => preds.into_iter().next().unwrap(),
            _ => Pred::Or(preds),
        }
    }

    pub(crate) fn compile(&self, schema: &Schema) -> Result<CompiledPred> {
        Ok(match self {
            Pred::True => CompiledPred::True,
            Pred::Cmp(a, op, b) => {
                let c = |o: &Operand| -> Result<Slot> {
                    Ok(match o {
                        Operand::Attr(r) => Slot::Col(schema.resolve(r)?),
                        Operand::Const(c) => Slot::Const(c.clone()),
                    })
                };
                CompiledPred::Cmp(c(a)?, *op, c(b)?)
            }
            Pred::And(ps) => CompiledPred::And(
                ps.iter()
                    .map(|p| p.compile(schema))
                    .collect::<Result<_>>()?,
            ),
            Pred::Or(ps) => CompiledPred::Or(
                ps.iter()
                    .map(|p| p.compile(schema))
                    .collect::<Result<_>>()?,
            ),
            Pred::Not(p) => CompiledPred::Not(Box::new(p.compile(schema)?)),
        })
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Slot {
    Col(usize),
    Const(Constant),
}

impl Slot {
    fn get<'t>(&'t self, t: &'t [Constant]) -> &'t Constant {
        match self {
            Slot::Col(i) => &t[*i],
            Slot::Const(c) => c,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CompiledPred {
    True,
    Cmp(Slot, CmpOp, Slot),
    And(Vec<CompiledPred>),
    Or(Vec<CompiledPred>),
    Not(Box<CompiledPred>),
}

impl CompiledPred {
    pub(crate) fn eval(&self, t: &[Constant]) -> bool {
        match self {
            CompiledPred::True => true,
            CompiledPred::Cmp(a, op, b) => op.apply(a.get(t), b.get(t)),
            CompiledPred::And(ps) => ps.iter().all(|p| p.eval(t)),
            CompiledPred::Or(ps) => ps.iter().any(|p| p.eval(t)),
            CompiledPred::Not(p) => !p.eval(t),
        }
    }

    /// Top-level `$i = $j` conjuncts with `i` on the left of `split` and `j`
    /// on the right, as (left column, right column) pairs.
    fn equi_pairs(&self, split: usize) -> Vec<(usize, usize)> {
        let atoms: Vec<&CompiledPred> = match self {
            CompiledPred::And(ps) => ps.iter().collect(),
            other => vec![other],
        };
        atoms
            .into_iter()
            .filter_map(|p| match p {
                CompiledPred::Cmp(Slot::Col(a), CmpOp::Eq, Slot::Col(b)) => {
                    if *a < split && *b >= split {
                        Some((*a, *b - split))
                    } else if *b < split && *a >= split {
                        Some((*b, *a - split))
                    } else {
                        None
                    }
                }
                _ => None,
            })
            .collect()
    }
}

/// Relational-algebra expression over base relations, guessed relations,
/// named intermediate results and powers of the active domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AlgebraExpr {
    Base(String),
    Guessed(String),
    /// Reference to an enclosing [`AlgebraExpr::Let`] or to a named
    /// expression of a query.
    LetRef(String),
    /// `DOM^k`.
    DomPower(usize),
    Select(Pred, Box<AlgebraExpr>),
    Project(Vec<AttrRef>, Box<AlgebraExpr>),
    Product(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Union(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Difference(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Intersect(Box<AlgebraExpr>, Box<AlgebraExpr>),
    SymDiff(Box<AlgebraExpr>, Box<AlgebraExpr>),
    /// Positional division: the divisor matches the trailing columns.
    Divide(Box<AlgebraExpr>, Box<AlgebraExpr>),
    /// Theta join: `σ_cond(A × B)`, `$i` ranging over the concatenated schema.
    Join(Pred, Box<AlgebraExpr>, Box<AlgebraExpr>),
    /// Equi-join on equally named attributes, keeping one copy of each.
    NaturalJoin(Box<AlgebraExpr>, Box<AlgebraExpr>),
    /// Re-qualifies every column with `alias` (if given) and renames the
    /// columns positionally (if `names` is non-empty).
    Rename {
        alias: Option<String>,
        names: Vec<String>,
        input: Box<AlgebraExpr>,
    },
    Let {
        name: String,
        value: Box<AlgebraExpr>,
        body: Box<AlgebraExpr>,
    },
}

impl AlgebraExpr {
    pub fn base(name: &str) -> Self {
        AlgebraExpr::Base(name.to_string())
    }

    pub fn guessed(name: &str) -> Self {
        AlgebraExpr::Guessed(name.to_string())
    }

    pub fn let_ref(name: &str) -> Self {
        AlgebraExpr::LetRef(name.to_string())
    }

    /// The unary active domain, `DOM`.
    pub fn dom() -> Self {
        AlgebraExpr::DomPower(1)
    }

    pub fn dom_power(k: usize) -> Self {
        AlgebraExpr::DomPower(k)
    }

    pub fn select(self, p: Pred) -> Self {
        AlgebraExpr::Select(p, Box::new(self))
    }

    pub fn project(self, attrs: Vec<AttrRef>) -> Self {
        AlgebraExpr::Project(attrs, Box::new(self))
    }

    /// Projection onto 1-based positions.
    pub fn project_pos(self, cols: impl IntoIterator<Item = usize>) -> Self {
        self.project(cols.into_iter().map(AttrRef::Pos).collect())
    }

    pub fn product(self, other: Self) -> Self {
        AlgebraExpr::Product(Box::new(self), Box::new(other))
    }

    pub fn union(self, other: Self) -> Self {
        AlgebraExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: Self) -> Self {
        AlgebraExpr::Difference(Box::new(self), Box::new(other))
    }

    pub fn intersect(self, other: Self) -> Self {
        AlgebraExpr::Intersect(Box::new(self), Box::new(other))
    }

    pub fn sym_diff(self, other: Self) -> Self {
        AlgebraExpr::SymDiff(Box::new(self), Box::new(other))
    }

    pub fn divide(self, other: Self) -> Self {
        AlgebraExpr::Divide(Box::new(self), Box::new(other))
    }

    pub fn join(self, cond: Pred, other: Self) -> Self {
        AlgebraExpr::Join(cond, Box::new(self), Box::new(other))
    }

    pub fn natural_join(self, other: Self) -> Self {
        AlgebraExpr::NaturalJoin(Box::new(self), Box::new(other))
    }

    pub fn rename(self, alias: Option<&str>, names: &[&str]) -> Self {
        AlgebraExpr::Rename {
            alias: alias.map(str::to_string),
            names: names.iter().map(|s| s.to_string()).collect(),
            input: Box::new(self),
        }
    }

    pub fn alias(self, alias: &str) -> Self {
        self.rename(Some(alias), &[])
    }

    /// Left-folded union of a non-empty list.
    pub fn union_all(exprs: Vec<AlgebraExpr>) -> Option<Self> {
        exprs.into_iter().reduce(|a, b| a.union(b))
    }

    /// Left-folded product of a non-empty list.
    pub fn product_all(exprs: Vec<AlgebraExpr>) -> Option<Self> {
        exprs.into_iter().reduce(|a, b| a.product(b))
    }

    /// Direct sub-expressions, in order.
    pub fn children(&self) -> Vec<&AlgebraExpr> {
        use AlgebraExpr::*;
        match self {
            Base(_) | Guessed(_) | LetRef(_) | DomPower(_) => vec![],
            Select(_, e) | Project(_, e) | Rename { input: e, .. } => vec![e],
            Product(a, b)
            | Union(a, b)
            | Difference(a, b)
            | Intersect(a, b)
            | SymDiff(a, b)
            | Divide(a, b)
            | Join(_, a, b)
            | NaturalJoin(a, b) => vec![a, b],
            Let { value, body, .. } => vec![value, body],
        }
    }

    /// Calls `f` on every node, pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a AlgebraExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Names of guessed relations referenced anywhere in the expression.
    pub fn guessed_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let AlgebraExpr::Guessed(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn base_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let AlgebraExpr::Base(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn mentions_guess(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, AlgebraExpr::Guessed(_)) {
                found = true;
            }
        });
        found
    }

    /// Replaces every free [`AlgebraExpr::LetRef`] bound in `env`.
    pub fn substitute(&self, env: &[(String, AlgebraExpr)]) -> AlgebraExpr {
        self.subst_inner(env, &mut Vec::new())
    }

    fn subst_inner(&self, env: &[(String, AlgebraExpr)], bound: &mut Vec<String>) -> AlgebraExpr {
        use AlgebraExpr::*;
        let b = |e: &AlgebraExpr, bound: &mut Vec<String>| Box::new(e.subst_inner(env, bound));
        match self {
            LetRef(n) if !bound.contains(n) => match env.iter().rev().find(|(k, _)| k == n) {
                Some((_, e)) => e.clone(),
                None => self.clone(),
            },
            Base(_) | Guessed(_) | LetRef(_) | DomPower(_) => self.clone(),
            Select(p, e) => Select(p.clone(), b(e, bound)),
            Project(a, e) => Project(a.clone(), b(e, bound)),
            Product(x, y) => Product(b(x, bound), b(y, bound)),
            Union(x, y) => Union(b(x, bound), b(y, bound)),
            Difference(x, y) => Difference(b(x, bound), b(y, bound)),
            Intersect(x, y) => Intersect(b(x, bound), b(y, bound)),
            SymDiff(x, y) => SymDiff(b(x, bound), b(y, bound)),
            Divide(x, y) => Divide(b(x, bound), b(y, bound)),
            Join(p, x, y) => Join(p.clone(), b(x, bound), b(y, bound)),
            NaturalJoin(x, y) => NaturalJoin(b(x, bound), b(y, bound)),
            Rename { alias, names, input } => Rename {
                alias: alias.clone(),
                names: names.clone(),
                input: b(input, bound),
            },
            Let { name, value, body } => {
                let value = b(value, bound);
                bound.push(name.clone());
                let body = b(body, bound);
                bound.pop();
                Let {
                    name: name.clone(),
                    value,
                    body,
                }
            }
        }
    }

    /// Statically derived arity, given arities for base and guessed
    /// relations and for named expressions. `None` when some leaf is
    /// unknown or the expression is ill-formed.
    pub fn static_arity(&self, leaf: &dyn Fn(&AlgebraExpr) -> Option<usize>) -> Option<usize> {
        self.arity_in(leaf, &mut Vec::new())
    }

    fn arity_in(
        &self,
        leaf: &dyn Fn(&AlgebraExpr) -> Option<usize>,
        env: &mut Vec<(String, usize)>,
    ) -> Option<usize> {
        use AlgebraExpr::*;
        match self {
            Base(_) | Guessed(_) => leaf(self),
            LetRef(n) => env
                .iter()
                .rev()
                .find(|(k, _)| k == n)
                .map(|(_, a)| *a)
                .or_else(|| leaf(self)),
            DomPower(k) => (*k >= 1).then_some(*k),
            Select(_, e) | Rename { input: e, .. } => e.arity_in(leaf, env),
            Project(attrs, e) => {
                e.arity_in(leaf, env)?;
                Some(attrs.len())
            }
            Product(a, b) | Join(_, a, b) => Some(a.arity_in(leaf, env)? + b.arity_in(leaf, env)?),
            Union(a, b) | Difference(a, b) | Intersect(a, b) | SymDiff(a, b) => {
                let (x, y) = (a.arity_in(leaf, env)?, b.arity_in(leaf, env)?);
                (x == y).then_some(x)
            }
            Divide(a, b) => {
                let (x, y) = (a.arity_in(leaf, env)?, b.arity_in(leaf, env)?);
                (x > y && y >= 1).then_some(x - y)
            }
            // shared columns depend on names; not derivable without schemas
            NaturalJoin(..) => None,
            Let { name, value, body } => {
                let a = value.arity_in(leaf, env)?;
                env.push((name.clone(), a));
                let r = body.arity_in(leaf, env);
                env.pop();
                r
            }
        }
    }
}

/// Evaluates `expr` against `db`, taking guessed relations from `ext`.
pub fn evaluate(
    expr: &AlgebraExpr,
    db: &Database,
    ext: &BTreeMap<String, Relation>,
) -> Result<Relation> {
    Evaluator::new(db, ext).eval(expr)
}

/// Evaluation context: database, extensions of guessed relations, a stack
/// of named intermediate results and named expressions evaluated on first
/// use.
pub struct Evaluator<'a> {
    db: &'a Database,
    ext: &'a BTreeMap<String, Relation>,
    env: Vec<(String, Relation)>,
    lazy: Vec<(String, &'a AlgebraExpr, Option<Relation>)>,
    visible: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(db: &'a Database, ext: &'a BTreeMap<String, Relation>) -> Self {
        Evaluator {
            db,
            ext,
            env: Vec::new(),
            lazy: Vec::new(),
            visible: 0,
        }
    }

    /// Binds a named result visible to later evaluations.
    pub fn bind(&mut self, name: &str, rel: Relation) {
        self.env.push((name.to_string(), rel));
    }

    /// Declares a named expression, evaluated at most once and only when
    /// referenced. Its own references see the declarations made before it.
    pub fn declare(&mut self, name: &str, expr: &'a AlgebraExpr) {
        self.lazy.push((name.to_string(), expr, None));
        self.visible = self.lazy.len();
    }

    fn lookup(&mut self, name: &str) -> Result<Relation> {
        if let Some((_, r)) = self.env.iter().rev().find(|(k, _)| k == name) {
            return Ok(r.clone());
        }
        let j = self.lazy[..self.visible]
            .iter()
            .rposition(|(k, _, _)| k == name)
            .ok_or_else(|| AlgebraError::UnknownLet(name.to_string()))?;
        if let Some(r) = &self.lazy[j].2 {
            return Ok(r.clone());
        }
        let expr = self.lazy[j].1;
        let env = std::mem::take(&mut self.env);
        let visible = std::mem::replace(&mut self.visible, j);
        let r = self.eval(expr);
        self.env = env;
        self.visible = visible;
        let r = r?;
        self.lazy[j].2 = Some(r.clone());
        Ok(r)
    }

    pub fn eval(&mut self, expr: &AlgebraExpr) -> Result<Relation> {
        use AlgebraExpr::*;
        match expr {
            Base(n) => {
                let rel = self
                    .db
                    .get(n)
                    .ok_or_else(|| AlgebraError::UnknownRelation(n.clone()))?;
                // base attributes are qualified by the relation name
                let schema = Schema(
                    rel.schema()
                        .attrs()
                        .iter()
                        .map(|a| Attr {
                            qualifier: a.qualifier.clone().or_else(|| Some(Arc::from(n.as_str()))),
                            name: a.name.clone(),
                        })
                        .collect(),
                );
                rel.with_schema(schema)
            }
            Guessed(n) => {
                let rel = self
                    .ext
                    .get(n)
                    .ok_or_else(|| AlgebraError::UnknownGuess(n.clone()))?;
                let schema = Schema(
                    rel.schema()
                        .attrs()
                        .iter()
                        .map(|a| Attr {
                            qualifier: a.qualifier.clone().or_else(|| Some(Arc::from(n.as_str()))),
                            name: a.name.clone(),
                        })
                        .collect(),
                );
                rel.with_schema(schema)
            }
            LetRef(n) => self.lookup(n),
            DomPower(k) => Ok(dom_power(self.db, *k)?.materialize()),
            Select(p, e) => {
                if let DomPower(k) = **e {
                    let dp = dom_power(self.db, k)?;
                    let schema = Schema::anonymous(k);
                    let cp = p.compile(&schema)?;
                    return Ok(Relation::from_set(
                        schema,
                        dp.iter().filter(|t| cp.eval(t)).collect(),
                    ));
                }
                let r = self.eval(e)?;
                let cp = p.compile(r.schema())?;
                let tuples = r.iter().filter(|t| cp.eval(t)).cloned().collect();
                Ok(Relation::from_set(r.schema().clone(), tuples))
            }
            Project(attrs, e) => {
                let r = self.eval(e)?;
                let idx = attrs
                    .iter()
                    .map(|a| r.schema().resolve(a))
                    .collect::<Result<Vec<_>>>()?;
                let schema = Schema(idx.iter().map(|&i| r.schema().0[i].clone()).collect());
                let tuples = r
                    .iter()
                    .map(|t| idx.iter().map(|&i| t[i].clone()).collect())
                    .collect();
                Ok(Relation::from_set(schema, tuples))
            }
            Product(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                Ok(product(&ra, &rb))
            }
            Union(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                union(&ra, &rb)
            }
            Difference(a, b) => {
                if let DomPower(k) = **a {
                    // streaming complement, DOM^k is never materialised
                    let rb = self.eval(b)?;
                    check_arity("difference", k, rb.arity())?;
                    let dp = dom_power(self.db, k)?;
                    let schema = Schema::anonymous(k).merge_for_set_op(rb.schema());
                    return Ok(Relation::from_set(
                        schema,
                        dp.iter().filter(|t| !rb.contains(t)).collect(),
                    ));
                }
                let ra = self.eval(a)?;
                if let DomPower(k) = **b {
                    check_arity("difference", ra.arity(), k)?;
                    let dp = dom_power(self.db, k)?;
                    let tuples = ra.iter().filter(|t| !dp.contains(t)).cloned().collect();
                    return Ok(Relation::from_set(ra.schema().clone(), tuples));
                }
                let rb = self.eval(b)?;
                difference(&ra, &rb)
            }
            Intersect(a, b) => {
                if let DomPower(k) = **b {
                    let ra = self.eval(a)?;
                    check_arity("intersection", ra.arity(), k)?;
                    let dp = dom_power(self.db, k)?;
                    let tuples = ra.iter().filter(|t| dp.contains(t)).cloned().collect();
                    return Ok(Relation::from_set(ra.schema().clone(), tuples));
                }
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                intersect(&ra, &rb)
            }
            SymDiff(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                sym_diff(&ra, &rb)
            }
            Divide(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                divide(&ra, &rb)
            }
            Join(p, a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                theta_join(&ra, &rb, p)
            }
            NaturalJoin(a, b) => {
                let (ra, rb) = (self.eval(a)?, self.eval(b)?);
                natural_join(&ra, &rb)
            }
            Rename {
                alias,
                names,
                input,
            } => {
                let r = self.eval(input)?;
                if !names.is_empty() && names.len() != r.arity() {
                    return Err(AlgebraError::RenameArity {
                        names: names.len(),
                        arity: r.arity(),
                    });
                }
                let schema = Schema(
                    r.schema()
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
                r.with_schema(schema)
            }
            Let { name, value, body } => {
                let v = self.eval(value)?;
                self.env.push((name.clone(), v));
                let r = self.eval(body);
                self.env.pop();
                r
            }
        }
    }

    /// Emptiness test that stops early on unions and products.
    pub fn is_empty(&mut self, expr: &AlgebraExpr) -> Result<bool> {
        use AlgebraExpr::*;
        match expr {
            Union(a, b) => Ok(self.is_empty(a)? && self.is_empty(b)?),
            LetRef(n) if !self.env.iter().any(|(k, _)| k == n) => {
                let j = self.lazy[..self.visible]
                    .iter()
                    .rposition(|(k, _, _)| k == n)
                    .ok_or_else(|| AlgebraError::UnknownLet(n.to_string()))?;
                if let Some(r) = &self.lazy[j].2 {
                    return Ok(r.is_empty());
                }
                let inner = self.lazy[j].1;
                let env = std::mem::take(&mut self.env);
                let visible = std::mem::replace(&mut self.visible, j);
                let r = self.is_empty(inner);
                self.env = env;
                self.visible = visible;
                r
            }
            Project(_, e) | Rename { input: e, .. } => {
                // resolution errors must still surface
                if let Project(attrs, inner) = expr {
                    if attrs.iter().all(|a| matches!(a, AttrRef::Pos(_))) {
                        let r = self.eval(inner)?;
                        for a in attrs {
                            r.schema().resolve(a)?;
                        }
                        return Ok(r.is_empty());
                    }
                    return Ok(self.eval(expr)?.is_empty());
                }
                self.is_empty(e)
            }
            _ => Ok(self.eval(expr)?.is_empty()),
        }
    }
}

fn check_arity(op: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(AlgebraError::ArityMismatch { op, left, right });
    }
    Ok(())
}

pub fn product(a: &Relation, b: &Relation) -> Relation {
    let mut tuples = FxHashSet::with_capacity_and_hasher(a.len() * b.len(), Default::default());
    for x in a.iter() {
        for y in b.iter() {
            let mut t = Vec::with_capacity(x.len() + y.len());
            t.extend_from_slice(x);
            t.extend_from_slice(y);
            tuples.insert(t);
        }
    }
    Relation::from_set(a.schema().concat(b.schema()), tuples)
}

pub fn union(a: &Relation, b: &Relation) -> Result<Relation> {
    check_arity("union", a.arity(), b.arity())?;
    let mut tuples: FxHashSet<Tuple> = (*a.tuples).clone();
    tuples.extend(b.iter().cloned());
    Ok(Relation::from_set(
        a.schema().merge_for_set_op(b.schema()),
        tuples,
    ))
}

pub fn difference(a: &Relation, b: &Relation) -> Result<Relation> {
    check_arity("difference", a.arity(), b.arity())?;
    let tuples = a.iter().filter(|t| !b.contains(t)).cloned().collect();
    Ok(Relation::from_set(
        a.schema().merge_for_set_op(b.schema()),
        tuples,
    ))
}

pub fn intersect(a: &Relation, b: &Relation) -> Result<Relation> {
    check_arity("intersection", a.arity(), b.arity())?;
    let tuples = a.iter().filter(|t| b.contains(t)).cloned().collect();
    Ok(Relation::from_set(
        a.schema().merge_for_set_op(b.schema()),
        tuples,
    ))
}

/// `(A - B) ∪ (B - A)`.
pub fn sym_diff(a: &Relation, b: &Relation) -> Result<Relation> {
    check_arity("symmetric difference", a.arity(), b.arity())?;
    let mut tuples: FxHashSet<Tuple> = a.iter().filter(|t| !b.contains(t)).cloned().collect();
    tuples.extend(b.iter().filter(|t| !a.contains(t)).cloned());
    Ok(Relation::from_set(
        a.schema().merge_for_set_op(b.schema()),
        tuples,
    ))
}

/// `{t : (t,u) ∈ a for every u ∈ b}`, `b` matching the trailing columns of
/// `a`. An empty divisor is rejected.
pub fn divide(a: &Relation, b: &Relation) -> Result<Relation> {
    let (n, r) = (a.arity(), b.arity());
    if r < 1 || n <= r {
        return Err(AlgebraError::DivideArity {
            dividend: n,
            divisor: r,
        });
    }
    if b.is_empty() {
        return Err(AlgebraError::EmptyDivisor);
    }
    let d = n - r;
    let mut counts: FxHashMap<&[Constant], usize> = FxHashMap::default();
    for t in a.iter() {
        if b.contains(&t[d..]) {
            *counts.entry(&t[..d]).or_insert(0) += 1;
        }
    }
    let tuples = counts
        .into_iter()
        .filter(|(_, c)| *c == b.len())
        .map(|(p, _)| p.to_vec())
        .collect();
    Ok(Relation::from_set(
        Schema(a.schema().attrs()[..d].to_vec()),
        tuples,
    ))
}

pub fn theta_join(a: &Relation, b: &Relation, cond: &Pred) -> Result<Relation> {
    let schema = a.schema().concat(b.schema());
    let cp = cond.compile(&schema)?;
    let split = a.arity();
    let pairs = cp.equi_pairs(split);
    let mut tuples = FxHashSet::default();
    let mut buf = Vec::with_capacity(schema.arity());
    let mut emit = |x: &Tuple, y: &Tuple, tuples: &mut FxHashSet<Tuple>| {
        buf.clear();
        buf.extend_from_slice(x);
        buf.extend_from_slice(y);
        if cp.eval(&buf) {
            tuples.insert(buf.clone());
        }
    };
    if pairs.is_empty() {
        for x in a.iter() {
            for y in b.iter() {
                emit(x, y, &mut tuples);
            }
        }
    } else {
        let mut index: FxHashMap<Vec<&Constant>, Vec<&Tuple>> = FxHashMap::default();
        for y in b.iter() {
            let key = pairs.iter().map(|&(_, j)| &y[j]).collect();
            index.entry(key).or_default().push(y);
        }
        for x in a.iter() {
            let key: Vec<&Constant> = pairs.iter().map(|&(i, _)| &x[i]).collect();
            if let Some(ys) = index.get(&key) {
                for y in ys {
                    emit(x, y, &mut tuples);
                }
            }
        }
    }
    Ok(Relation::from_set(schema, tuples))
}

pub fn natural_join(a: &Relation, b: &Relation) -> Result<Relation> {
    let name_index = |s: &Schema| -> Result<FxHashMap<Arc<str>, usize>> {
        let mut m = FxHashMap::default();
        for (i, attr) in s.attrs().iter().enumerate() {
            if let Some(n) = &attr.name {
                if m.insert(n.clone(), i).is_some() {
                    return Err(AlgebraError::AmbiguousAttribute(n.to_string()));
                }
            }
        }
        Ok(m)
    };
    let (ia, ib) = (name_index(a.schema())?, name_index(b.schema())?);
    let mut shared: Vec<(usize, usize)> = ia
        .iter()
        .filter_map(|(n, &i)| ib.get(n).map(|&j| (i, j)))
        .collect();
    shared.sort();
    let keep_b: Vec<usize> = (0..b.arity())
        .filter(|j| !shared.iter().any(|&(_, s)| s == *j))
        .collect();
    let mut attrs = a.schema().attrs().to_vec();
    attrs.extend(keep_b.iter().map(|&j| b.schema().attrs()[j].clone()));
    let mut index: FxHashMap<Vec<&Constant>, Vec<&Tuple>> = FxHashMap::default();
    for y in b.iter() {
        let key = shared.iter().map(|&(_, j)| &y[j]).collect();
        index.entry(key).or_default().push(y);
    }
    let mut tuples = FxHashSet::default();
    for x in a.iter() {
        let key: Vec<&Constant> = shared.iter().map(|&(i, _)| &x[i]).collect();
        if let Some(ys) = index.get(&key) {
            for y in ys {
                let mut t = x.clone();
                t.extend(keep_b.iter().map(|&j| y[j].clone()));
                tuples.insert(t);
            }
        }
    }
    Ok(Relation::from_set(Schema(attrs), tuples))
}
