//! Translation of quantifier-free first-order formulas into relational
//! algebra, the NP-Alg query built from an existential second-order
//! sentence `∃S ∀X ∃Y φ(X, Y)`, and the query deciding 3-colorability of a
//! graph given succinctly as a boolean circuit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::guess::{ExactOptions, GuessDecl, NpAlgQuery};
use crate::relation::{
    AlgebraExpr, AttrRef, CmpOp, Constant, Database, DomPowerIter, Operand, Pred, Relation,
    Schema, Tuple,
};
use crate::sugar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` has arity {expected}, used with {got} arguments")]
    AtomArity {
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("formula without variables: {0}")]
    Ground(String),
    #[error("variable `{0}` is not bound by the quantifier prefix")]
    UnboundVariable(String),
    #[error("variable `{0}` is quantified twice")]
    DuplicateVariable(String),
    #[error("predicate `{0}` is declared twice")]
    DuplicatePredicate(String),
    #[error("sentence has no first-order variables")]
    NoVariables,
    #[error("circuit has no gates")]
    EmptyCircuit,
    #[error("gate {gate}: inputs must refer to earlier gates, got {b} and {c}")]
    ForwardReference { gate: usize, b: usize, c: usize },
    #[error("gate {gate}: NOT needs b = c, got {b} and {c}")]
    BadNot { gate: usize, b: usize, c: usize },
    #[error("gate {gate}: IN needs b = c = 0, got {b} and {c}")]
    BadInput { gate: usize, b: usize, c: usize },
    #[error("circuit has {got} input gates, expected 2n = {expected}")]
    InputCount { expected: usize, got: usize },
    #[error("n must be at least 1")]
    ZeroWidth,
    #[error("expected {expected} input bits, got {got}")]
    BitCount { expected: usize, got: usize },
    #[error("truth-table sweep over 2^{0} inputs is too large")]
    TooWide(usize),
    #[error("unknown gate kind `{0}`")]
    UnknownGate(String),
    #[error(transparent)]
    Sugar(#[from] sugar::SugarError),
}

type Result<T> = std::result::Result<T, TranslateError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(Constant),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Quantifier-free first-order formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FoFormula {
    Atom { pred: String, args: Vec<Term> },
    Eq(Term, Term),
    And(Box<FoFormula>, Box<FoFormula>),
    Or(Box<FoFormula>, Box<FoFormula>),
    Not(Box<FoFormula>),
}

impl FoFormula {
    /// Atom over variables only.
    pub fn atom(pred: &str, vars: &[&str]) -> Self {
        FoFormula::Atom {
            pred: pred.to_string(),
            args: vars.iter().map(|v| Term::var(v)).collect(),
        }
    }

    pub fn eq(a: Term, b: Term) -> Self {
        FoFormula::Eq(a, b)
    }

    pub fn and(self, other: Self) -> Self {
        FoFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        FoFormula::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        FoFormula::Not(Box::new(self))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        };
        match self {
            FoFormula::Atom { args, .. } => args.iter().for_each(term),
            FoFormula::Eq(a, b) => {
                term(a);
                term(b);
            }
            FoFormula::And(a, b) | FoFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            FoFormula::Not(a) => a.collect_vars(out),
        }
    }

    /// Predicate symbols with the number of arguments of each occurrence.
    pub fn atoms(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<(String, usize)>) {
        match self {
            FoFormula::Atom { pred, args } => out.push((pred.clone(), args.len())),
            FoFormula::Eq(..) => {}
            FoFormula::And(a, b) | FoFormula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            FoFormula::Not(a) => a.collect_atoms(out),
        }
    }
}

impl fmt::Display for FoFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoFormula::Atom { pred, args } => {
                write!(f, "{pred}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            FoFormula::Eq(a, b) => write!(f, "{a}={b}"),
            FoFormula::And(a, b) => write!(f, "({a} & {b})"),
            FoFormula::Or(a, b) => write!(f, "({a} | {b})"),
            FoFormula::Not(a) => write!(f, "!{a}"),
        }
    }
}

/// Predicate symbols available to [`translate_fo`]: each maps to an arity
/// and the relation it denotes.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    preds: BTreeMap<String, (usize, AlgebraExpr)>,
}

impl Vocab {
    pub fn new() -> Self {
        Vocab::default()
    }

    pub fn base(mut self, name: &str, arity: usize) -> Self {
        self.preds
            .insert(name.to_string(), (arity, AlgebraExpr::base(name)));
        self
    }

    pub fn guessed(mut self, name: &str, arity: usize) -> Self {
        self.preds
            .insert(name.to_string(), (arity, AlgebraExpr::guessed(name)));
        self
    }

    fn lookup(&self, pred: &str) -> Option<&(usize, AlgebraExpr)> {
        self.preds.get(pred)
    }
}

/// A translated formula: `expr` has one column per free variable, named
/// after it, in the order of `vars` (sorted by name).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translated {
    pub expr: AlgebraExpr,
    pub vars: Vec<String>,
}

fn named(vars: &[String]) -> Vec<AttrRef> {
    vars.iter().map(|v| AttrRef::name(v)).collect()
}

fn rename_to(e: AlgebraExpr, vars: &[String]) -> AlgebraExpr {
    AlgebraExpr::Rename {
        alias: None,
        names: vars.to_vec(),
        input: Box::new(e),
    }
}

/// Reorders the columns of `e` (currently named `current`) into sorted order.
fn sorted_columns(e: AlgebraExpr, current: &[String]) -> (AlgebraExpr, Vec<String>) {
    let mut sorted = current.to_vec();
    sorted.sort();
    if sorted == current {
        (e, sorted)
    } else {
        (e.project(named(&sorted)), sorted)
    }
}

/// Translates `phi` into a q-free expression whose tuples are exactly the
/// satisfying assignments of its free variables over DOM.
pub fn translate_fo(phi: &FoFormula, vocab: &Vocab) -> Result<Translated> {
    match phi {
        FoFormula::Atom { pred, args } => {
            let (arity, rel) = vocab
                .lookup(pred)
                .ok_or_else(|| TranslateError::UnknownPredicate(pred.clone()))?;
            if *arity != args.len() {
                return Err(TranslateError::AtomArity {
                    pred: pred.clone(),
                    expected: *arity,
                    got: args.len(),
                });
            }
            translate_atom(rel.clone(), args, phi)
        }
        FoFormula::Eq(a, b) => match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => Ok(Translated {
                expr: rename_to(AlgebraExpr::dom(), &[x.clone()]),
                vars: vec![x.clone()],
            }),
            (Term::Var(x), Term::Var(y)) => {
                let mut vars = vec![x.clone(), y.clone()];
                vars.sort();
                let e = AlgebraExpr::dom_power(2).select(Pred::cols(1, CmpOp::Eq, 2));
                Ok(Translated {
                    expr: rename_to(e, &vars),
                    vars,
                })
            }
            (Term::Var(x), Term::Const(c)) | (Term::Const(c), Term::Var(x)) => {
                let e = AlgebraExpr::dom().select(Pred::col_const(1, CmpOp::Eq, c.clone()));
                Ok(Translated {
                    expr: rename_to(e, &[x.clone()]),
                    vars: vec![x.clone()],
                })
            }
            (Term::Const(_), Term::Const(_)) => Err(TranslateError::Ground(phi.to_string())),
        },
        FoFormula::And(a, b) => {
            let (ta, tb) = (translate_fo(a, vocab)?, translate_fo(b, vocab)?);
            let mut cols = ta.vars.clone();
            cols.extend(tb.vars.iter().filter(|v| !ta.vars.contains(v)).cloned());
            let (expr, vars) = sorted_columns(ta.expr.natural_join(tb.expr), &cols);
            Ok(Translated { expr, vars })
        }
        FoFormula::Or(a, b) => {
            let (ta, tb) = (translate_fo(a, vocab)?, translate_fo(b, vocab)?);
            let all: BTreeSet<String> = ta.vars.iter().chain(&tb.vars).cloned().collect();
            let all: Vec<String> = all.into_iter().collect();
            let pad = |t: Translated| -> AlgebraExpr {
                let missing: Vec<String> =
                    all.iter().filter(|v| !t.vars.contains(v)).cloned().collect();
                if missing.is_empty() {
                    return t.expr;
                }
                let padded = t
                    .expr
                    .product(rename_to(AlgebraExpr::dom_power(missing.len()), &missing));
                let mut cols = t.vars.clone();
                cols.extend(missing);
                sorted_columns(padded, &cols).0
            };
            Ok(Translated {
                expr: pad(ta).union(pad(tb)),
                vars: all,
            })
        }
        FoFormula::Not(a) => {
            let t = translate_fo(a, vocab)?;
            Ok(Translated {
                expr: AlgebraExpr::dom_power(t.vars.len()).minus(t.expr),
                vars: t.vars,
            })
        }
    }
}

fn translate_atom(rel: AlgebraExpr, args: &[Term], phi: &FoFormula) -> Result<Translated> {
    let mut conds = Vec::new();
    let mut first: Vec<(String, usize)> = Vec::new();
    for (i, t) in args.iter().enumerate() {
        let pos = i + 1;
        match t {
            Term::Const(c) => conds.push(Pred::col_const(pos, CmpOp::Eq, c.clone())),
            Term::Var(v) => match first.iter().find(|(w, _)| w == v) {
                Some((_, p)) => conds.push(Pred::cols(pos, CmpOp::Eq, *p)),
                None => first.push((v.clone(), pos)),
            },
        }
    }
    if first.is_empty() {
        return Err(TranslateError::Ground(phi.to_string()));
    }
    let mut e = rel;
    if !conds.is_empty() {
        e = e.select(Pred::and(conds));
    }
    first.sort();
    let keep: Vec<usize> = first.iter().map(|(_, p)| *p).collect();
    let vars: Vec<String> = first.into_iter().map(|(v, _)| v).collect();
    if keep != (1..=args.len()).collect::<Vec<_>>() {
        e = e.project_pos(keep);
    }
    Ok(Translated {
        expr: rename_to(e, &vars),
        vars,
    })
}

/// Column names of `expr` as far as they can be derived statically;
/// `leaf` gives the arity of base and guessed relations.
fn static_names(
    expr: &AlgebraExpr,
    leaf: &dyn Fn(&AlgebraExpr) -> Option<usize>,
) -> Option<Vec<Option<String>>> {
    use AlgebraExpr::*;
    Some(match expr {
        Base(_) | Guessed(_) | LetRef(_) => vec![None; leaf(expr)?],
        DomPower(k) => vec![None; *k],
        Select(_, e) => static_names(e, leaf)?,
        Rename { names, input, .. } => {
            let inner = static_names(input, leaf)?;
            if names.is_empty() {
                inner
            } else if names.len() == inner.len() {
                names.iter().cloned().map(Some).collect()
            } else {
                return None;
            }
        }
        Project(attrs, e) => {
            let inner = static_names(e, leaf)?;
            attrs
                .iter()
                .map(|a| resolve_static(&inner, a).map(|i| inner[i].clone()))
                .collect::<Option<Vec<_>>>()?
        }
        Product(a, b) | Join(_, a, b) => {
            let mut v = static_names(a, leaf)?;
            v.extend(static_names(b, leaf)?);
            v
        }
        Union(a, b) | Difference(a, b) | Intersect(a, b) | SymDiff(a, b) => {
            let (x, y) = (static_names(a, leaf)?, static_names(b, leaf)?);
            if x.len() != y.len() {
                return None;
            }
            x.into_iter().zip(y).map(|(l, r)| l.or(r)).collect()
        }
        Divide(a, b) => {
            let (x, y) = (static_names(a, leaf)?, static_names(b, leaf)?);
            if y.is_empty() || x.len() <= y.len() {
                return None;
            }
            x[..x.len() - y.len()].to_vec()
        }
        NaturalJoin(a, b) => {
            let (mut x, y) = (static_names(a, leaf)?, static_names(b, leaf)?);
            let extra: Vec<Option<String>> = y
                .into_iter()
                .filter(|n| n.is_none() || !x.contains(n))
                .collect();
            x.extend(extra);
            x
        }
        Let { .. } => return None,
    })
}

fn resolve_static(names: &[Option<String>], a: &AttrRef) -> Option<usize> {
    match a {
        AttrRef::Pos(i) => (*i >= 1 && *i <= names.len()).then(|| i - 1),
        AttrRef::Named { name, .. } => {
            let hits: Vec<usize> = names
                .iter()
                .enumerate()
                .filter(|(_, n)| n.as_deref() == Some(name.as_str()))
                .map(|(i, _)| i)
                .collect();
            (hits.len() == 1).then(|| hits[0])
        }
    }
}

/// True when every projection in `expr` either permutes all columns of its
/// input or drops only columns that a selection directly below equates
/// with a kept column or a constant. Such projections lose no information,
/// which is what makes the expression q-free.
pub fn is_q_free(expr: &AlgebraExpr, leaf: &dyn Fn(&AlgebraExpr) -> Option<usize>) -> bool {
    let ok_here = match expr {
        AlgebraExpr::Project(attrs, input) => {
            let Some(names) = static_names(input, leaf) else {
                return false;
            };
            let Some(idx) = attrs
                .iter()
                .map(|a| resolve_static(&names, a))
                .collect::<Option<Vec<usize>>>()
            else {
                return false;
            };
            let distinct: BTreeSet<usize> = idx.iter().copied().collect();
            if distinct.len() != idx.len() {
                false
            } else if idx.len() == names.len() {
                true
            } else if let AlgebraExpr::Select(p, _) = &**input {
                (0..names.len())
                    .filter(|i| !distinct.contains(i))
                    .all(|d| determined_by(p, d + 1, &idx))
            } else {
                false
            }
        }
        _ => true,
    };
    ok_here && expr.children().into_iter().all(|c| is_q_free(c, leaf))
}

/// Does a top-level conjunct of `p` fix column `d` (1-based) to a constant
/// or to one of the kept columns (0-based)?
fn determined_by(p: &Pred, d: usize, kept: &[usize]) -> bool {
    let conj: Vec<&Pred> = match p {
        Pred::And(ps) => ps.iter().collect(),
        other => vec![other],
    };
    let is_d = |o: &Operand| matches!(o, Operand::Attr(AttrRef::Pos(i)) if *i == d);
    let fixes = |o: &Operand| match o {
        Operand::Const(_) => true,
        Operand::Attr(AttrRef::Pos(i)) => kept.contains(&(i - 1)),
        _ => false,
    };
    conj.into_iter().any(|c| match c {
        Pred::Cmp(a, CmpOp::Eq, b) => (is_d(a) && fixes(b)) || (is_d(b) && fixes(a)),
        _ => false,
    })
}

/// `∃S ∀X ∃Y φ(X, Y)` with `φ` quantifier-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsoSentence {
    pub second_order: Vec<(String, usize)>,
    pub universal: Vec<String>,
    pub existential: Vec<String>,
    pub matrix: FoFormula,
}

impl EsoSentence {
    /// Base predicates used by the matrix with their arities.
    pub fn base_arities(&self) -> Result<BTreeMap<String, usize>> {
        let mut out = BTreeMap::new();
        for (pred, n) in self.matrix.atoms() {
            if self.second_order.iter().any(|(s, _)| *s == pred) {
                continue;
            }
            if let Some(prev) = out.insert(pred.clone(), n) {
                if prev != n {
                    return Err(TranslateError::AtomArity {
                        pred,
                        expected: prev,
                        got: n,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Builds the NP-Alg query that is satisfiable over a database exactly when
/// the database satisfies `s`: one guessed relation per second-order
/// predicate and `FAIL = DOM^|X| - π_X(PHI)`, where `PHI` translates the
/// matrix. With no universal variables, `FAIL = empty(PHI)`.
pub fn build_psi(s: &EsoSentence) -> Result<NpAlgQuery> {
    let mut seen = BTreeSet::new();
    for v in s.universal.iter().chain(&s.existential) {
        if !seen.insert(v.clone()) {
            return Err(TranslateError::DuplicateVariable(v.clone()));
        }
    }
    if seen.is_empty() {
        return Err(TranslateError::NoVariables);
    }
    if let Some(v) = s.matrix.free_vars().into_iter().find(|v| !seen.contains(v)) {
        return Err(TranslateError::UnboundVariable(v));
    }
    let mut preds = BTreeSet::new();
    for (p, _) in &s.second_order {
        if !preds.insert(p.clone()) {
            return Err(TranslateError::DuplicatePredicate(p.clone()));
        }
    }
    let bases = s.base_arities()?;
    let mut vocab = Vocab::new();
    for (name, arity) in &bases {
        vocab = vocab.base(name, *arity);
    }
    for (name, arity) in &s.second_order {
        vocab = vocab.guessed(name, *arity);
    }
    let t = translate_fo(&s.matrix, &vocab)?;
    // variables of the prefix that the matrix does not mention range freely
    let all: Vec<String> = seen.into_iter().collect();
    let missing: Vec<String> = all.iter().filter(|v| !t.vars.contains(v)).cloned().collect();
    let phi = if missing.is_empty() {
        t.expr
    } else {
        let padded = t
            .expr
            .product(rename_to(AlgebraExpr::dom_power(missing.len()), &missing));
        let mut cols = t.vars.clone();
        cols.extend(missing);
        sorted_columns(padded, &cols).0
    };
    let phi_ref = AlgebraExpr::let_ref("PHI");
    let fail = if s.universal.is_empty() {
        sugar::empty(phi_ref)
    } else {
        AlgebraExpr::dom_power(s.universal.len()).minus(phi_ref.project(named(&s.universal)))
    };
    let mut q = NpAlgQuery::new(fail)
        .with_guesses(
            s.second_order
                .iter()
                .map(|(n, a)| GuessDecl::new(n, *a)),
        )
        .with_let("PHI", phi);
    q.base_arities = bases;
    Ok(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Not,
    In,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::In => "IN",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "NOT" => GateKind::Not,
            "IN" => GateKind::In,
            _ => return Err(TranslateError::UnknownGate(s.to_string())),
        })
    }
}

/// Gate `(kind, b, c)`; `b` and `c` are 1-based references to earlier
/// gates, `0` for inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub b: usize,
    pub c: usize,
}

/// A boolean circuit over `2n` inputs whose last gate is the output. The
/// `j`-th IN gate (in gate order) reads input bit `j`. Read as a graph on
/// `2^n` nodes, the first `n` bits encode the source node and the last `n`
/// the target, most significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(TranslateError::ZeroWidth);
        }
        if gates.is_empty() {
            return Err(TranslateError::EmptyCircuit);
        }
        let mut inputs = 0;
        for (i, g) in gates.iter().enumerate() {
            let gate = i + 1;
            let (b, c) = (g.b, g.c);
            match g.kind {
                GateKind::In => {
                    if b != 0 || c != 0 {
                        return Err(TranslateError::BadInput { gate, b, c });
                    }
                    inputs += 1;
                }
                _ => {
                    if b == 0 || c == 0 || b >= gate || c >= gate {
                        return Err(TranslateError::ForwardReference { gate, b, c });
                    }
                    if g.kind == GateKind::Not && b != c {
                        return Err(TranslateError::BadNot { gate, b, c });
                    }
                }
            }
        }
        if inputs != 2 * n {
            return Err(TranslateError::InputCount {
                expected: 2 * n,
                got: inputs,
            });
        }
        Ok(Circuit { n, gates })
    }

    /// Circuit whose output is 1 exactly on the listed `(source, target)`
    /// node pairs: a disjunction of one conjunction of literals per edge.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 {
            return Err(TranslateError::ZeroWidth);
        }
        let mut gates: Vec<Gate> = (0..2 * n)
            .map(|_| Gate {
                kind: GateKind::In,
                b: 0,
                c: 0,
            })
            .collect();
        let push = |gates: &mut Vec<Gate>, kind, b, c| {
            gates.push(Gate { kind, b, c });
            gates.len()
        };
        let mut negated = Vec::with_capacity(2 * n);
        for j in 1..=2 * n {
            negated.push(push(&mut gates, GateKind::Not, j, j));
        }
        let mut terms = Vec::new();
        for &(x, y) in edges {
            let bits = node_bits(x, n).into_iter().chain(node_bits(y, n));
            let lits: Vec<usize> = bits
                .enumerate()
                .map(|(j, bit)| if bit { j + 1 } else { negated[j] })
                .collect();
            let mut acc = lits[0];
            for &l in &lits[1..] {
                acc = push(&mut gates, GateKind::And, acc, l);
            }
            terms.push(acc);
        }
        let out = match terms.split_first() {
            Some((&first, rest)) => rest
                .iter()
                .fold(first, |acc, &t| push(&mut gates, GateKind::Or, acc, t)),
            // constant false
            None => push(&mut gates, GateKind::And, 1, negated[0]),
        };
        debug_assert_eq!(out, gates.len());
        Circuit::new(n, gates)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Output of every gate for the given `2n` input bits.
    pub fn gate_values(&self, bits: &[bool]) -> Result<Vec<bool>> {
        if bits.len() != 2 * self.n {
            return Err(TranslateError::BitCount {
                expected: 2 * self.n,
                got: bits.len(),
            });
        }
        let mut vals: Vec<bool> = Vec::with_capacity(self.gates.len());
        let mut next_input = 0;
        for g in &self.gates {
            let v = match g.kind {
                GateKind::In => {
                    next_input += 1;
                    bits[next_input - 1]
                }
                GateKind::And => vals[g.b - 1] && vals[g.c - 1],
                GateKind::Or => vals[g.b - 1] || vals[g.c - 1],
                GateKind::Not => !vals[g.b - 1],
            };
            vals.push(v);
        }
        Ok(vals)
    }

    /// Does the edge `(x, y)` exist in the encoded graph?
    pub fn has_edge(&self, x: u32, y: u32) -> bool {
        let bits: Vec<bool> = node_bits(x, self.n)
            .into_iter()
            .chain(node_bits(y, self.n))
            .collect();
        eval_circuit(self, &bits).unwrap_or(false)
    }

    /// The explicit edge list of the encoded graph on `2^n` nodes.
    pub fn expand(&self) -> Vec<(u32, u32)> {
        let nodes = 1u32 << self.n;
        (0..nodes)
            .flat_map(|x| (0..nodes).map(move |y| (x, y)))
            .filter(|&(x, y)| self.has_edge(x, y))
            .collect()
    }
}

/// The `n` bits of node `x`, most significant first.
pub fn node_bits(x: u32, n: usize) -> Vec<bool> {
    (0..n).rev().map(|i| (x >> i) & 1 == 1).collect()
}

/// Value of the last gate.
pub fn eval_circuit(c: &Circuit, bits: &[bool]) -> Result<bool> {
    Ok(*c.gate_values(bits)?.last().expect("circuits are non-empty"))
}

pub fn gate_name(i: usize) -> String {
    format!("G{i}")
}

pub fn color_name(i: usize) -> String {
    format!("COL{i}")
}

fn bit(b: bool) -> Constant {
    Constant::Int(b as i64)
}

/// Database for [`gen_succinct_3col`]: its active domain is the two bits
/// plus the four gate-kind names.
pub fn succinct_db() -> Database {
    let bits = Relation::unary(Schema::named(None, &["b"]), [0i64, 1]).expect("unary");
    let kinds = Relation::unary(Schema::named(None, &["k"]), ["AND", "OR", "NOT", "IN"])
        .expect("unary");
    Database::from_relations([("BITS", bits), ("KINDS", kinds)])
}

/// The NP-Alg query deciding 3-colorability of the graph encoded by `c`:
/// guessed gate relations `G1..Gk` (arity `2n`) forced by `FAIL_CIRCUIT` to
/// hold the inputs on which each gate outputs 1, and colorings
/// `COL1..COL3` (arity `n`) checked by `FAIL_PARTITION` and
/// `FAIL_COLORING` against the edge relation `Gk`.
pub fn gen_succinct_3col(c: &Circuit) -> Result<NpAlgQuery> {
    let n = c.n();
    let w = 2 * n;
    let k = c.gates().len();
    let kinds = ["AND", "OR", "NOT", "IN"];
    let dom01 = AlgebraExpr::dom().select(Pred::and(
        kinds
            .iter()
            .map(|s| Pred::col_const(1, CmpOp::Ne, Constant::sym(s)))
            .collect(),
    ));
    let power = |m: usize| {
        AlgebraExpr::product_all(vec![AlgebraExpr::let_ref("DOM01"); m]).expect("m >= 1")
    };
    let g = |i: usize| AlgebraExpr::guessed(&gate_name(i));

    let mut q = NpAlgQuery::new(AlgebraExpr::let_ref("FAIL_CIRCUIT"))
        .with_base("BITS", 1)
        .with_base("KINDS", 1)
        .with_let("DOM01", dom01)
        .with_let("DOM01_N", power(n))
        .with_let("DOM01_2N", power(w));
    let mut input = 0;
    let mut circuit_fails = Vec::new();
    for (i, gate) in c.gates().iter().enumerate() {
        let i = i + 1;
        let target = match gate.kind {
            GateKind::And => g(gate.b).intersect(g(gate.c)),
            GateKind::Or => g(gate.b).union(g(gate.c)),
            GateKind::Not => AlgebraExpr::let_ref("DOM01_2N").minus(g(gate.b)),
            GateKind::In => {
                input += 1;
                AlgebraExpr::let_ref("DOM01_2N")
                    .select(Pred::col_const(input, CmpOp::Eq, Constant::Int(1)))
            }
        };
        let name = format!("FAIL_{}", gate_name(i));
        q = q.with_let(&name, g(i).sym_diff(target).project_pos([1]));
        circuit_fails.push(AlgebraExpr::let_ref(&name));
    }
    q = q.with_let(
        "FAIL_CIRCUIT",
        AlgebraExpr::union_all(circuit_fails).expect("non-empty circuit"),
    );
    let cols: Vec<AlgebraExpr> = (1..=3).map(|i| AlgebraExpr::guessed(&color_name(i))).collect();
    q = q.with_let(
        "FAIL_PARTITION",
        sugar::fail_partition(AlgebraExpr::let_ref("DOM01_N"), n, cols.clone())?,
    );
    let differ = Pred::or((1..=n).map(|j| Pred::cols(j, CmpOp::Ne, n + j)).collect());
    let same_edge = Pred::and((1..=w).map(|j| Pred::cols(j, CmpOp::Eq, w + j)).collect());
    let coloring_fails: Vec<AlgebraExpr> = cols
        .into_iter()
        .map(|col| {
            col.clone()
                .product(col)
                .select(differ.clone())
                .join(same_edge.clone(), g(k))
                .project_pos([1])
        })
        .collect();
    q = q.with_let(
        "FAIL_COLORING",
        AlgebraExpr::union_all(coloring_fails).expect("three colors"),
    );
    q.fail = AlgebraExpr::let_ref("FAIL_CIRCUIT")
        .union(AlgebraExpr::let_ref("FAIL_PARTITION"))
        .union(AlgebraExpr::let_ref("FAIL_COLORING"));
    q = q.with_guesses((1..=k).map(|i| GuessDecl::new(&gate_name(i), w)));
    q = q.with_guesses((1..=3).map(|i| GuessDecl::new(&color_name(i), n)));
    Ok(q)
}

/// Largest `n` accepted by [`forced_gate_extension`].
pub const MAX_SWEEP_WIDTH: usize = 4;

/// For every gate `i`, the relation `Gi` holding exactly the `2n`-bit input
/// tuples on which gate `i` outputs 1, computed by a truth-table sweep.
pub fn forced_gate_extension(c: &Circuit) -> Result<BTreeMap<String, Relation>> {
    if c.n() > MAX_SWEEP_WIDTH {
        return Err(TranslateError::TooWide(2 * c.n()));
    }
    let w = 2 * c.n();
    let mut rels: Vec<Relation> = vec![Relation::with_arity(w); c.gates().len()];
    let values = [Constant::Int(0), Constant::Int(1)];
    for tuple in DomPowerIter::new(&values, w) {
        let bits: Vec<bool> = tuple.iter().map(|v| *v == Constant::Int(1)).collect();
        for (i, v) in c.gate_values(&bits)?.into_iter().enumerate() {
            if v {
                rels[i].insert(tuple.clone()).expect("arity 2n");
            }
        }
    }
    Ok(rels
        .into_iter()
        .enumerate()
        .map(|(i, r)| (gate_name(i + 1), r))
        .collect())
}

/// Exact-solver options for the succinct query: gate relations fixed to
/// the forced extension and colorings restricted to bit tuples, so only
/// `COL1..COL3` are enumerated. The restriction is sound because
/// `FAIL_PARTITION` rejects any coloring tuple outside `DOM01^n`.
pub fn succinct_exact_options(c: &Circuit) -> Result<ExactOptions> {
    let fixed = forced_gate_extension(c)?;
    let values = [bit(false), bit(true)];
    let nodes: Vec<Tuple> = DomPowerIter::new(&values, c.n()).collect();
    let universes = (1..=3).map(|i| (color_name(i), nodes.clone())).collect();
    Ok(ExactOptions {
        fixed,
        universes,
        ..Default::default()
    })
}
