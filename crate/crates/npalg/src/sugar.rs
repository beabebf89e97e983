//! Builders for common constraint idioms: complements, emptiness tests,
//! partitions, functions and their properties, cardinality comparisons,
//! successor relations and permutations.
//!
//! Every `fail_*` builder yields a unary expression that is empty exactly
//! when the named property holds. Builders never evaluate anything.

use thiserror::Error;

use crate::guess::GuessDecl;
use crate::relation::{AlgebraExpr, AttrRef, CmpOp, Pred};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SugarError {
    #[error("arity must be at least 1")]
    ZeroArity,
    #[error("a partition needs at least one part")]
    NoParts,
    #[error("auxiliary relation name `{0}` is empty or reused")]
    BadAuxName(String),
}

type Result<T> = std::result::Result<T, SugarError>;

/// An expression together with the auxiliary guessed relations it needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Built {
    pub expr: AlgebraExpr,
    pub aux: Vec<GuessDecl>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    /// `FUN ⊆ D × R` and mono-valued.
    Function,
    /// Every element of `D` is mapped.
    Total,
    /// No two elements share an image.
    Injective,
    /// Every element of `R` is hit.
    Surjective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SizeCmp {
    Geq,
    Leq,
    Eq,
}

fn nonzero(k: usize) -> Result<()> {
    if k == 0 {
        Err(SugarError::ZeroArity)
    } else {
        Ok(())
    }
}

/// `$a+i = $b+i` for `i < len` (1-based offsets).
fn block_eq(a: usize, b: usize, len: usize) -> Pred {
    Pred::and((0..len).map(|i| Pred::cols(a + i, CmpOp::Eq, b + i)).collect())
}

fn block_ne(a: usize, b: usize, len: usize) -> Pred {
    Pred::Not(Box::new(block_eq(a, b, len)))
}

/// Columns `from .. from+len` (1-based).
fn cols(from: usize, len: usize) -> Vec<AttrRef> {
    (from..from + len).map(AttrRef::Pos).collect()
}

fn first_col(e: AlgebraExpr) -> AlgebraExpr {
    e.project_pos([1])
}

fn union_of(parts: Vec<AlgebraExpr>) -> AlgebraExpr {
    AlgebraExpr::union_all(parts).expect("at least one part")
}

/// `DOM^k - r`, named like `r`.
pub fn complement(r: AlgebraExpr, k: usize) -> Result<AlgebraExpr> {
    nonzero(k)?;
    Ok(AlgebraExpr::dom_power(k).minus(r))
}

/// `DOM - π_$1(DOM × r)`: empty iff `r` is non-empty (for non-empty DOM).
pub fn empty(r: AlgebraExpr) -> AlgebraExpr {
    AlgebraExpr::dom().minus(first_col(AlgebraExpr::dom().product(r)))
}

/// Empty iff `parts` are pairwise disjoint and their union is `n`.
pub fn fail_partition(n: AlgebraExpr, k: usize, parts: Vec<AlgebraExpr>) -> Result<AlgebraExpr> {
    nonzero(k)?;
    if parts.is_empty() {
        return Err(SugarError::NoParts);
    }
    let mut fails = Vec::new();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let overlap = parts[i].clone().join(block_eq(1, k + 1, k), parts[j].clone());
            fails.push(first_col(overlap));
        }
    }
    let cover = union_of(parts);
    fails.push(first_col(n.sym_diff(cover)));
    Ok(union_of(fails))
}

/// Function-property failures for `fun ⊆ D × R` with `arity(D) = d` and
/// `arity(R) = r`; the first `d` columns of `fun` are the argument.
pub fn fail_function(
    kind: FunctionKind,
    fun: AlgebraExpr,
    dom: AlgebraExpr,
    range: AlgebraExpr,
    d: usize,
    r: usize,
) -> Result<AlgebraExpr> {
    nonzero(d)?;
    nonzero(r)?;
    let w = d + r;
    let args = || fun.clone().project(cols(1, d));
    let images = || fun.clone().project(cols(d + 1, r));
    Ok(match kind {
        FunctionKind::Function => {
            let outside_dom = first_col(args().minus(dom));
            let outside_range = first_col(images().minus(range));
            let multi = fun.clone().join(
                Pred::and(vec![block_eq(1, w + 1, d), block_ne(d + 1, w + d + 1, r)]),
                fun.clone(),
            );
            union_of(vec![outside_dom, outside_range, first_col(multi)])
        }
        FunctionKind::Total => first_col(dom.minus(args())),
        FunctionKind::Surjective => first_col(range.minus(images())),
        FunctionKind::Injective => first_col(fun.clone().join(
            Pred::and(vec![block_ne(1, w + 1, d), block_eq(d + 1, w + d + 1, r)]),
            fun,
        )),
    })
}

/// Cardinality comparison of `n` (arity `na`) and `k` (arity `ka`) through
/// an auxiliary guessed relation `aux`: some extension of `aux` makes the
/// result empty iff `|n| >= |k|`, `|n| <= |k|` or `|n| = |k|`.
///
/// For `Geq` and `Eq` the columns of `aux` are those of `n` followed by
/// those of `k`; for `Leq` the order is reversed.
pub fn fail_size(
    cmp: SizeCmp,
    aux: &str,
    n: AlgebraExpr,
    na: usize,
    k: AlgebraExpr,
    ka: usize,
) -> Result<Built> {
    if aux.is_empty() {
        return Err(SugarError::BadAuxName(aux.to_string()));
    }
    nonzero(na)?;
    nonzero(ka)?;
    let g = AlgebraExpr::guessed(aux);
    // a partial function from `from` onto `to`
    let onto = |from: AlgebraExpr, fa: usize, to: AlgebraExpr, ta: usize| -> Result<AlgebraExpr> {
        Ok(fail_function(FunctionKind::Function, g.clone(), from.clone(), to.clone(), fa, ta)?
            .union(fail_function(FunctionKind::Surjective, g.clone(), from, to, fa, ta)?))
    };
    let expr = match cmp {
        SizeCmp::Geq => onto(n, na, k, ka)?,
        SizeCmp::Leq => onto(k, ka, n, na)?,
        SizeCmp::Eq => union_of(
            [
                FunctionKind::Function,
                FunctionKind::Total,
                FunctionKind::Injective,
                FunctionKind::Surjective,
            ]
            .into_iter()
            .map(|kind| fail_function(kind, g.clone(), n.clone(), k.clone(), na, ka))
            .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(Built {
        expr,
        aux: vec![GuessDecl::new(aux, na + ka)],
    })
}

/// Empty iff `succ` (arity `2k`) is the successor relation of the strict
/// total order `less` (an auxiliary guessed relation of arity `2k`) on `n`.
/// Hence some extension of `less` works iff `succ` links the elements of
/// `n` into a single path visiting each of them once.
pub fn fail_successor(succ: &str, n: AlgebraExpr, k: usize, less: &str) -> Result<Built> {
    nonzero(k)?;
    if less.is_empty() || less == succ {
        return Err(SugarError::BadAuxName(less.to_string()));
    }
    let s = || AlgebraExpr::guessed(succ);
    let l = || AlgebraExpr::guessed(less);
    let left = |e: AlgebraExpr| e.project(cols(1, k));
    let right = |e: AlgebraExpr| e.project(cols(k + 1, k));
    // pairs (a, b) with some c such that a < c < b
    let between = || {
        l().join(block_eq(k + 1, 2 * k + 1, k), l())
            .project([cols(1, k), cols(3 * k + 1, k)].concat())
    };
    let swapped = l().project([cols(k + 1, k), cols(1, k)].concat());
    let fails = vec![
        first_col(left(s()).minus(n.clone())),
        first_col(right(s()).minus(n.clone())),
        first_col(left(l()).minus(n.clone())),
        first_col(right(l()).minus(n.clone())),
        // irreflexive
        first_col(l().select(block_eq(1, k + 1, k))),
        // transitive
        first_col(between().minus(l())),
        // total on distinct elements
        first_col(
            n.clone()
                .product(n)
                .select(block_ne(1, k + 1, k))
                .minus(l())
                .minus(swapped),
        ),
        // successors are immediate
        first_col(s().minus(l())),
        first_col(s().intersect(between())),
        // every immediate pair is a successor
        first_col(l().minus(s()).minus(between())),
    ];
    Ok(Built {
        expr: union_of(fails),
        aux: vec![GuessDecl::new(less, 2 * k)],
    })
}

/// Empty iff `perm` (arity `2k`) is a bijection from `n` to itself.
pub fn fail_permutation(perm: &str, n: AlgebraExpr, k: usize) -> Result<AlgebraExpr> {
    nonzero(k)?;
    let p = AlgebraExpr::guessed(perm);
    Ok(union_of(
        [
            FunctionKind::Function,
            FunctionKind::Total,
            FunctionKind::Injective,
            FunctionKind::Surjective,
        ]
        .into_iter()
        .map(|kind| fail_function(kind, p.clone(), n.clone(), n.clone(), k, k))
        .collect::<Result<Vec<_>>>()?,
    ))
}
