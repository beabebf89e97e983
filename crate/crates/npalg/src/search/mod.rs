//! Local search over shaped states: hill climbing, tabu search and their
//! sequential composition, with neighborhoods derived from the shape of
//! each state component.

mod npalg;
mod solvers;

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::consql::ConsqlError;
use crate::guess::GuessError;

pub use npalg::NpAlgSpace;
pub use solvers::{
    exhaustive, hill_climb, solve, tabu_search, tandem, RunTrace, SearchOutcome, SearchStats,
    SolverParams, Strategy,
};

/// Marker for an unassigned row of a partial function.
pub const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("max_iters must be at least 1")]
    ZeroIterations,
    #[error("restarts must be at least 1")]
    ZeroRestarts,
    #[error("tandem search needs at least two strategies, got {0}")]
    TandemTooShort(usize),
    #[error("tandem stages must be hill or tabu")]
    NestedTandem,
    #[error("component {0} is a total function with an empty range")]
    EmptyRange(usize),
    #[error("search space of {0} states exceeds the limit of {1}")]
    TooLarge(u128, u128),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Consql(#[from] ConsqlError),
    #[error(transparent)]
    Guess(#[from] GuessError),
}

pub type Result<T> = std::result::Result<T, SearchError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    /// Values 0/1 per row.
    Subset,
    /// One value in `0..values` per row.
    TotalFunction,
    /// A value in `0..values` or [`UNASSIGNED`] per row.
    PartialFunction,
    /// A bijection from rows to `0..rows`.
    Permutation,
    /// A block in `0..values` per row.
    Partition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ComponentLayout {
    pub shape: ShapeKind,
    pub rows: usize,
    pub values: u32,
}

impl ComponentLayout {
    pub fn subset(rows: usize) -> Self {
        ComponentLayout {
            shape: ShapeKind::Subset,
            rows,
            values: 2,
        }
    }

    pub fn function(rows: usize, values: u32, total: bool) -> Self {
        ComponentLayout {
            shape: if total {
                ShapeKind::TotalFunction
            } else {
                ShapeKind::PartialFunction
            },
            rows,
            values,
        }
    }

    pub fn permutation(rows: usize) -> Self {
        ComponentLayout {
            shape: ShapeKind::Permutation,
            rows,
            values: rows as u32,
        }
    }

    pub fn partition(rows: usize, blocks: u32) -> Self {
        ComponentLayout {
            shape: ShapeKind::Partition,
            rows,
            values: blocks,
        }
    }

    /// Number of shape-valid assignments, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        let pow = |base: u128| {
            (0..self.rows).try_fold(1u128, |acc, _| acc.checked_mul(base)).unwrap_or(u128::MAX)
        };
        match self.shape {
            ShapeKind::Subset => pow(2),
            ShapeKind::TotalFunction | ShapeKind::Partition => pow(self.values as u128),
            ShapeKind::PartialFunction => pow(self.values as u128 + 1),
            ShapeKind::Permutation => (1..=self.rows as u128)
                .try_fold(1u128, |acc, k| acc.checked_mul(k))
                .unwrap_or(u128::MAX),
        }
    }

    pub fn is_valid(&self, part: &[u32]) -> bool {
        if part.len() != self.rows {
            return false;
        }
        match self.shape {
            ShapeKind::Subset => part.iter().all(|&v| v <= 1),
            ShapeKind::TotalFunction | ShapeKind::Partition => {
                part.iter().all(|&v| v < self.values)
            }
            ShapeKind::PartialFunction => part.iter().all(|&v| v < self.values || v == UNASSIGNED),
            ShapeKind::Permutation => {
                let mut seen = vec![false; self.rows];
                part.iter().all(|&v| {
                    let v = v as usize;
                    v < self.rows && !std::mem::replace(&mut seen[v], true)
                })
            }
        }
    }
}

/// One assignment per component.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SearchState {
    pub parts: Vec<Vec<u32>>,
}

pub fn is_valid(layout: &[ComponentLayout], s: &SearchState) -> bool {
    s.parts.len() == layout.len() && layout.iter().zip(&s.parts).all(|(l, p)| l.is_valid(p))
}

/// Product of the component sizes, saturating.
pub fn space_size(layout: &[ComponentLayout]) -> u128 {
    layout
        .iter()
        .try_fold(1u128, |acc, l| acc.checked_mul(l.size()))
        .unwrap_or(u128::MAX)
}

/// A uniformly random shape-valid state.
pub fn random_state<R: Rng + ?Sized>(layout: &[ComponentLayout], rng: &mut R) -> Result<SearchState> {
    let mut parts = Vec::with_capacity(layout.len());
    for (i, l) in layout.iter().enumerate() {
        let part = match l.shape {
            ShapeKind::Subset => (0..l.rows).map(|_| u32::from(rng.gen_bool(0.5))).collect(),
            ShapeKind::TotalFunction | ShapeKind::Partition => {
                if l.values == 0 && l.rows > 0 {
                    return Err(SearchError::EmptyRange(i));
                }
                (0..l.rows).map(|_| rng.gen_range(0..l.values)).collect()
            }
            ShapeKind::PartialFunction => (0..l.rows)
                .map(|_| {
                    let v = rng.gen_range(0..=l.values);
                    if v == l.values {
                        UNASSIGNED
                    } else {
                        v
                    }
                })
                .collect(),
            ShapeKind::Permutation => {
                let mut p: Vec<u32> = (0..l.rows as u32).collect();
                p.shuffle(rng);
                p
            }
        };
        parts.push(part);
    }
    Ok(SearchState { parts })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Set { comp: usize, row: usize, value: u32 },
    Swap { comp: usize, i: usize, j: usize },
}

impl Move {
    pub fn apply(&self, s: &mut SearchState) {
        match *self {
            Move::Set { comp, row, value } => s.parts[comp][row] = value,
            Move::Swap { comp, i, j } => s.parts[comp].swap(i, j),
        }
    }

    /// `(component, row)` positions the move changes.
    pub fn touched(&self) -> [(usize, usize); 2] {
        match *self {
            Move::Set { comp, row, .. } => [(comp, row), (comp, row)],
            Move::Swap { comp, i, j } => [(comp, i), (comp, j)],
        }
    }
}

/// All single-step moves from `s`, in a fixed order: components in order,
/// rows ascending, values ascending (unassignment last).
pub fn neighborhood(layout: &[ComponentLayout], s: &SearchState) -> Vec<Move> {
    let mut out = Vec::new();
    for (comp, l) in layout.iter().enumerate() {
        let part = &s.parts[comp];
        match l.shape {
            ShapeKind::Subset => {
                for (row, &v) in part.iter().enumerate() {
                    out.push(Move::Set {
                        comp,
                        row,
                        value: 1 - v,
                    });
                }
            }
            ShapeKind::TotalFunction | ShapeKind::Partition | ShapeKind::PartialFunction => {
                for (row, &cur) in part.iter().enumerate() {
                    for value in (0..l.values).filter(|&v| v != cur) {
                        out.push(Move::Set { comp, row, value });
                    }
                    if l.shape == ShapeKind::PartialFunction && cur != UNASSIGNED {
                        out.push(Move::Set {
                            comp,
                            row,
                            value: UNASSIGNED,
                        });
                    }
                }
            }
            ShapeKind::Permutation => {
                for i in 0..l.rows {
                    for j in i + 1..l.rows {
                        out.push(Move::Swap { comp, i, j });
                    }
                }
            }
        }
    }
    out
}

/// Every shape-valid state, in a fixed order.
pub fn all_states(layout: &[ComponentLayout]) -> AllStates<'_> {
    let first = SearchState {
        parts: layout.iter().map(first_part).collect(),
    };
    let done = layout
        .iter()
        .any(|l| l.rows > 0 && l.values == 0 && l.shape != ShapeKind::PartialFunction);
    AllStates {
        layout,
        next: (!done).then_some(first),
    }
}

fn first_part(l: &ComponentLayout) -> Vec<u32> {
    match l.shape {
        ShapeKind::PartialFunction => vec![UNASSIGNED; l.rows],
        ShapeKind::Permutation => (0..l.rows as u32).collect(),
        _ => vec![0; l.rows],
    }
}

/// Advances `part` to its successor; false (and reset) on wrap-around.
fn advance(l: &ComponentLayout, part: &mut [u32]) -> bool {
    match l.shape {
        ShapeKind::Permutation => {
            let n = part.len();
            if n < 2 {
                return false;
            }
            let Some(i) = (0..n - 1).rev().find(|&i| part[i] < part[i + 1]) else {
                part.reverse();
                return false;
            };
            let j = (i + 1..n).rev().find(|&j| part[j] > part[i]).unwrap();
            part.swap(i, j);
            part[i + 1..].reverse();
            true
        }
        shape => {
            for v in part.iter_mut() {
                let next = match shape {
                    ShapeKind::PartialFunction if *v == UNASSIGNED => Some(0),
                    ShapeKind::PartialFunction if *v + 1 >= l.values => None,
                    ShapeKind::Subset if *v == 0 => Some(1),
                    ShapeKind::Subset => None,
                    _ if *v + 1 < l.values => Some(*v + 1),
                    _ => None,
                };
                match next {
                    Some(n) => {
                        *v = n;
                        return true;
                    }
                    None => {
                        *v = if shape == ShapeKind::PartialFunction {
                            UNASSIGNED
                        } else {
                            0
                        }
                    }
                }
            }
            false
        }
    }
}

pub struct AllStates<'a> {
    layout: &'a [ComponentLayout],
    next: Option<SearchState>,
}

impl Iterator for AllStates<'_> {
    type Item = SearchState;

    fn next(&mut self) -> Option<SearchState> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut carried = true;
        for (l, part) in self.layout.iter().zip(succ.parts.iter_mut()) {
            if advance(l, part) {
                carried = false;
                break;
            }
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

/// Constraint violations first, then the objective (negated when
/// maximizing). Feasible iff `violations == 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Cost {
    pub violations: u64,
    pub objective: Option<i64>,
    #[serde(skip)]
    pub maximize: bool,
}

impl Cost {
    pub fn violations(v: u64) -> Self {
        Cost {
            violations: v,
            objective: None,
            maximize: false,
        }
    }

    pub fn feasible(&self) -> bool {
        self.violations == 0
    }

    fn key(&self) -> (u64, i128) {
        let o = self.objective.map_or(0, |v| {
            if self.maximize {
                -(v as i128)
            } else {
                v as i128
            }
        });
        (self.violations, o)
    }

    /// No state can be strictly better.
    pub(crate) fn is_floor(&self) -> bool {
        self.violations == 0 && self.objective.is_none()
    }
}

impl PartialEq for Cost {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// A problem the local-search solvers can work on.
pub trait SearchSpace: Sync {
    fn layout(&self) -> &[ComponentLayout];
    fn cost(&self, state: &SearchState) -> Result<Cost>;
}
