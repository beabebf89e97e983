use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    all_states, is_valid, neighborhood, random_state, space_size, Cost, Result, SearchError,
    SearchSpace, SearchState,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Hill,
    Tabu,
    /// Stages run in order, each starting from its predecessor's best.
    Tandem(Vec<Strategy>),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Hill => "hill",
            Strategy::Tabu => "tabu",
            Strategy::Tandem(_) => "tandem",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverParams {
    pub seed: u64,
    /// Per run.
    pub max_iters: u64,
    pub restarts: u32,
    pub tenure: u64,
    /// Tabu runs stop after this many iterations without a new best.
    pub max_stall: u64,
    /// Worker threads for restarts; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            seed: 0,
            max_iters: 10_000,
            restarts: 20,
            tenure: 10,
            max_stall: 500,
            threads: None,
        }
    }
}

/// Accepted costs of one run, starting with its initial state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunTrace {
    pub restart: u32,
    pub strategy: &'static str,
    pub accepted: Vec<Cost>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub iterations: u64,
    pub evaluations: u64,
    pub restarts: u32,
    pub best_restart: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub state: SearchState,
    pub cost: Cost,
    pub stats: SearchStats,
    pub trace: Vec<RunTrace>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, restart, stage)`.
fn stream(seed: u64, restart: u32, stage: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ mix(restart as u64)) ^ stage as u64))
}

struct Run {
    best: SearchState,
    best_cost: Cost,
    iterations: u64,
    evaluations: u64,
    accepted: Vec<Cost>,
}

fn check_params(p: &SolverParams) -> Result<()> {
    if p.max_iters == 0 {
        return Err(SearchError::ZeroIterations);
    }
    if p.restarts == 0 {
        return Err(SearchError::ZeroRestarts);
    }
    Ok(())
}

fn evaluate<S: SearchSpace + ?Sized>(space: &S, s: &SearchState) -> Result<Cost> {
    debug_assert!(is_valid(space.layout(), s), "shape-invalid state");
    space.cost(s)
}

/// Steepest descent: each step moves to the best neighbor (first in the
/// shuffled scan order on ties) if it is strictly better.
fn hill_run<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    start: SearchState,
    rng: &mut ChaCha8Rng,
) -> Result<Run> {
    let layout = space.layout();
    let mut state = start;
    let mut cost = evaluate(space, &state)?;
    let mut run = Run {
        best: state.clone(),
        best_cost: cost,
        iterations: 0,
        evaluations: 1,
        accepted: vec![cost],
    };
    while run.iterations < p.max_iters && !cost.is_floor() {
        run.iterations += 1;
        let mut moves = neighborhood(layout, &state);
        moves.shuffle(rng);
        let mut best: Option<(SearchState, Cost)> = None;
        for m in moves {
            let mut next = state.clone();
            m.apply(&mut next);
            let c = evaluate(space, &next)?;
            run.evaluations += 1;
            if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
                best = Some((next, c));
            }
        }
        match best {
            Some((next, c)) if c < cost => {
                state = next;
                cost = c;
                run.accepted.push(c);
            }
            _ => break,
        }
    }
    run.best = state;
    run.best_cost = cost;
    Ok(run)
}

/// Best admissible neighbor each step, even if worse. Positions touched by
/// a move stay tabu for `tenure` iterations unless a move beats the run's
/// best (aspiration).
fn tabu_run<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    start: SearchState,
    rng: &mut ChaCha8Rng,
) -> Result<Run> {
    let layout = space.layout();
    let mut tabu_until: Vec<Vec<u64>> = layout.iter().map(|l| vec![0; l.rows]).collect();
    let mut state = start;
    let cost = evaluate(space, &state)?;
    let mut run = Run {
        best: state.clone(),
        best_cost: cost,
        iterations: 0,
        evaluations: 1,
        accepted: vec![cost],
    };
    let mut stall = 0;
    while run.iterations < p.max_iters && !run.best_cost.is_floor() && stall < p.max_stall {
        run.iterations += 1;
        let iter = run.iterations;
        let mut moves = neighborhood(layout, &state);
        moves.shuffle(rng);
        let mut chosen: Option<(super::Move, SearchState, Cost)> = None;
        for m in moves {
            let is_tabu = p.tenure > 0
                && m.touched()
                    .iter()
                    .any(|&(c, r)| iter <= tabu_until[c][r]);
            let mut next = state.clone();
            m.apply(&mut next);
            let c = evaluate(space, &next)?;
            run.evaluations += 1;
            if is_tabu && c >= run.best_cost {
                continue;
            }
            if chosen.as_ref().is_none_or(|(_, _, bc)| c < *bc) {
                chosen = Some((m, next, c));
            }
        }
        let Some((m, next, c)) = chosen else { break };
        for (comp, row) in m.touched() {
            tabu_until[comp][row] = iter + p.tenure;
        }
        state = next;
        run.accepted.push(c);
        if c < run.best_cost {
            run.best = state.clone();
            run.best_cost = c;
            stall = 0;
        } else {
            stall += 1;
        }
    }
    Ok(run)
}

fn single_run<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    strategy: &Strategy,
    start: SearchState,
    rng: &mut ChaCha8Rng,
) -> Result<Run> {
    match strategy {
        Strategy::Hill => hill_run(space, p, start, rng),
        Strategy::Tabu => tabu_run(space, p, start, rng),
        Strategy::Tandem(_) => Err(SearchError::NestedTandem),
    }
}

struct RestartResult {
    restart: u32,
    state: SearchState,
    cost: Cost,
    iterations: u64,
    evaluations: u64,
    trace: Vec<RunTrace>,
}

fn one_restart<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    stages: &[Strategy],
    restart: u32,
) -> Result<RestartResult> {
    let mut rng = stream(p.seed, restart, 0);
    let mut start = random_state(space.layout(), &mut rng)?;
    let mut out: Option<RestartResult> = None;
    let (mut iterations, mut evaluations, mut trace) = (0, 0, Vec::new());
    for (k, strat) in stages.iter().enumerate() {
        let mut rng = stream(p.seed, restart, k + 1);
        let run = single_run(space, p, strat, start, &mut rng)?;
        iterations += run.iterations;
        evaluations += run.evaluations;
        trace.push(RunTrace {
            restart,
            strategy: strat.name(),
            accepted: run.accepted,
        });
        if out.as_ref().is_none_or(|o| run.best_cost < o.cost) {
            out = Some(RestartResult {
                restart,
                state: run.best.clone(),
                cost: run.best_cost,
                iterations: 0,
                evaluations: 0,
                trace: Vec::new(),
            });
        }
        start = run.best;
    }
    let mut out = out.expect("at least one stage");
    out.iterations = iterations;
    out.evaluations = evaluations;
    out.trace = trace;
    Ok(out)
}

fn run_restarts<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    stages: &[Strategy],
) -> Result<SearchOutcome> {
    check_params(p)?;
    let work = || -> Result<Vec<RestartResult>> {
        (0..p.restarts)
            .into_par_iter()
            .map(|r| one_restart(space, p, stages, r))
            .collect()
    };
    let results = match p.threads {
        Some(1) => (0..p.restarts)
            .map(|r| one_restart(space, p, stages, r))
            .collect::<Result<Vec<_>>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SearchError::ThreadPool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut stats = SearchStats {
        restarts: p.restarts,
        ..Default::default()
    };
    let mut trace = Vec::new();
    let mut best: Option<(u32, SearchState, Cost)> = None;
    for r in results {
        stats.iterations += r.iterations;
        stats.evaluations += r.evaluations;
        trace.extend(r.trace);
        // results arrive in restart order, so ties keep the lowest index
        if best.as_ref().is_none_or(|(_, _, c)| r.cost < *c) {
            best = Some((r.restart, r.state, r.cost));
        }
    }
    let (best_restart, state, cost) = best.expect("restarts >= 1");
    stats.best_restart = best_restart;
    Ok(SearchOutcome {
        state,
        cost,
        stats,
        trace,
    })
}

pub fn hill_climb<S: SearchSpace + ?Sized>(space: &S, p: &SolverParams) -> Result<SearchOutcome> {
    run_restarts(space, p, &[Strategy::Hill])
}

pub fn tabu_search<S: SearchSpace + ?Sized>(space: &S, p: &SolverParams) -> Result<SearchOutcome> {
    run_restarts(space, p, &[Strategy::Tabu])
}

pub fn tandem<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    stages: &[Strategy],
) -> Result<SearchOutcome> {
    if stages.len() < 2 {
        return Err(SearchError::TandemTooShort(stages.len()));
    }
    if stages.iter().any(|s| matches!(s, Strategy::Tandem(_))) {
        return Err(SearchError::NestedTandem);
    }
    run_restarts(space, p, stages)
}

pub fn solve<S: SearchSpace + ?Sized>(
    space: &S,
    p: &SolverParams,
    strategy: &Strategy,
) -> Result<SearchOutcome> {
    match strategy {
        Strategy::Hill => hill_climb(space, p),
        Strategy::Tabu => tabu_search(space, p),
        Strategy::Tandem(stages) => tandem(space, p, stages),
    }
}

/// Best state by full enumeration; ties go to the first state in
/// enumeration order.
pub fn exhaustive<S: SearchSpace + ?Sized>(space: &S, limit: u128) -> Result<Option<SearchOutcome>> {
    let size = space_size(space.layout());
    if size > limit {
        return Err(SearchError::TooLarge(size, limit));
    }
    let mut best: Option<(SearchState, Cost)> = None;
    let mut evaluations = 0;
    for s in all_states(space.layout()) {
        let c = space.cost(&s)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
            best = Some((s, c));
        }
    }
    Ok(best.map(|(state, cost)| SearchOutcome {
        state,
        cost,
        stats: SearchStats {
            iterations: evaluations,
            evaluations,
            restarts: 0,
            best_restart: 0,
        },
        trace: Vec::new(),
    }))
}
