use std::fs;

use npalg::consql::{lower_spec, parse_spec, SearchProblem};
use npalg::corpus::{self, fixtures_dir, Body};
use npalg::guess::check;
use npalg::relation::{Constant, Database, Relation, Schema};
use npalg::search::{
    exhaustive, hill_climb, is_valid, neighborhood, random_state, solve, tabu_search, tandem,
    NpAlgSpace, SearchError, SearchSpace, SolverParams, Strategy,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cycle_db(n: i64, colors: i64) -> Database {
    let nodes = Relation::unary(Schema::named(Some("NODES"), &["n"]), 1..=n).unwrap();
    let edges = Relation::from_tuples(
        Schema::named(Some("EDGES"), &["f", "t"]),
        (1..=n).map(|i| vec![Constant::Int(i), Constant::Int(i % n + 1)]),
    )
    .unwrap();
    let palette = Relation::from_tuples(
        Schema::named(Some("COLORS"), &["id", "name"]),
        (1..=colors).map(|i| vec![Constant::Int(i), Constant::sym(&format!("c{i}"))]),
    )
    .unwrap();
    Database::from_relations([("NODES", nodes), ("EDGES", edges), ("COLORS", palette)])
}

fn coloring(db: &Database) -> SearchProblem {
    let src = fs::read_to_string(fixtures_dir().join("consql/graph_coloring.consql")).unwrap();
    lower_spec(&parse_spec(&src).unwrap(), db).unwrap()
}

fn params(seed: u64) -> SolverParams {
    SolverParams {
        seed,
        max_iters: 2_000,
        restarts: 8,
        ..SolverParams::default()
    }
}

#[test]
fn odd_cycle_keeps_one_violation() {
    let p = coloring(&cycle_db(5, 2));
    for strategy in [Strategy::Hill, Strategy::Tabu] {
        let out = solve(&p, &params(3), &strategy).unwrap();
        assert_eq!(out.cost.violations, 1, "{}", strategy.name());
    }
    assert_eq!(exhaustive(&p, 1 << 10).unwrap().unwrap().cost.violations, 1);
}

#[test]
fn even_cycle_is_two_colorable() {
    let p = coloring(&cycle_db(8, 2));
    let out = tabu_search(&p, &params(0)).unwrap();
    assert!(out.cost.feasible());
    assert!(p.eval_condition(0, &out.state).unwrap().0);
}

#[test]
fn tabu_without_tenure_still_runs() {
    let p = coloring(&cycle_db(6, 3));
    let out = tabu_search(&p, &SolverParams { tenure: 0, ..params(1) }).unwrap();
    assert!(out.cost.feasible());
}

#[test]
fn parameter_validation() {
    let p = coloring(&cycle_db(4, 2));
    let zero = SolverParams { max_iters: 0, ..params(0) };
    assert!(matches!(hill_climb(&p, &zero), Err(SearchError::ZeroIterations)));
    let none = SolverParams { restarts: 0, ..params(0) };
    assert!(matches!(tabu_search(&p, &none), Err(SearchError::ZeroRestarts)));
    assert!(matches!(
        tandem(&p, &params(0), &[Strategy::Hill]),
        Err(SearchError::TandemTooShort(1))
    ));
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let p = coloring(&cycle_db(7, 3));
    let stages = Strategy::Tandem(vec![Strategy::Hill, Strategy::Tabu]);
    for strategy in [Strategy::Hill, Strategy::Tabu, stages] {
        let one = solve(&p, &SolverParams { threads: Some(1), ..params(9) }, &strategy).unwrap();
        let four = solve(&p, &SolverParams { threads: Some(4), ..params(9) }, &strategy).unwrap();
        let again = solve(&p, &SolverParams { threads: Some(1), ..params(9) }, &strategy).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, again);
    }
}

#[test]
fn hill_climbing_never_accepts_worse() {
    let p = coloring(&cycle_db(9, 3));
    let out = hill_climb(&p, &params(4)).unwrap();
    assert_eq!(out.trace.len(), 8);
    for run in &out.trace {
        assert!(run.accepted.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn npalg_queries_solve_by_local_search() {
    for name in ["coloring-paper-3", "independent-set-k2", "two-coloring-paper"] {
        let loaded = corpus::fixture(name).unwrap().load().unwrap();
        let Body::Query(q) = &loaded.body else { panic!("{name}") };
        let space = NpAlgSpace::new(q, &loaded.db).unwrap();
        let out = tabu_search(&space, &params(0)).unwrap();
        assert!(out.cost.feasible(), "{name}");
        assert!(check(q, &loaded.db, &space.witness(&out.state)).unwrap(), "{name}");
    }
}

#[test]
fn timetabling_toy_reaches_optimum() {
    let loaded = corpus::fixture("timetabling-toy").unwrap().load().unwrap();
    let Body::Spec(spec) = &loaded.body else { panic!() };
    let p = lower_spec(spec, &loaded.db).unwrap();
    let out = tabu_search(&p, &SolverParams::default()).unwrap();
    assert!(out.cost.feasible());
    assert_eq!(out.cost.objective, Some(14));
}

proptest! {
    #[test]
    fn moves_stay_inside_the_space(seed in any::<u64>(), fixture in 0usize..3) {
        let name = ["timetabling-toy", "aircraft-toy", "graph-coloring-sql"][fixture];
        let loaded = corpus::fixture(name).unwrap().load().unwrap();
        let Body::Spec(spec) = &loaded.body else { panic!() };
        let p = lower_spec(spec, &loaded.db).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(p.layout(), &mut rng).unwrap();
        prop_assert!(is_valid(p.layout(), &s));
        for m in neighborhood(p.layout(), &s) {
            let mut t = s.clone();
            m.apply(&mut t);
            prop_assert!(is_valid(p.layout(), &t));
            prop_assert_ne!(&t, &s);
        }
    }
}
