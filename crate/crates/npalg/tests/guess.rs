use std::collections::BTreeMap;
use std::fs;

use npalg::corpus::fixtures_dir;
use npalg::guess::{
    check, count_extensions, enumerate_exact, found_expr, relation_of, solve_exact, ExactOptions,
    GuessDecl, GuessError, NpAlgQuery, Witness,
};
use npalg::relation::{evaluate, AlgebraExpr, Constant, Database, Relation, Schema};
use npalg::text::parse_query;
use proptest::prelude::*;

fn graph(n: i64, edges: &[(i64, i64)]) -> Database {
    let nodes = Relation::unary(Schema::named(None, &["n"]), 1..=n).unwrap();
    let edges = Relation::from_tuples(
        Schema::named(None, &["from", "to"]),
        edges.iter().map(|&(a, b)| vec![Constant::Int(a), Constant::Int(b)]),
    )
    .unwrap();
    Database::from_relations([("NODES", nodes), ("EDGES", edges)])
}

fn query(file: &str) -> NpAlgQuery {
    parse_query(&fs::read_to_string(fixtures_dir().join("queries").join(file)).unwrap()).unwrap()
}

fn unary(values: &[i64]) -> Relation {
    relation_of(1, values.iter().map(|&v| vec![Constant::Int(v)])).unwrap()
}

fn bipartite(n: i64, edges: &[(i64, i64)]) -> bool {
    (0u32..1 << n).any(|mask| {
        edges
            .iter()
            .all(|&(a, b)| (mask >> (a - 1)) & 1 != (mask >> (b - 1)) & 1)
    })
}

fn never_fails() -> NpAlgQuery {
    NpAlgQuery::new(AlgebraExpr::dom().minus(AlgebraExpr::dom())).guess("Q", 1)
}

#[test]
fn known_witness_and_a_broken_one() {
    let q = query("coloring-3.npalg");
    let db = graph(4, &[(1, 2), (1, 4), (2, 3)]);
    let good = Witness::new()
        .with("Q1", unary(&[2, 4]))
        .with("Q2", unary(&[1]))
        .with("Q3", unary(&[3]));
    assert!(check(&q, &db, &good).unwrap());
    let bad = Witness::new()
        .with("Q1", unary(&[1, 2]))
        .with("Q2", unary(&[3]))
        .with("Q3", unary(&[4]));
    assert!(!check(&q, &db, &bad).unwrap());
}

#[test]
fn witness_errors() {
    let q = query("two-coloring.npalg");
    let db = graph(2, &[(1, 2)]);
    assert!(matches!(
        check(&q, &db, &Witness::new()),
        Err(GuessError::MissingExtension(_))
    ));
    let outside = Witness::new().with("C", unary(&[9]));
    assert!(matches!(check(&q, &db, &outside), Err(GuessError::WitnessDomain(_))));
    let wide = Witness::new().with("C", relation_of(2, []).unwrap());
    assert!(matches!(check(&q, &db, &wide), Err(GuessError::WitnessArity { .. })));
}

#[test]
fn triangle_is_not_two_colorable() {
    let db = graph(3, &[(1, 2), (2, 3), (3, 1)]);
    let out = solve_exact(&query("two-coloring.npalg"), &db, &ExactOptions::default()).unwrap();
    assert!(out.is_none());
}

#[test]
fn budget_exhaustion_is_not_a_no() {
    let db = graph(4, &[(1, 2), (2, 3), (3, 1)]);
    let opts = ExactOptions { budget: 10, ..ExactOptions::default() };
    let out = solve_exact(&query("coloring-3.npalg"), &db, &opts);
    assert!(matches!(out, Err(GuessError::BudgetExhausted(10))));
}

#[test]
fn extension_counts() {
    let two = graph(2, &[]);
    let three = graph(3, &[]);
    assert_eq!(count_extensions(&GuessDecl::new("Q", 1), &two).unwrap(), 4);
    assert_eq!(count_extensions(&GuessDecl::new("Q", 2), &two).unwrap(), 16);
    assert_eq!(count_extensions(&GuessDecl::new("Q", 1), &three).unwrap(), 8);
    assert!(count_extensions(&GuessDecl::new("Q", 3), &graph(5, &[])).is_err());
}

#[test]
fn enumeration_visits_the_whole_product() {
    let db = graph(2, &[]);
    let q = never_fails().guess("R", 2);
    let e = enumerate_exact(&q, &db, &ExactOptions::default()).unwrap();
    assert_eq!(e.visited, 4 * 16);
    assert_eq!(e.solutions.len(), 64);
    let empty = enumerate_exact(&never_fails(), &Database::new(), &ExactOptions::default()).unwrap();
    assert_eq!(empty.visited, 1);
}

#[test]
fn found_is_the_complement_of_fail() {
    let db = graph(2, &[(1, 2)]);
    let empty = BTreeMap::from([("Q".to_string(), unary(&[]))]);
    let found = evaluate(&found_expr(&never_fails()), &db, &empty).unwrap();
    assert_eq!(found.len(), 2);
    let failing = NpAlgQuery::new(AlgebraExpr::dom()).guess("Q", 1);
    assert!(evaluate(&found_expr(&failing), &db, &empty).unwrap().is_empty());
    assert!(evaluate(&found_expr(&never_fails()), &Database::new(), &empty)
        .unwrap()
        .is_empty());
}

#[test]
fn parallel_search_matches_sequential() {
    let db = graph(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
    let q = query("coloring-3.npalg");
    let one = ExactOptions { threads: Some(1), ..ExactOptions::default() };
    let four = ExactOptions { threads: Some(4), ..ExactOptions::default() };
    assert_eq!(solve_exact(&q, &db, &one).unwrap(), solve_exact(&q, &db, &four).unwrap());
}

fn small_graph() -> impl Strategy<Value = (i64, Vec<(i64, i64)>)> {
    (1i64..=4).prop_flat_map(|n| {
        let pairs: Vec<(i64, i64)> = (1..=n)
            .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
            .collect();
        let len = pairs.len();
        (Just(n), proptest::sample::subsequence(pairs, 0..=len))
    })
}

proptest! {
    #[test]
    fn exact_answers_match_brute_force((n, edges) in small_graph()) {
        let db = graph(n, &edges);
        let q = query("two-coloring.npalg");
        let out = solve_exact(&q, &db, &ExactOptions::default()).unwrap();
        prop_assert_eq!(out.is_some(), bipartite(n, &edges));
        if let Some(w) = out {
            prop_assert!(check(&q, &db, &w).unwrap());
        }
    }

    #[test]
    fn found_tracks_fail_on_every_witness((n, edges) in small_graph()) {
        let db = graph(n, &edges);
        let q = query("two-coloring.npalg");
        let found = found_expr(&q);
        let mut yes = 0;
        for mask in 0u32..1 << n {
            let members: Vec<i64> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let w = Witness::new().with("C", unary(&members));
            let ok = check(&q, &db, &w).unwrap();
            yes += ok as usize;
            let f = evaluate(&found, &db, &w.extensions).unwrap();
            prop_assert_eq!(!f.is_empty(), ok);
        }
        let all = enumerate_exact(&q, &db, &ExactOptions::default()).unwrap();
        prop_assert_eq!(all.visited, 1u64 << n);
        prop_assert_eq!(all.solutions.len(), yes);
    }
}
