//! Acceptance gate: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use npalg::cli::{solve_input, GlobalOpts, SolverKind};
use npalg::consql::{lower_spec, parse_spec, SearchProblem};
use npalg::corpus::{self, fixtures_dir, Body};
use npalg::guess::{
    check, count_extensions, enumerate_exact, relation_of, solve_exact, ExactOptions, GuessDecl,
    NpAlgQuery, Witness,
};
use npalg::polyfrag::solve_poly;
use npalg::relation::{evaluate, AlgebraExpr, Constant, Database, Relation, Schema, Tuple};
use npalg::search::{
    exhaustive, hill_climb, is_valid, neighborhood, random_state, solve, tabu_search, Cost,
    NpAlgSpace, SearchOutcome, SearchSpace, SolverParams, Strategy,
};
use npalg::sugar::{self, FunctionKind, SizeCmp};
use npalg::translate::{
    build_psi, forced_gate_extension, gate_name, gen_succinct_3col, succinct_db,
    succinct_exact_options, translate_fo, Circuit, EsoSentence, FoFormula, Gate, GateKind, Term,
    Vocab,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Counts cases and remembers the first mismatch.
#[derive(Default)]
struct Tally {
    cases: u64,
    mismatches: u64,
    first: Option<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.mismatches += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(&self, label: &str) -> Result<String, String> {
        match &self.first {
            None => Ok(format!("{label}: {} cases", self.cases)),
            Some(f) => Err(format!(
                "{label}: {} of {} cases mismatch, first: {f}",
                self.mismatches, self.cases
            )),
        }
    }
}

fn int(v: i64) -> Constant {
    Constant::Int(v)
}

fn tuple(vals: &[i64]) -> Tuple {
    vals.iter().map(|&v| int(v)).collect()
}

fn rel(arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Relation {
    relation_of(arity, tuples).expect("tuples have the stated arity")
}

/// All tuples of `{1..m}^k` in lexicographic order.
fn power(m: i64, k: usize) -> Vec<Tuple> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t: Tuple| {
                (1..=m).map(move |v| {
                    let mut t = t.clone();
                    t.push(int(v));
                    t
                })
            })
            .collect();
    }
    out
}

fn subsets(items: &[Tuple]) -> impl Iterator<Item = Vec<Tuple>> + '_ {
    (0u64..1 << items.len()).map(move |mask| {
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, t)| t.clone())
            .collect()
    })
}

fn random_subset(items: &[Tuple], p: f64, rng: &mut ChaCha8Rng) -> Vec<Tuple> {
    items.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// Database whose active domain is `{1..m}`.
fn universe(m: i64) -> Database {
    Database::from_relations([(
        "U",
        Relation::unary(Schema::named(Some("U"), &["u"]), 1..=m).expect("unary"),
    )])
}

fn ext(pairs: Vec<(&str, Relation)>) -> BTreeMap<String, Relation> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn is_empty(e: &AlgebraExpr, db: &Database, ext: &BTreeMap<String, Relation>) -> Result<bool, String> {
    evaluate(e, db, ext).map(|r| r.is_empty()).map_err(err)
}

fn g(name: &str) -> AlgebraExpr {
    AlgebraExpr::guessed(name)
}

fn set(ts: &[Tuple]) -> BTreeSet<Tuple> {
    ts.iter().cloned().collect()
}

fn ival(c: &Constant) -> i64 {
    c.as_int().expect("integer constant")
}

// 1

fn sample_instance() -> Outcome {
    let loaded = corpus::fixture("coloring-paper-3").map_err(err)?.load().map_err(err)?;
    let Body::Query(q) = &loaded.body else {
        return Err("fixture is not a query".into());
    };
    let db = &loaded.db;
    let nodes: BTreeSet<i64> = db.dom().iter().map(ival).collect();
    ensure(nodes == (1..=4).collect(), || format!("DOM {nodes:?}"))?;
    let w = Witness::new()
        .with("Q1", rel(1, [tuple(&[2]), tuple(&[4])]))
        .with("Q2", rel(1, [tuple(&[1])]))
        .with("Q3", rel(1, [tuple(&[3])]));
    let fail = q.eval_fail(db, &w).map_err(err)?;
    ensure(fail.is_empty(), || format!("FAIL has {} tuples on the witness", fail.len()))?;
    let exact = solve_exact(q, db, &ExactOptions::default())
        .map_err(err)?
        .ok_or("solve_exact answered no")?;
    ensure(check(q, db, &exact).map_err(err)?, || "exact witness fails check".into())?;
    let space = NpAlgSpace::new(q, db).map_err(err)?;
    let out = hill_climb(&space, &SolverParams::default()).map_err(err)?;
    ensure(out.cost.feasible(), || format!("hill climbing ended at {:?}", out.cost))?;
    ensure(check(q, db, &space.witness(&out.state)).map_err(err)?, || {
        "hill-climbing witness fails check".into()
    })?;
    Ok("witness, exact and hill climbing agree".into())
}

// 2

fn counting() -> Outcome {
    let db = universe(2);
    let never_fails = AlgebraExpr::dom().minus(AlgebraExpr::dom());
    let mut seen = Vec::new();
    for (arity, expected) in [(1usize, 4u64), (2, 16)] {
        let q = NpAlgQuery::new(never_fails.clone()).guess("G", arity);
        let e = enumerate_exact(&q, &db, &ExactOptions::default()).map_err(err)?;
        let distinct: BTreeSet<Vec<Tuple>> = e
            .solutions
            .iter()
            .map(|w| w.get("G").expect("G").sorted_owned())
            .collect();
        let counted = count_extensions(&GuessDecl::new("G", arity), &db).map_err(err)?;
        ensure(
            e.visited == expected
                && e.solutions.len() as u64 == expected
                && distinct.len() as u64 == expected
                && counted == expected,
            || {
                format!(
                    "arity {arity}: visited {}, solutions {}, distinct {}, counted {counted}, expected {expected}",
                    e.visited,
                    e.solutions.len(),
                    distinct.len()
                )
            },
        )?;
        seen.push(format!("arity {arity}: {expected}"));
    }
    Ok(seen.join(", "))
}

// 3

fn is_function(fun: &[Tuple], d: usize) -> bool {
    let mut image: BTreeMap<&[Constant], &[Constant]> = BTreeMap::new();
    fun.iter()
        .all(|t| *image.entry(&t[..d]).or_insert(&t[d..]) == &t[d..])
}

fn function_oracle(kind: FunctionKind, fun: &[Tuple], dom: &[Tuple], range: &[Tuple], d: usize) -> bool {
    let (dom, range) = (set(dom), set(range));
    let args: BTreeSet<Tuple> = fun.iter().map(|t| t[..d].to_vec()).collect();
    let images: BTreeSet<Tuple> = fun.iter().map(|t| t[d..].to_vec()).collect();
    match kind {
        FunctionKind::Function => args.is_subset(&dom) && images.is_subset(&range) && is_function(fun, d),
        FunctionKind::Total => dom.is_subset(&args),
        FunctionKind::Surjective => range.is_subset(&images),
        FunctionKind::Injective => {
            let swapped: Vec<Tuple> = fun.iter().map(|t| [&t[d..], &t[..d]].concat()).collect();
            is_function(&swapped, fun.first().map_or(0, |t| t.len() - d))
        }
    }
}

fn successor_oracle(succ: &[Tuple], n: &[Tuple]) -> bool {
    let mut order: Vec<Tuple> = n.to_vec();
    let target = set(succ);
    // all orderings of at most three elements
    let mut perms = Vec::new();
    permutations(&mut order, 0, &mut perms);
    perms.into_iter().any(|p| {
        let chain: BTreeSet<Tuple> = p.windows(2).map(|w| [w[0].clone(), w[1].clone()].concat()).collect();
        chain == target
    })
}

fn permutations(items: &mut Vec<Tuple>, from: usize, out: &mut Vec<Vec<Tuple>>) {
    if from == items.len() {
        out.push(items.clone());
        return;
    }
    for i in from..items.len() {
        items.swap(from, i);
        permutations(items, from + 1, out);
        items.swap(from, i);
    }
}

fn permutation_oracle(perm: &[Tuple], n: &[Tuple]) -> bool {
    function_oracle(FunctionKind::Function, perm, n, n, 1)
        && function_oracle(FunctionKind::Total, perm, n, n, 1)
        && function_oracle(FunctionKind::Injective, perm, n, n, 1)
        && function_oracle(FunctionKind::Surjective, perm, n, n, 1)
}

fn sugar_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut report = Vec::new();

    let mut t = Tally::default();
    for m in 1..=3 {
        let db = universe(m);
        for k in 1..=2 {
            let all = power(m, k);
            let expr = sugar::complement(g("R"), k).map_err(err)?;
            let emptiness = sugar::empty(g("R"));
            for r in subsets(&all) {
                let e = ext(vec![("R", rel(k, r.clone()))]);
                let got = evaluate(&expr, &db, &e).map_err(err)?;
                let want: Vec<Tuple> = all.iter().filter(|x| !r.contains(x)).cloned().collect();
                t.record(set(&got.sorted_owned()) == set(&want), || format!("complement of {r:?}"));
                let empty = is_empty(&emptiness, &db, &e)?;
                t.record(empty == !r.is_empty(), || format!("empty({r:?})"));
            }
        }
    }
    report.push(t.finish("complement/empty")?);

    let mut t = Tally::default();
    for m in 1..=3 {
        let db = universe(m);
        let all = power(m, 1);
        let subs: Vec<Vec<Tuple>> = subsets(&all).collect();
        for parts in 1..=3usize {
            let names: Vec<String> = (1..=parts).map(|i| format!("P{i}")).collect();
            let expr = sugar::fail_partition(g("N"), 1, names.iter().map(|n| g(n)).collect()).map_err(err)?;
            let configs = subs.len().pow(parts as u32 + 1);
            for idx in 0..configs {
                let mut rest = idx;
                let mut pick = || {
                    let s = subs[rest % subs.len()].clone();
                    rest /= subs.len();
                    s
                };
                let n = pick();
                let ps: Vec<Vec<Tuple>> = (0..parts).map(|_| pick()).collect();
                let mut e = ext(vec![("N", rel(1, n.clone()))]);
                for (name, p) in names.iter().zip(&ps) {
                    e.insert(name.clone(), rel(1, p.clone()));
                }
                let union: BTreeSet<Tuple> = ps.iter().flatten().cloned().collect();
                let disjoint = ps.iter().map(Vec::len).sum::<usize>() == union.len();
                let want = disjoint && union == set(&n);
                t.record(is_empty(&expr, &db, &e)? == want, || format!("partition {n:?} into {ps:?}"));
            }
        }
        // pairs, sampled
        let pairs = power(m, 2);
        let expr = sugar::fail_partition(g("N"), 2, vec![g("P1"), g("P2"), g("P3")]).map_err(err)?;
        for _ in 0..1000 / 3 {
            let n = random_subset(&pairs, 0.5, &mut rng);
            let mut ps: Vec<Vec<Tuple>> = vec![vec![]; 3];
            for x in &n {
                if rng.gen_bool(0.9) {
                    ps[rng.gen_range(0..3)].push(x.clone());
                }
            }
            if rng.gen_bool(0.2) {
                let extra = pairs.choose(&mut rng).expect("non-empty").clone();
                ps[rng.gen_range(0..3)].push(extra);
            }
            for p in &mut ps {
                p.sort();
                p.dedup();
            }
            let e = ext(vec![
                ("N", rel(2, n.clone())),
                ("P1", rel(2, ps[0].clone())),
                ("P2", rel(2, ps[1].clone())),
                ("P3", rel(2, ps[2].clone())),
            ]);
            let union: BTreeSet<Tuple> = ps.iter().flatten().cloned().collect();
            let want = ps.iter().map(Vec::len).sum::<usize>() == union.len() && union == set(&n);
            t.record(is_empty(&expr, &db, &e)? == want, || format!("pair partition {n:?} into {ps:?}"));
        }
    }
    report.push(t.finish("partition")?);

    let kinds = [
        FunctionKind::Function,
        FunctionKind::Total,
        FunctionKind::Injective,
        FunctionKind::Surjective,
    ];
    let mut t = Tally::default();
    for m in 1..=3 {
        let db = universe(m);
        let unary = power(m, 1);
        let pairs = power(m, 2);
        let triples = power(m, 3);
        let subs: Vec<Vec<Tuple>> = subsets(&unary).collect();
        for kind in kinds {
            let expr = sugar::fail_function(kind, g("F"), g("D"), g("R"), 1, 1).map_err(err)?;
            for fun in subsets(&pairs) {
                for dom in &subs {
                    for range in &subs {
                        let e = ext(vec![
                            ("F", rel(2, fun.clone())),
                            ("D", rel(1, dom.clone())),
                            ("R", rel(1, range.clone())),
                        ]);
                        let want = function_oracle(kind, &fun, dom, range, 1);
                        t.record(is_empty(&expr, &db, &e)? == want, || {
                            format!("{kind:?} {fun:?} over {dom:?} -> {range:?}")
                        });
                    }
                }
            }
            // binary arguments, sampled
            let expr = sugar::fail_function(kind, g("F"), g("D"), g("R"), 2, 1).map_err(err)?;
            for _ in 0..1000 / 3 {
                let dom = random_subset(&pairs, 0.6, &mut rng);
                let range = random_subset(&unary, 0.7, &mut rng);
                let mut fun = Vec::new();
                for a in &dom {
                    if rng.gen_bool(0.8) {
                        fun.push([a.clone(), unary.choose(&mut rng).expect("non-empty").clone()].concat());
                    }
                }
                if rng.gen_bool(0.3) {
                    fun.push(triples.choose(&mut rng).expect("non-empty").clone());
                }
                let e = ext(vec![
                    ("F", rel(3, fun.clone())),
                    ("D", rel(2, dom.clone())),
                    ("R", rel(1, range.clone())),
                ]);
                let want = function_oracle(kind, &fun, &dom, &range, 2);
                t.record(is_empty(&expr, &db, &e)? == want, || {
                    format!("{kind:?} {fun:?} over {dom:?} -> {range:?}")
                });
            }
        }
    }
    report.push(t.finish("function kinds")?);

    let mut t = Tally::default();
    for m in 1..=3 {
        let db = universe(m);
        let unary = power(m, 1);
        let subs: Vec<Vec<Tuple>> = subsets(&unary).collect();
        for cmp in [SizeCmp::Geq, SizeCmp::Leq, SizeCmp::Eq] {
            let built = sugar::fail_size(cmp, "AUX", g("N"), 1, g("K"), 1).map_err(err)?;
            let q = NpAlgQuery::new(built.expr)
                .guess("N", 1)
                .guess("K", 1)
                .with_guesses(built.aux);
            for n in &subs {
                for k in &subs {
                    let opts = ExactOptions {
                        fixed: ext(vec![("N", rel(1, n.clone())), ("K", rel(1, k.clone()))]),
                        ..ExactOptions::default()
                    };
                    let got = solve_exact(&q, &db, &opts).map_err(err)?.is_some();
                    let want = match cmp {
                        SizeCmp::Geq => n.len() >= k.len(),
                        SizeCmp::Leq => n.len() <= k.len(),
                        SizeCmp::Eq => n.len() == k.len(),
                    };
                    t.record(got == want, || format!("{cmp:?} |{n:?}| vs |{k:?}|"));
                }
            }
        }
    }
    report.push(t.finish("size")?);

    let mut t = Tally::default();
    for m in 1..=3 {
        let db = universe(m);
        let unary = power(m, 1);
        let pairs = power(m, 2);
        let built = sugar::fail_successor("SUCC", g("N"), 1, "LESS").map_err(err)?;
        let q = NpAlgQuery::new(built.expr)
            .guess("SUCC", 1 + 1)
            .guess("N", 1)
            .with_guesses(built.aux);
        let perm = sugar::fail_permutation("PERM", g("N"), 1).map_err(err)?;
        for n in subsets(&unary) {
            // LESS outside N×N minus the diagonal is rejected outright
            let less: Vec<Tuple> = n
                .iter()
                .flat_map(|a| n.iter().filter(move |b| *b != a).map(move |b| [a.clone(), b.clone()].concat()))
                .collect();
            for succ in subsets(&pairs) {
                let opts = ExactOptions {
                    fixed: ext(vec![("SUCC", rel(2, succ.clone())), ("N", rel(1, n.clone()))]),
                    universes: [("LESS".to_string(), less.clone())].into(),
                    ..ExactOptions::default()
                };
                let got = solve_exact(&q, &db, &opts).map_err(err)?.is_some();
                t.record(got == successor_oracle(&succ, &n), || format!("successor {succ:?} on {n:?}"));
                let e = ext(vec![("PERM", rel(2, succ.clone())), ("N", rel(1, n.clone()))]);
                t.record(is_empty(&perm, &db, &e)? == permutation_oracle(&succ, &n), || {
                    format!("permutation {succ:?} on {n:?}")
                });
            }
        }
    }
    report.push(t.finish("successor/permutation")?);
    Ok(report.join("; "))
}

// 4

fn graph_db(n: i64, edges: &[(i64, i64)]) -> Database {
    let nodes = Relation::unary(Schema::named(Some("NODES"), &["n"]), 1..=n).expect("unary");
    let sym = edges.iter().flat_map(|&(a, b)| [tuple(&[a, b]), tuple(&[b, a])]);
    let e = Relation::from_tuples(Schema::named(Some("EDGES"), &["f", "t"]), sym).expect("pairs");
    Database::from_relations([("NODES", nodes), ("EDGES", e)])
}

fn sides(n: i64) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << n).map(move |mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
}

fn two_colorable(n: i64, edges: &[(i64, i64)]) -> bool {
    sides(n).any(|s| edges.iter().all(|&(a, b)| s[a as usize - 1] != s[b as usize - 1]))
}

fn two_cliques(n: i64, edges: &[(i64, i64)]) -> bool {
    let adj: BTreeSet<(i64, i64)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    sides(n).any(|s| {
        (1..=n).all(|a| {
            (1..=n).all(|b| a == b || adj.contains(&(a, b)) || s[a as usize - 1] != s[b as usize - 1])
        })
    })
}

fn poly_equivalence() -> Outcome {
    let queries = [
        ("2-coloring", corpus::two_coloring(), two_colorable as fn(i64, &[(i64, i64)]) -> bool),
        ("2-cliques", corpus::two_cliques(), two_cliques),
    ];
    let mut t = Tally::default();
    let mut graphs: Vec<(i64, Vec<(i64, i64)>)> = Vec::new();
    for n in 1..=4i64 {
        let pairs: Vec<(i64, i64)> = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).collect();
        for mask in 0u32..1 << pairs.len() {
            graphs.push((n, pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect()));
        }
    }
    let exhaustive_graphs = graphs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.gen_range(5..=6);
        let p = rng.gen_range(0.1..0.9);
        let edges = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).filter(|_| rng.gen_bool(p)).collect();
        graphs.push((n, edges));
    }
    for (n, edges) in &graphs {
        let db = graph_db(*n, edges);
        for (name, q, oracle) in &queries {
            let poly = solve_poly(q, &db).map_err(err)?;
            let exact = solve_exact(q, &db, &ExactOptions::default()).map_err(err)?;
            let brute = oracle(*n, edges);
            let witness_ok = match &poly.witness {
                Some(w) => check(q, &db, w).map_err(err)?,
                None => !poly.satisfiable,
            };
            t.record(poly.satisfiable == exact.is_some() && exact.is_some() == brute && witness_ok, || {
                format!("{name} on {n} nodes {edges:?}: poly {}, exact {}, brute {brute}", poly.satisfiable, exact.is_some())
            });
        }
    }
    let summary = t.finish(&format!("{exhaustive_graphs} exhaustive + 200 random graphs"))?;

    let n = 100;
    let side: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let edges: Vec<(i64, i64)> = (1..=n)
        .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
        .filter(|&(a, b)| side[a as usize - 1] != side[b as usize - 1])
        .filter(|_| rng.gen_bool(0.05))
        .collect();
    let db = graph_db(n, &edges);
    let q = corpus::two_coloring();
    let started = Instant::now();
    let poly = solve_poly(&q, &db).map_err(err)?;
    let elapsed = started.elapsed();
    ensure(poly.satisfiable, || "bipartite graph reported not 2-colorable".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("100-node bipartite took {elapsed:?}"))?;
    let w = poly.witness.ok_or("no witness")?;
    ensure(check(&q, &db, &w).map_err(err)?, || "bipartite witness fails check".into())?;
    Ok(format!("{summary}; 100 nodes, {} edges in {elapsed:.2?}", edges.len()))
}

// 5

const VARS: [&str; 3] = ["x", "y", "z"];

fn random_atom(vars: &[&str], guessed: bool, rng: &mut ChaCha8Rng) -> FoFormula {
    let v = |rng: &mut ChaCha8Rng| *vars.choose(rng).expect("some variable");
    let atom = match rng.gen_range(0..if guessed { 4 } else { 3 }) {
        0 => FoFormula::atom("P", &[v(rng)]),
        1 => FoFormula::atom("E", &[v(rng), v(rng)]),
        2 => FoFormula::eq(Term::var(v(rng)), Term::var(v(rng))),
        _ => FoFormula::atom("S", &[v(rng)]),
    };
    if rng.gen_bool(0.3) {
        atom.not()
    } else {
        atom
    }
}

fn random_formula(vars: &[&str], guessed: bool, rng: &mut ChaCha8Rng) -> FoFormula {
    let atoms = rng.gen_range(1..=3);
    let mut f = random_atom(vars, guessed, rng);
    for _ in 1..atoms {
        let a = random_atom(vars, guessed, rng);
        f = if rng.gen_bool(0.5) { f.and(a) } else { f.or(a) };
    }
    if rng.gen_bool(0.2) {
        f.not()
    } else {
        f
    }
}

struct Structure {
    unary: BTreeMap<String, BTreeSet<i64>>,
    edges: BTreeSet<(i64, i64)>,
}

fn holds(f: &FoFormula, s: &Structure, a: &BTreeMap<String, i64>) -> bool {
    let val = |t: &Term| match t {
        Term::Var(v) => a[v],
        Term::Const(c) => ival(c),
    };
    match f {
        FoFormula::Atom { pred, args } if pred == "E" => s.edges.contains(&(val(&args[0]), val(&args[1]))),
        FoFormula::Atom { pred, args } => s.unary[pred].contains(&val(&args[0])),
        FoFormula::Eq(x, y) => val(x) == val(y),
        FoFormula::And(x, y) => holds(x, s, a) && holds(y, s, a),
        FoFormula::Or(x, y) => holds(x, s, a) || holds(y, s, a),
        FoFormula::Not(x) => !holds(x, s, a),
    }
}

fn assignments(vars: &[String], m: i64) -> Vec<BTreeMap<String, i64>> {
    power(m, vars.len())
        .into_iter()
        .map(|t| vars.iter().cloned().zip(t.iter().map(ival)).collect())
        .collect()
}

fn random_structure(m: i64, rng: &mut ChaCha8Rng) -> (Database, Structure) {
    let p: BTreeSet<i64> = (1..=m).filter(|_| rng.gen_bool(0.5)).collect();
    let edges: BTreeSet<(i64, i64)> = (1..=m)
        .flat_map(|a| (1..=m).map(move |b| (a, b)))
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    let db = universe(m)
        .with_relation("P", rel(1, p.iter().map(|&v| tuple(&[v]))))
        .with_relation("E", rel(2, edges.iter().map(|&(a, b)| tuple(&[a, b]))));
    let s = Structure {
        unary: [("P".to_string(), p)].into(),
        edges,
    };
    (db, s)
}

fn translation_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab = Vocab::new().base("P", 1).base("E", 2);
    let mut fo = Tally::default();
    for _ in 0..500 {
        let m = rng.gen_range(1..=3);
        let nvars = rng.gen_range(1..=3);
        let phi = random_formula(&VARS[..nvars], false, &mut rng);
        let (db, s) = random_structure(m, &mut rng);
        let t = translate_fo(&phi, &vocab).map_err(err)?;
        let free: Vec<String> = phi.free_vars().into_iter().collect();
        let got = evaluate(&t.expr, &db, &BTreeMap::new()).map_err(err)?;
        let mut ok = t.vars == free && got.arity() == free.len();
        for a in assignments(&free, m) {
            let row: Tuple = free.iter().map(|v| int(a[v])).collect();
            ok &= got.contains(&row) == holds(&phi, &s, &a);
        }
        fo.record(ok, || format!("{phi:?} over DOM 1..{m}"));
    }
    let fo = fo.finish("FO")?;

    let mut eso = Tally::default();
    for _ in 0..100 {
        let m = rng.gen_range(1..=3);
        let universal: Vec<String> = VARS[..rng.gen_range(0..=2)].iter().map(|v| v.to_string()).collect();
        let existential: Vec<String> = if universal.is_empty() || rng.gen_bool(0.5) {
            vec!["z".to_string()]
        } else {
            vec![]
        };
        let bound: Vec<&str> = universal.iter().chain(&existential).map(String::as_str).collect();
        let matrix = random_formula(&bound, true, &mut rng);
        let sentence = EsoSentence {
            second_order: vec![("S".to_string(), 1)],
            universal: universal.clone(),
            existential: existential.clone(),
            matrix,
        };
        let (db, mut s) = random_structure(m, &mut rng);
        let q = build_psi(&sentence).map_err(err)?;
        let got = solve_exact(&q, &db, &ExactOptions::default()).map_err(err)?.is_some();
        let want = (0u32..1 << m).any(|mask| {
            s.unary.insert("S".into(), (1..=m).filter(|v| mask >> (v - 1) & 1 == 1).collect());
            assignments(&universal, m).iter().all(|u| {
                assignments(&existential, m).iter().any(|e| {
                    let mut a = u.clone();
                    a.extend(e.clone());
                    holds(&sentence.matrix, &s, &a)
                })
            })
        });
        eso.record(got == want, || format!("{sentence:?} over DOM 1..{m}: psi {got}, brute {want}"));
    }
    let eso = eso.finish("ESO")?;
    Ok(format!("{fo}; {eso}"))
}

// 6

fn three_colorable(nodes: u32, edges: &[(u32, u32)]) -> bool {
    (0..3u32.pow(nodes)).any(|code| {
        let color = |x: u32| code / 3u32.pow(x) % 3;
        edges.iter().all(|&(x, y)| x == y || color(x) != color(y))
    })
}

fn symmetric(pairs: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    out.sort();
    out.dedup();
    out
}

fn gate(kind: GateKind, b: usize, c: usize) -> Gate {
    Gate { kind, b, c }
}

fn succinct_circuits() -> Result<Vec<(String, Circuit)>, String> {
    let input = || gate(GateKind::In, 0, 0);
    let k4: Vec<(u32, u32)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
    let mut out = vec![
        ("empty n=1".to_string(), Circuit::from_edges(1, &[]).map_err(err)?),
        ("edge n=1".into(), Circuit::from_edges(1, &symmetric(&[(0, 1)])).map_err(err)?),
        ("loop n=1".into(), Circuit::from_edges(1, &[(1, 1)]).map_err(err)?),
        ("K4".into(), Circuit::from_edges(2, &symmetric(&k4)).map_err(err)?),
        ("K4 minus an edge".into(), Circuit::from_edges(2, &symmetric(&k4[1..])).map_err(err)?),
        ("C4".into(), Circuit::from_edges(2, &symmetric(&[(0, 1), (1, 2), (2, 3), (3, 0)])).map_err(err)?),
        ("triangle".into(), Circuit::from_edges(2, &symmetric(&[(0, 1), (1, 2), (0, 2)])).map_err(err)?),
        (
            "high bits differ".into(),
            Circuit::new(
                2,
                vec![
                    input(),
                    input(),
                    input(),
                    input(),
                    gate(GateKind::Not, 1, 1),
                    gate(GateKind::Not, 3, 3),
                    gate(GateKind::And, 1, 6),
                    gate(GateKind::And, 5, 3),
                    gate(GateKind::Or, 7, 8),
                ],
            )
            .map_err(err)?,
        ),
        (
            "x1 and y1, or not x2".into(),
            Circuit::new(
                2,
                vec![
                    input(),
                    input(),
                    input(),
                    input(),
                    gate(GateKind::Not, 2, 2),
                    gate(GateKind::And, 1, 3),
                    gate(GateKind::Or, 6, 5),
                ],
            )
            .map_err(err)?,
        ),
    ];
    let and_n1 = npalg::io::load_circuit(&fixtures_dir().join("circuits/and_n1.json")).map_err(err)?;
    out.push(("and_n1.json".into(), and_n1));
    Ok(out)
}

fn succinct_pipeline() -> Outcome {
    let db = succinct_db();
    let (mut perturbations, mut yes, mut no) = (0u64, 0, 0);
    for (name, c) in succinct_circuits()? {
        let q = gen_succinct_3col(&c).map_err(err)?;
        let forced = forced_gate_extension(&c).map_err(err)?;
        let mut w = Witness {
            extensions: forced.clone(),
        };
        for i in 1..=3 {
            w = w.with(&format!("COL{i}"), Relation::with_arity(c.n()));
        }
        let fail = q.eval_let("FAIL_CIRCUIT", &db, &w).map_err(err)?;
        ensure(fail.is_empty(), || format!("{name}: FAIL_CIRCUIT non-empty on the forced extension"))?;
        ensure(q.let_is_empty("FAIL_CIRCUIT", &db, &w).map_err(err)?, || format!("{name}: emptiness test disagrees with evaluation"))?;
        let width = 2 * c.n();
        let tuples: Vec<Tuple> = {
            let dom = db.dom().to_vec();
            let mut out = vec![vec![]];
            for _ in 0..width {
                out = out
                    .into_iter()
                    .flat_map(|t: Tuple| {
                        dom.iter().map(move |v| {
                            let mut t = t.clone();
                            t.push(v.clone());
                            t
                        })
                    })
                    .collect();
            }
            out
        };
        for i in 1..=c.gates().len() {
            let gname = gate_name(i);
            for t in &tuples {
                let mut rows: BTreeSet<Tuple> = forced[&gname].iter().cloned().collect();
                if !rows.remove(t) {
                    rows.insert(t.clone());
                }
                let mut pw = w.clone();
                pw.extensions.insert(gname.clone(), rel(width, rows));
                let empty = q.let_is_empty("FAIL_CIRCUIT", &db, &pw).map_err(err)?;
                ensure(!empty, || format!("{name}: toggling {t:?} in {gname} leaves FAIL_CIRCUIT empty"))?;
                perturbations += 1;
            }
        }
        let opts = succinct_exact_options(&c).map_err(err)?;
        let found = solve_exact(&q, &db, &opts).map_err(err)?;
        let want = three_colorable(1 << c.n(), &c.expand());
        ensure(found.is_some() == want, || format!("{name}: query says {}, brute force {want}", found.is_some()))?;
        if let Some(w) = &found {
            ensure(check(&q, &db, w).map_err(err)?, || format!("{name}: witness fails check"))?;
        }
        if want {
            yes += 1;
        } else {
            no += 1;
        }
    }
    ensure(yes > 0 && no > 0, || "circuits cover only one answer".into())?;
    Ok(format!("{} circuits ({yes} colorable), {perturbations} perturbations", yes + no))
}

// 7

fn listing(file: &str) -> Result<String, String> {
    fs::read_to_string(fixtures_dir().join("consql").join(file)).map_err(err)
}

fn spec_problem(fixture: &str) -> Result<SearchProblem, String> {
    let loaded = corpus::fixture(fixture).map_err(err)?.load().map_err(err)?;
    let Body::Spec(spec) = &loaded.body else {
        return Err(format!("{fixture} is not a specification"));
    };
    lower_spec(spec, &loaded.db).map_err(err)
}

fn consql_end_to_end() -> Outcome {
    let shapes = [
        ("graph_coloring.consql", "Graph_Coloring", 1, 1, 1),
        ("timetabling.consql", "University_Timetabling", 1, 4, 1),
        ("aircraft_landing.consql", "Aircraft_Landing", 1, 2, 1),
    ];
    for (file, name, guesses, checks, returns) in shapes {
        let spec = parse_spec(&listing(file)?).map_err(|e| format!("{file}: {e}"))?;
        ensure(
            spec.name == name && spec.guesses.len() == guesses && spec.checks.len() == checks && spec.returns.len() == returns,
            || format!("{file}: parsed {} with {} guesses, {} checks", spec.name, spec.guesses.len(), spec.checks.len()),
        )?;
    }

    let coloring = spec_problem("graph-coloring-sql")?;
    let best = exhaustive(&coloring, 10_000).map_err(err)?.ok_or("empty space")?;
    ensure(best.cost.feasible(), || "coloring instance reported infeasible".into())?;
    let solution = coloring.eval_returns(Some(&best.state)).map_err(err)?;
    ensure(solution["SOLUTION"].len() == 4, || "SOLUTION does not color 4 nodes".into())?;

    let mut parts = vec!["listings parse, coloring solved".to_string()];
    for (fixture, optimum) in [("timetabling-toy", 14), ("aircraft-toy", 2), ("aircraft-single", 0)] {
        let problem = spec_problem(fixture)?;
        let size = problem.space_size();
        ensure(size <= 10_000, || format!("{fixture}: {size} states"))?;
        let best = exhaustive(&problem, 10_000).map_err(err)?.ok_or("empty space")?;
        ensure(best.cost.feasible() && best.cost.objective == Some(optimum), || {
            format!("{fixture}: exhaustive optimum {:?}, fixture says {optimum}", best.cost)
        })?;
        let params = SolverParams {
            seed: 0,
            restarts: 20,
            ..SolverParams::default()
        };
        let tabu = tabu_search(&problem, &params).map_err(err)?;
        ensure(tabu.cost == best.cost, || {
            format!("{fixture}: tabu reached {:?}, optimum {:?}", tabu.cost, best.cost)
        })?;
        parts.push(format!("{fixture} optimum {optimum} over {size} states"));
    }
    Ok(parts.join("; "))
}

// 8

fn monotone(out: &SearchOutcome) -> bool {
    out.trace
        .iter()
        .all(|run| run.accepted.windows(2).all(|w| w[1] <= w[0]))
}

fn space_properties<S: SearchSpace>(name: &str, space: &S) -> Result<u64, String> {
    let mut moves = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let s = random_state(space.layout(), &mut rng).map_err(err)?;
        ensure(is_valid(space.layout(), &s), || format!("{name}: invalid random state"))?;
        for m in neighborhood(space.layout(), &s) {
            let mut t = s.clone();
            m.apply(&mut t);
            ensure(is_valid(space.layout(), &t), || format!("{name}: move {m:?} breaks the shape"))?;
            moves += 1;
        }
    }
    let params = |threads| SolverParams {
        seed: 11,
        max_iters: 200,
        restarts: 4,
        threads: Some(threads),
        ..SolverParams::default()
    };
    let strategies = [
        Strategy::Hill,
        Strategy::Tabu,
        Strategy::Tandem(vec![Strategy::Hill, Strategy::Tabu]),
    ];
    for strategy in strategies {
        let one = solve(space, &params(1), &strategy).map_err(err)?;
        let again = solve(space, &params(1), &strategy).map_err(err)?;
        let four = solve(space, &params(4), &strategy).map_err(err)?;
        ensure(one == again, || format!("{name}: {} differs between runs", strategy.name()))?;
        ensure(one == four, || format!("{name}: {} differs between 1 and 4 threads", strategy.name()))?;
        ensure(is_valid(space.layout(), &one.state), || format!("{name}: invalid final state"))?;
        let cost: Cost = space.cost(&one.state).map_err(err)?;
        ensure(cost == one.cost, || format!("{name}: reported cost differs from the state's"))?;
        if strategy == Strategy::Hill {
            ensure(monotone(&one), || format!("{name}: hill climbing accepted a worse state"))?;
        }
    }
    Ok(moves)
}

fn report_json(input: &std::path::Path, data: &std::path::Path, threads: usize) -> Result<String, String> {
    let opts = GlobalOpts {
        solver: SolverKind::Tabu,
        seed: 0,
        max_iters: Some(200),
        restarts: Some(4),
        tenure: None,
        budget: None,
        threads: Some(threads),
        json: None,
        timing: false,
    };
    solve_input(input, Some(data), &opts).map(|r| r.to_json()).map_err(err)
}

fn local_search_properties() -> Outcome {
    let fixtures = corpus::fixtures().map_err(err)?;
    let mut moves = 0;
    for f in &fixtures {
        let loaded = f.load().map_err(err)?;
        moves += match &loaded.body {
            Body::Query(q) => space_properties(&f.name, &NpAlgSpace::new(q, &loaded.db).map_err(err)?)?,
            Body::Spec(spec) => space_properties(&f.name, &lower_spec(spec, &loaded.db).map_err(err)?)?,
        };
        let input = fixtures_dir().join(f.query.as_ref().or(f.spec.as_ref()).expect("query or spec"));
        let data = fixtures_dir().join(&f.data);
        let one = report_json(&input, &data, 1)?;
        ensure(one == report_json(&input, &data, 1)?, || format!("{}: reports differ between runs", f.name))?;
        ensure(one == report_json(&input, &data, 4)?, || format!("{}: reports differ between 1 and 4 threads", f.name))?;
    }
    Ok(format!("{} fixtures, {moves} moves checked", fixtures.len()))
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        (1, "worked-instance regression", Some(Duration::from_secs(1)), sample_instance),
        (2, "exact-semantics counting", None, counting),
        (3, "sugar oracle suite", Some(Duration::from_secs(60)), sugar_suite),
        (4, "polynomial-fragment equivalence", None, poly_equivalence),
        (5, "translation fidelity", None, translation_fidelity),
        (6, "succinct 3-coloring pipeline", Some(Duration::from_secs(30)), succinct_pipeline),
        (7, "conSQL end-to-end", Some(Duration::from_secs(60)), consql_end_to_end),
        (8, "local-search properties", None, local_search_properties),
    ];
    let mut failed = 0;
    for (n, title, limit, run) in criteria {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {n} {title} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {title} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
