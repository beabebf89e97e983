use std::collections::BTreeMap;

use npalg::relation::{evaluate, AlgebraExpr, Constant, Database, Relation, Schema, Tuple};
use npalg::translate::{
    eval_circuit, forced_gate_extension, gen_succinct_3col, is_q_free, translate_fo, Circuit,
    FoFormula, Term, Vocab,
};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug)]
struct World {
    p: Vec<i64>,
    e: Vec<(i64, i64)>,
}

fn db(m: i64, w: &World) -> Database {
    let ints = |t: &[i64]| t.iter().map(|&v| Constant::Int(v)).collect::<Tuple>();
    let u = Relation::unary(Schema::anonymous(1), 1..=m).unwrap();
    let p = Relation::from_tuples(Schema::anonymous(1), w.p.iter().map(|&v| ints(&[v]))).unwrap();
    let e = Relation::from_tuples(Schema::anonymous(2), w.e.iter().map(|&(a, b)| ints(&[a, b])))
        .unwrap();
    Database::from_relations([("U", u), ("P", p), ("E", e)])
}

fn value(t: &Term, a: &BTreeMap<String, i64>) -> i64 {
    match t {
        Term::Var(v) => a[v],
        Term::Const(c) => c.as_int().unwrap(),
    }
}

fn holds(phi: &FoFormula, w: &World, a: &BTreeMap<String, i64>) -> bool {
    match phi {
        FoFormula::Atom { pred, args } => {
            let vals: Vec<i64> = args.iter().map(|t| value(t, a)).collect();
            match pred.as_str() {
                "P" => w.p.contains(&vals[0]),
                _ => w.e.contains(&(vals[0], vals[1])),
            }
        }
        FoFormula::Eq(l, r) => value(l, a) == value(r, a),
        FoFormula::And(l, r) => holds(l, w, a) && holds(r, w, a),
        FoFormula::Or(l, r) => holds(l, w, a) || holds(r, w, a),
        FoFormula::Not(f) => !holds(f, w, a),
    }
}

fn formula() -> impl Strategy<Value = FoFormula> {
    let var = proptest::sample::select(&VARS[..]);
    let leaf = prop_oneof![
        var.clone().prop_map(|v| FoFormula::atom("P", &[v])),
        (var.clone(), var.clone()).prop_map(|(a, b)| FoFormula::atom("E", &[a, b])),
        (var.clone(), var.clone()).prop_map(|(a, b)| FoFormula::eq(Term::var(a), Term::var(b))),
        (var, 1i64..=3).prop_map(|(a, c)| FoFormula::eq(Term::var(a), Term::Const(Constant::Int(c)))),
    ];
    leaf.prop_recursive(2, 3, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            inner.prop_map(FoFormula::not),
        ]
    })
}

fn world(m: i64) -> impl Strategy<Value = World> {
    let p = proptest::collection::vec(1..=m, 0..=m as usize);
    let e = proptest::collection::vec((1..=m, 1..=m), 0..=(m * m) as usize);
    (p, e).prop_map(|(p, e)| World { p, e })
}

fn leaf_arity(e: &AlgebraExpr) -> Option<usize> {
    match e {
        AlgebraExpr::Base(n) if n == "E" => Some(2),
        AlgebraExpr::Base(_) => Some(1),
        AlgebraExpr::DomPower(k) => Some(*k),
        _ => None,
    }
}

#[test]
fn succinct_edge_circuit_round_trip() {
    let c = Circuit::from_edges(1, &[(0, 1)]).unwrap();
    assert!(eval_circuit(&c, &[false, true]).unwrap());
    assert!(!eval_circuit(&c, &[false, false]).unwrap());
    let q = gen_succinct_3col(&c).unwrap();
    let forced = forced_gate_extension(&c).unwrap();
    assert_eq!(forced.len(), c.gates().len());
    assert!(q.guesses.iter().all(|g| g.name.starts_with("COL") || forced.contains_key(&g.name)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fo_translation_matches_direct_evaluation(
        phi in formula(),
        (m, w) in (1i64..=3).prop_flat_map(|m| (Just(m), world(m))),
    ) {
        let vocab = Vocab::new().base("P", 1).base("E", 2);
        let t = translate_fo(&phi, &vocab).unwrap();
        let free: Vec<String> = phi.free_vars().into_iter().collect();
        prop_assert_eq!(&t.vars, &free);
        prop_assert!(is_q_free(&t.expr, &leaf_arity));
        let got = evaluate(&t.expr, &db(m, &w), &BTreeMap::new()).unwrap();
        let mut count = 0;
        for code in 0..m.pow(free.len() as u32) {
            let a: BTreeMap<String, i64> = free
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), code / m.pow(i as u32) % m + 1))
                .collect();
            let row: Tuple = free.iter().map(|v| Constant::Int(a[v])).collect();
            let truth = holds(&phi, &w, &a);
            count += truth as usize;
            prop_assert_eq!(got.contains(&row), truth);
        }
        prop_assert_eq!(got.len(), count);
    }
}
