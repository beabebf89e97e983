//! Building FAIL expressions from the derived constraints: partitions,
//! functions, size comparisons and permutations.

use std::collections::BTreeMap;
use std::error::Error;

use npalg::guess::{relation_of, solve_exact, ExactOptions, NpAlgQuery};
use npalg::relation::{evaluate, AlgebraExpr, CmpOp, Constant, Database, Pred, Relation, Schema};
use npalg::sugar::{complement, fail_function, fail_partition, fail_permutation, fail_size, FunctionKind, SizeCmp};
use npalg::text::print_algebra;

fn main() -> Result<(), Box<dyn Error>> {
    let n = Relation::unary(Schema::named(None, &["n"]), 1..=3i64)?;
    let db = Database::from_relations([("N", n)]);
    let node = AlgebraExpr::base("N");

    let parts = vec![AlgebraExpr::guessed("A"), AlgebraExpr::guessed("B")];
    let partition = fail_partition(node.clone(), 1, parts)?;
    println!("partition: {}", print_algebra(&partition));
    let ext = BTreeMap::from([
        ("A".to_string(), relation_of(1, [vec![Constant::Int(1)]])?),
        ("B".to_string(), relation_of(1, [vec![Constant::Int(2)], vec![Constant::Int(3)]])?),
    ]);
    println!("  FAIL on {{1}} | {{2,3}} = {}", evaluate(&partition, &db, &ext)?);
    println!("  not A = {}", evaluate(&complement(AlgebraExpr::guessed("A"), 1)?, &db, &ext)?);

    let bijection = fail_function(FunctionKind::Injective, AlgebraExpr::guessed("F"), node.clone(), node.clone(), 1, 1)?
        .union(fail_function(FunctionKind::Total, AlgebraExpr::guessed("F"), node.clone(), node.clone(), 1, 1)?);
    let q = NpAlgQuery::new(bijection).guess("F", 2);
    let f = solve_exact(&q, &db, &ExactOptions::default())?.expect("a bijection exists");
    println!("some total injective F: {}", f.extensions["F"]);

    let perm = NpAlgQuery::new(fail_permutation("P", node.clone(), 1)?).guess("P", 2);
    let p = solve_exact(&perm, &db, &ExactOptions::default())?.expect("a permutation exists");
    println!("some permutation of N: {}", p.extensions["P"]);

    let size = fail_size(SizeCmp::Geq, "M", AlgebraExpr::guessed("S"), 1, node.clone().select(Pred::col_const(1, CmpOp::Le, Constant::Int(2))), 1)?;
    let q = NpAlgQuery::new(size.expr.union(AlgebraExpr::guessed("S").minus(node)))
        .guess("S", 1)
        .with_guesses(size.aux);
    let s = solve_exact(&q, &db, &ExactOptions::default())?.expect("S = N works");
    println!("some S with |S| >= 2: {}", s.extensions["S"]);
    Ok(())
}
