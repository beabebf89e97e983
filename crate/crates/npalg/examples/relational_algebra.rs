//! Plain relational algebra over a small graph: selection, projection,
//! joins, division and powers of the active domain.

use std::collections::BTreeMap;
use std::error::Error;

use npalg::corpus::fixtures_dir;
use npalg::io::load_db;
use npalg::relation::{active_domain, dom_power, evaluate, AlgebraExpr, AttrRef, CmpOp, Pred};
use npalg::text::{parse_algebra, print_algebra};

fn main() -> Result<(), Box<dyn Error>> {
    let db = load_db(&fixtures_dir().join("data/sample-graph"))?;
    let none = BTreeMap::new();
    println!("DOM = {}", active_domain(&db));
    println!("|DOM^3| = {}", dom_power(&db, 3)?.len());

    let two_hop = AlgebraExpr::base("EDGES")
        .alias("A")
        .join(Pred::cols(2, CmpOp::Eq, 3), AlgebraExpr::base("EDGES").alias("B"))
        .project(vec![AttrRef::qualified("A", "from"), AttrRef::qualified("B", "to")]);
    println!("{}", print_algebra(&two_hop));
    println!("  = {}", evaluate(&two_hop, &db, &none)?);

    let sinks = parse_algebra("(minus (base NODES) (project ($1) (base EDGES)))")?;
    println!("nodes without outgoing edges = {}", evaluate(&sinks, &db, &none)?);

    let missing = AlgebraExpr::dom_power(2).sym_diff(AlgebraExpr::base("EDGES"));
    println!("|DOM^2 Δ EDGES| = {}", evaluate(&missing, &db, &none)?.len());
    Ok(())
}
