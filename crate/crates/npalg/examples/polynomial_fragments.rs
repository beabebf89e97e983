//! Recognising the polynomial fragments and deciding them through 2SAT,
//! on graphs far too large for exhaustive guessing.

use std::error::Error;
use std::time::Instant;

use npalg::corpus::{disconnectivity, k_coloring, two_cliques, two_coloring};
use npalg::polyfrag::{classify, solve_poly};
use npalg::relation::{Constant, Database, Relation, Schema};

fn cycle(n: i64) -> Result<Database, Box<dyn Error>> {
    let nodes = Relation::unary(Schema::named(None, &["n"]), 1..=n)?;
    let edges = Relation::from_tuples(
        Schema::named(None, &["from", "to"]),
        (1..=n).flat_map(|i| {
            let j = i % n + 1;
            [vec![Constant::Int(i), Constant::Int(j)], vec![Constant::Int(j), Constant::Int(i)]]
        }),
    )?;
    Ok(Database::from_relations([("NODES", nodes), ("EDGES", edges)]))
}

fn main() -> Result<(), Box<dyn Error>> {
    for (name, q) in [
        ("two-coloring", two_coloring()),
        ("two-cliques", two_cliques()),
        ("disconnectivity", disconnectivity()),
        ("3-coloring", k_coloring(3)),
    ] {
        println!("{name}: {}", classify(&q).tag());
    }

    let q = two_coloring();
    for n in [100, 101] {
        let db = cycle(n)?;
        let t = Instant::now();
        let out = solve_poly(&q, &db)?;
        println!("C{n} 2-colourable: {} ({:?})", out.satisfiable, t.elapsed());
    }
    let out = solve_poly(&disconnectivity(), &cycle(12)?)?;
    println!("C12 disconnected: {}", out.satisfiable);
    Ok(())
}
