//! Hill climbing, tabu search and their tandem on one coloring problem,
//! and tabu search directly over a guess-and-check query.

use std::error::Error;
use std::fs;

use npalg::consql::{lower_spec, parse_spec};
use npalg::corpus::{self, fixtures_dir, Body};
use npalg::guess::check;
use npalg::io::load_db;
use npalg::search::{solve, tabu_search, NpAlgSpace, SolverParams, Strategy};

fn main() -> Result<(), Box<dyn Error>> {
    let spec = parse_spec(&fs::read_to_string(fixtures_dir().join("consql/graph_coloring.consql"))?)?;
    let db = load_db(&fixtures_dir().join("data/sample-coloring"))?;
    let problem = lower_spec(&spec, &db)?;
    let params = SolverParams { seed: 7, restarts: 4, ..SolverParams::default() };
    for strategy in [Strategy::Hill, Strategy::Tabu, Strategy::Tandem(vec![Strategy::Hill, Strategy::Tabu])] {
        let out = solve(&problem, &params, &strategy)?;
        println!(
            "{:>6}: violations {} after {} iterations, best restart {}",
            strategy.name(),
            out.cost.violations,
            out.stats.iterations,
            out.stats.best_restart
        );
    }

    let loaded = corpus::fixture("independent-set-k2")?.load()?;
    let Body::Query(q) = &loaded.body else { return Ok(()) };
    let space = NpAlgSpace::new(q, &loaded.db)?;
    let out = tabu_search(&space, &params)?;
    let w = space.witness(&out.state);
    println!("independent set: |FAIL| = {}, check = {}", out.cost.violations, check(q, &loaded.db, &w)?);
    for (name, rel) in &w.extensions {
        println!("  {name} = {rel}");
    }
    Ok(())
}
