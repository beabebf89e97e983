//! A timetabling specification solved by tabu search.

use std::error::Error;
use std::fs;

use npalg::consql::{lower_spec, parse_spec};
use npalg::corpus::fixtures_dir;
use npalg::io::load_db;
use npalg::search::{tabu_search, SolverParams};

fn main() -> Result<(), Box<dyn Error>> {
    let spec = parse_spec(&fs::read_to_string(fixtures_dir().join("consql/timetabling.consql"))?)?;
    let db = load_db(&fixtures_dir().join("data/timetabling-toy"))?;
    let problem = lower_spec(&spec, &db)?;
    println!("{}: {} checks, {} candidate states", problem.name(), problem.check_count(), problem.space_size());

    let out = tabu_search(&problem, &SolverParams::default())?;
    println!("violations {}, objective {:?}", out.cost.violations, out.cost.objective);
    for (name, table) in problem.eval_returns(Some(&out.state))? {
        println!("{name} = {table}");
    }
    Ok(())
}
