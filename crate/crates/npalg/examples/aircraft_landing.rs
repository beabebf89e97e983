//! Aircraft landing: exhaustive optimum against local search on the same
//! specification.

use std::error::Error;

use npalg::consql::lower_spec;
use npalg::corpus::{self, Body};
use npalg::search::{exhaustive, solve, SolverParams, Strategy};

fn main() -> Result<(), Box<dyn Error>> {
    for name in ["aircraft-single", "aircraft-toy"] {
        let loaded = corpus::fixture(name)?.load()?;
        let Body::Spec(spec) = &loaded.body else { continue };
        let problem = lower_spec(spec, &loaded.db)?;
        let best = exhaustive(&problem, 1 << 16)?.expect("non-empty space");
        let tabu = solve(&problem, &SolverParams::default(), &Strategy::Tabu)?;
        println!(
            "{name}: {} states, optimum cost {:?}, tabu cost {:?} after {} iterations",
            problem.space_size(),
            best.cost.objective,
            tabu.cost.objective,
            tabu.stats.iterations
        );
        for (table, rows) in problem.eval_returns(Some(&tabu.state))? {
            println!("  {table} = {rows}");
        }
    }
    Ok(())
}
