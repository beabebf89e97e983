//! Guess three colour classes and let FAIL collect everything that goes
//! wrong; the graph is 3-colourable iff some guess empties FAIL.

use std::error::Error;

use npalg::corpus::{fixtures_dir, k_coloring};
use npalg::guess::{check, enumerate_exact, solve_exact, ExactOptions};
use npalg::io::load_db;
use npalg::text::print_query;

fn main() -> Result<(), Box<dyn Error>> {
    let query = k_coloring(3);
    println!("{}", print_query(&query));

    for data in ["sample-graph", "triangle-2-colors", "symmetric-triangle-k3"] {
        let db = load_db(&fixtures_dir().join("data").join(data))?;
        match solve_exact(&query, &db, &ExactOptions::default())? {
            Some(w) => {
                println!("{data}: colourable (check = {})", check(&query, &db, &w)?);
                for (name, rel) in &w.extensions {
                    println!("  {name} = {rel}");
                }
            }
            None => println!("{data}: not colourable"),
        }
    }

    let db = load_db(&fixtures_dir().join("data/sample-graph"))?;
    let all = enumerate_exact(&query, &db, &ExactOptions::default())?;
    println!("example graph: {} of {} candidate colourings work", all.solutions.len(), all.visited);
    Ok(())
}
