//! From an existential second-order sentence to an equivalent guess-and-check
//! query, then solving it.

use std::error::Error;
use std::fs;

use npalg::corpus::fixtures_dir;
use npalg::guess::{solve_exact, ExactOptions};
use npalg::io::load_db;
use npalg::text::{parse_eso, print_eso, print_query};
use npalg::translate::{build_psi, translate_fo, FoFormula, Vocab};
use npalg::text::print_algebra;

fn main() -> Result<(), Box<dyn Error>> {
    let phi = FoFormula::atom("EDGES", &["x", "y"]).and(FoFormula::atom("EDGES", &["y", "x"]).not());
    let vocab = Vocab::new().base("EDGES", 2);
    let t = translate_fo(&phi, &vocab)?;
    println!("one-way edges over {:?}: {}", t.vars, print_algebra(&t.expr));

    let sentence = parse_eso(&fs::read_to_string(fixtures_dir().join("eso/two_coloring.eso"))?)?;
    println!("{}", print_eso(&sentence));
    let query = build_psi(&sentence)?;
    println!("{}", print_query(&query));
    for data in ["symmetric-path", "symmetric-triangle-k3"] {
        let db = load_db(&fixtures_dir().join("data").join(data))?;
        let yes = solve_exact(&query, &db, &ExactOptions::default())?.is_some();
        println!("{data}: {}", if yes { "yes" } else { "no" });
    }
    Ok(())
}
