//! 3-colouring a graph given only as a circuit: the circuit becomes gate
//! relations, the gates are fixed by propagation and only colours are
//! searched.

use std::error::Error;

use npalg::guess::solve_exact;
use npalg::translate::{gen_succinct_3col, succinct_db, succinct_exact_options, Circuit};

fn main() -> Result<(), Box<dyn Error>> {
    let graphs: [(&str, usize, Vec<(u32, u32)>); 3] = [
        ("C4", 2, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
        ("K4", 2, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        ("triangle", 2, vec![(0, 1), (1, 2), (2, 0)]),
    ];
    let db = succinct_db();
    for (name, n, edges) in graphs {
        let c = Circuit::from_edges(n, &edges)?;
        let q = gen_succinct_3col(&c)?;
        let opts = succinct_exact_options(&c)?;
        let answer = solve_exact(&q, &db, &opts)?;
        println!(
            "{name}: {} gates, {} guessed relations, expanded edges {:?}, 3-colourable: {}",
            c.gates().len(),
            q.guesses.len(),
            c.expand(),
            answer.is_some()
        );
    }
    Ok(())
}
