use std::collections::BTreeMap;

use super::{ComponentLayout, Cost, Result, SearchError, SearchSpace, SearchState};
use crate::guess::{ExactOptions, GuessDecl, NpAlgQuery, Witness};
use crate::relation::{dom_power, Database, Relation, Tuple};

/// Largest candidate universe a single guessed relation may have.
pub const MAX_UNIVERSE: usize = 1 << 14;

/// An NP-Alg query seen as a search problem: one subset component per
/// free guessed relation, cost = number of FAIL tuples.
pub struct NpAlgSpace<'a> {
    query: &'a NpAlgQuery,
    db: &'a Database,
    fixed: BTreeMap<String, Relation>,
    free: Vec<(GuessDecl, Vec<Tuple>)>,
    layout: Vec<ComponentLayout>,
}

impl<'a> NpAlgSpace<'a> {
    pub fn new(query: &'a NpAlgQuery, db: &'a Database) -> Result<Self> {
        Self::with_options(query, db, &ExactOptions::default())
    }

    /// Honors the fixed extensions and universe restrictions of `opts`.
    pub fn with_options(query: &'a NpAlgQuery, db: &'a Database, opts: &ExactOptions) -> Result<Self> {
        query.validate(Some(db))?;
        let mut free = Vec::new();
        for g in &query.guesses {
            if opts.fixed.contains_key(&g.name) {
                continue;
            }
            let mut universe: Vec<Tuple> = match opts.universes.get(&g.name) {
                Some(u) => u.clone(),
                None => {
                    let p = dom_power(db, g.arity).map_err(crate::guess::GuessError::from)?;
                    if p.len() > MAX_UNIVERSE as u128 {
                        return Err(SearchError::TooLarge(p.len(), MAX_UNIVERSE as u128));
                    }
                    p.iter().collect()
                }
            };
            universe.sort();
            universe.dedup();
            free.push((g.clone(), universe));
        }
        let layout = free
            .iter()
            .map(|(_, u)| ComponentLayout::subset(u.len()))
            .collect();
        Ok(NpAlgSpace {
            query,
            db,
            fixed: opts.fixed.clone(),
            free,
            layout,
        })
    }

    pub fn witness(&self, s: &SearchState) -> Witness {
        let mut w = Witness {
            extensions: self.fixed.clone(),
        };
        for ((g, universe), part) in self.free.iter().zip(&s.parts) {
            let tuples = universe
                .iter()
                .zip(part)
                .filter(|(_, &bit)| bit == 1)
                .map(|(t, _)| t.clone());
            let rel = crate::guess::relation_of(g.arity, tuples).expect("universe tuples have the declared arity");
            w.extensions.insert(g.name.clone(), rel);
        }
        w
    }
}

impl SearchSpace for NpAlgSpace<'_> {
    fn layout(&self) -> &[ComponentLayout] {
        &self.layout
    }

    fn cost(&self, s: &SearchState) -> Result<Cost> {
        let fail = self.query.eval_fail(self.db, &self.witness(s))?;
        Ok(Cost::violations(fail.len() as u64))
    }
}
