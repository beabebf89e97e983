//! 2SAT via the implication graph and Tarjan's strongly connected
//! components.

/// A literal: variable index plus polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Lit {
            var,
            positive: false,
        }
    }

    pub fn negate(self) -> Self {
        Lit {
            var: self.var,
            positive: !self.positive,
        }
    }

    fn node(self) -> usize {
        2 * self.var + usize::from(!self.positive)
    }

    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

/// Conjunction of two-literal clauses. A unit clause `x` is stored as
/// `(x ∨ x)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwoSatInstance {
    pub num_vars: usize,
    pub clauses: Vec<(Lit, Lit)>,
}

impl TwoSatInstance {
    pub fn new(num_vars: usize) -> Self {
        TwoSatInstance {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn add(&mut self, a: Lit, b: Lit) {
        assert!(
            a.var < self.num_vars && b.var < self.num_vars,
            "literal out of range"
        );
        self.clauses.push((a, b));
    }

    pub fn add_unit(&mut self, a: Lit) {
        self.add(a, a);
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|(a, b)| a.holds(assignment) || b.holds(assignment))
    }
}

/// A satisfying assignment, or `None`. Linear in the number of clauses.
pub fn solve_2sat(inst: &TwoSatInstance) -> Option<Vec<bool>> {
    let n = 2 * inst.num_vars;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &inst.clauses {
        // ¬a → b, ¬b → a
        adj[a.negate().node()].push(b.node());
        adj[b.negate().node()].push(a.node());
    }
    let comp = tarjan(&adj);
    let mut out = Vec::with_capacity(inst.num_vars);
    for v in 0..inst.num_vars {
        let (t, f) = (comp[2 * v], comp[2 * v + 1]);
        if t == f {
            return None;
        }
        // components are numbered in reverse topological order
        out.push(t < f);
    }
    Some(out)
}

/// Iterative Tarjan; returns the component index of every node, numbered
/// in the order components are completed.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut comp = vec![UNSEEN; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge == 0 {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}
