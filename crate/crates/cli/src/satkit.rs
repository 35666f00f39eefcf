//! In-memory formulas and the CaDiCaL-backed solve and MUS routines used
//! by the bundled `noshow-sat` and `noshow-mus` tools.

use std::io::BufRead;
use std::time::Instant;

use cadical::{Callbacks, Solver};
pub use noshow_core::dimacs::{read_clauses, FormatError, Header};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A formula held in memory with one group id per clause.
#[derive(Debug, Clone, Default)]
pub struct Formula {
    pub header: Header,
    lits: Vec<i32>,
    starts: Vec<usize>,
    groups: Vec<u32>,
}

impl Formula {
    pub fn read<R: BufRead>(input: R) -> Result<Self, FormatError> {
        let mut f = Formula::default();
        f.starts.push(0);
        f.header = read_clauses(input, |g, lits| {
            f.lits.extend_from_slice(lits);
            f.starts.push(f.lits.len());
            f.groups.push(g);
        })?;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn clause(&self, i: usize) -> &[i32] {
        &self.lits[self.starts[i]..self.starts[i + 1]]
    }

    pub fn group(&self, i: usize) -> u32 {
        self.groups[i]
    }
}

/// Terminates the solver once a deadline passes.
pub struct Deadline {
    start: Instant,
    limit: Option<f64>,
}

impl Deadline {
    /// A non-positive limit means no limit.
    pub fn new(limit: Option<f64>) -> Self {
        Deadline {
            start: Instant::now(),
            limit: limit.filter(|&l| l > 0.0),
        }
    }

    pub fn expired(&self) -> bool {
        self.limit
            .is_some_and(|l| self.start.elapsed().as_secs_f64() >= l)
    }
}

impl Callbacks for Deadline {
    fn terminate(&mut self) -> bool {
        self.expired()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat(Vec<i32>),
    Unsat,
    Unknown,
}

/// Solves a formula streamed from `input`; the model lists every declared
/// variable as a signed literal.
pub fn solve<R: BufRead>(input: R, timeout: Option<f64>) -> Result<Outcome, FormatError> {
    let mut solver: Solver<Deadline> = Solver::new();
    let header = read_clauses(input, |_, lits| solver.add_clause(lits.iter().copied()))?;
    solver.set_callbacks(Some(Deadline::new(timeout)));
    Ok(match solver.solve() {
        Some(true) => Outcome::Sat(
            (1..=header.vars as i32)
                .map(|v| if solver.value(v) == Some(true) { v } else { -v })
                .collect(),
        ),
        Some(false) => Outcome::Unsat,
        None => Outcome::Unknown,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MusLevel {
    /// Minimise over GCNF groups (group 0 is hard).
    Group,
    /// Minimise over individual clauses.
    Clause,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MusOutcome {
    /// Ids (group ids or 1-based clause positions) of a minimal core.
    Core(Vec<u32>),
    Sat,
    Unknown,
}

/// Deletion-based MUS extraction with selector variables. Each candidate is
/// dropped in a seeded random order; when the rest stays unsatisfiable the
/// candidate set shrinks to the solver's failed assumptions.
pub fn extract_mus(
    formula: &Formula,
    level: MusLevel,
    seed: u64,
    timeout: Option<f64>,
) -> MusOutcome {
    let ids: Vec<u32> = match level {
        MusLevel::Group => formula.groups.clone(),
        MusLevel::Clause => (1..=formula.len() as u32).collect(),
    };
    let base = formula.header.vars as i32;
    let selector = |id: u32| base + id as i32;
    let mut solver: Solver<Deadline> = Solver::new();
    let mut soft: Vec<u32> = Vec::new();
    for (i, &id) in ids.iter().enumerate() {
        let c = formula.clause(i);
        if level == MusLevel::Group && id == 0 {
            solver.add_clause(c.iter().copied());
        } else {
            solver.add_clause(c.iter().copied().chain(std::iter::once(-selector(id))));
            soft.push(id);
        }
    }
    soft.sort_unstable();
    soft.dedup();
    solver.set_callbacks(Some(Deadline::new(timeout)));

    let run = |solver: &mut Solver<Deadline>, set: &[u32]| -> Option<Option<Vec<u32>>> {
        match solver.solve_with(set.iter().map(|&g| selector(g))) {
            Some(true) => Some(None),
            Some(false) => Some(Some(
                set.iter()
                    .copied()
                    .filter(|&g| solver.failed(selector(g)))
                    .collect(),
            )),
            None => None,
        }
    };

    let mut core = match run(&mut solver, &soft) {
        None => return MusOutcome::Unknown,
        Some(None) => return MusOutcome::Sat,
        Some(Some(c)) => c,
    };
    // Trim with repeated failed-assumption cores until stable.
    loop {
        match run(&mut solver, &core) {
            None => return MusOutcome::Unknown,
            Some(None) => unreachable!("a core stays unsatisfiable"),
            Some(Some(c)) if c.len() < core.len() => core = c,
            Some(Some(_)) => break,
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = core.clone();
    order.shuffle(&mut rng);
    let mut necessary: Vec<u32> = Vec::new();
    let mut current: std::collections::BTreeSet<u32> = core.into_iter().collect();
    for g in order {
        if !current.contains(&g) || necessary.contains(&g) {
            continue;
        }
        let trial: Vec<u32> = current.iter().copied().filter(|&h| h != g).collect();
        match run(&mut solver, &trial) {
            None => return MusOutcome::Unknown,
            Some(None) => necessary.push(g),
            Some(Some(c)) => {
                let keep: std::collections::BTreeSet<u32> = c.into_iter().collect();
                current = keep;
            }
        }
    }
    MusOutcome::Core(current.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PIGEONS: &str = "c two pigeons, one hole\np cnf 2 3\n1 0\n2 0\n-1 -2 0\n";

    #[test]
    fn reads_plain_and_grouped() {
        let f = Formula::read(PIGEONS.as_bytes()).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.clause(2), &[-1, -2]);
        assert_eq!(f.group(2), 3);
        let g = Formula::read("p gcnf 2 3 2\n{1} 1 0\n{2} 2 0\n{2} -1 -2\n0\n".as_bytes()).unwrap();
        assert_eq!(g.header.groups, Some(2));
        assert_eq!(g.group(2), 2);
        assert_eq!(g.clause(2), &[-1, -2]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "1 0\n",
            "p cnf 2 2\n1 0\n",
            "p cnf 1 1\n2 0\n",
            "p cnf 1 1\nx 0\n",
            "p gcnf 1 1 1\n1 0\n",
            "p gcnf 1 1 1\n{3} 1 0\n",
            "p cnf 1 1\n1\n",
        ] {
            assert!(Formula::read(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn solves_small_instances() {
        assert_eq!(solve(PIGEONS.as_bytes(), None).unwrap(), Outcome::Unsat);
        assert_eq!(
            solve("p cnf 3 2\n1 0\n-1 -2 0\n".as_bytes(), None).unwrap(),
            Outcome::Sat(vec![1, -2, -3])
        );
    }

    #[test]
    fn mus_at_both_levels() {
        // groups 1 and 3 conflict; group 2 is irrelevant
        let text = "p gcnf 3 5 3\n{1} 1 0\n{2} 3 0\n{2} -3 2 0\n{3} -1 0\n{3} 2 3 0\n";
        let f = Formula::read(text.as_bytes()).unwrap();
        for seed in 0..5 {
            assert_eq!(
                extract_mus(&f, MusLevel::Group, seed, None),
                MusOutcome::Core(vec![1, 3])
            );
            assert_eq!(
                extract_mus(&f, MusLevel::Clause, seed, None),
                MusOutcome::Core(vec![1, 4])
            );
        }
        let sat = Formula::read("p cnf 1 1\n1 0\n".as_bytes()).unwrap();
        assert_eq!(
            extract_mus(&sat, MusLevel::Clause, 0, None),
            MusOutcome::Sat
        );
    }

    #[test]
    fn hard_group_stays_out_of_the_core() {
        let f = Formula::read("p gcnf 1 2 1\n{0} 1 0\n{1} -1 0\n".as_bytes()).unwrap();
        assert_eq!(
            extract_mus(&f, MusLevel::Group, 0, None),
            MusOutcome::Core(vec![1])
        );
    }
}
