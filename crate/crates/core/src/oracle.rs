//! Exhaustive exact solver for small instances.
//!
//! Radii are scanned upwards. At each radius a depth-first search fixes, one
//! facility at a time, how much load (or how many copies) it takes; a relaxed
//! flow with the undecided facilities unconstrained prunes hopeless branches.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::assign::{bounded_assignment, Pin};
use crate::error::{Error, Result};
use crate::instance::{candidate_radii, structural_violation, CapacityMode, Instance, OpenCopy, Solution, Vertex};
use crate::rational::Rational;

pub const MAX_FACILITIES: usize = 14;
pub const MAX_CLIENTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub radius: Rational,
    pub witness: Solution,
}

/// Optimal radius and one optimal solution.
pub fn exact_solve(inst: &Instance) -> Result<OracleResult> {
    if let Some(v) = structural_violation(inst) {
        return Err(Error::InvalidInstance(v.to_string()));
    }
    if inst.facilities.len() > MAX_FACILITIES || inst.clients.len() > MAX_CLIENTS {
        return Err(Error::TooLarge {
            facilities: inst.facilities.len(),
            clients: inst.clients.len(),
            max_facilities: MAX_FACILITIES,
            max_clients: MAX_CLIENTS,
        });
    }
    if inst.p > inst.clients.len() {
        return Err(Error::Infeasible);
    }
    let mut radii = candidate_radii(inst);
    if radii.first().is_none_or(|r| !r.is_zero()) {
        radii.insert(0, Rational::zero());
    }
    for r in radii {
        if let Some(witness) = feasible_at(inst, &r) {
            return Ok(OracleResult { radius: r, witness });
        }
    }
    Err(Error::Infeasible)
}

/// Optimal radius only.
pub fn exact_radius(inst: &Instance) -> Result<Rational> {
    exact_solve(inst).map(|r| r.radius)
}

/// A feasible solution with every assignment within `r`, if one exists.
pub fn feasible_at(inst: &Instance, r: &Rational) -> Option<Solution> {
    let search = Search::new(inst, r);
    let loads = match inst.k {
        None => search.free(),
        Some(k) => search.counted(k),
    }?;
    Some(search.witness(&loads))
}

/// Per-facility decision: copy count and load interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Choice {
    copies: Option<u32>,
    lo: u32,
    hi: u32,
}

struct Search<'a> {
    inst: &'a Instance,
    allowed: Vec<Vec<usize>>,
    degree: Vec<u32>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, r: &Rational) -> Self {
        let allowed: Vec<Vec<usize>> = inst
            .clients
            .iter()
            .map(|&v| {
                (0..inst.facilities.len())
                    .filter(|&f| inst.d(inst.facilities[f], v) <= r)
                    .collect()
            })
            .collect();
        let mut degree = vec![0u32; inst.facilities.len()];
        for list in &allowed {
            for &f in list {
                degree[f] += 1;
            }
        }
        Search { inst, allowed, degree }
    }

    fn relaxed(&self, decided: &[Choice], fallback: &[u32]) -> Option<(usize, Vec<Option<usize>>)> {
        let bounds: Vec<(u32, u32)> = (0..self.degree.len())
            .map(|f| decided.get(f).map_or((0, fallback[f]), |c| (c.lo, c.hi)))
            .collect();
        bounded_assignment(&self.allowed, &bounds, &vec![Pin::Free; self.allowed.len()])
    }

    /// Load intervals a facility can take without a cardinality target.
    fn load_options(&self, f: usize) -> Vec<(u32, u32)> {
        let l = self.inst.lower;
        let u = self.inst.upper[f];
        let deg = self.degree[f];
        let mut spans = vec![(0, 0)];
        let max_copies = match self.inst.mode {
            CapacityMode::Hard => 1,
            CapacityMode::Soft if l == 0 => 1,
            CapacityMode::Soft => deg / l,
        };
        for m in 1..=max_copies {
            let (lo, hi) = (m * l, (m * u).min(deg));
            if lo > hi {
                continue;
            }
            match spans.last_mut() {
                Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
                _ => spans.push((lo, hi)),
            }
        }
        if self.inst.mode == CapacityMode::Soft && l == 0 && u > 0 {
            // Copies of zero lower bound cover any load up to the degree.
            spans = vec![(0, deg)];
        }
        spans
    }

    fn free(&self) -> Option<Vec<(Choice, usize)>> {
        let options: Vec<Vec<(u32, u32)>> = (0..self.degree.len()).map(|f| self.load_options(f)).collect();
        let reach: Vec<u32> = options.iter().map(|o| o.last().unwrap().1).collect();
        self.free_dfs(&options, &reach, &mut Vec::new())
    }

    fn free_dfs(
        &self,
        options: &[Vec<(u32, u32)>],
        reach: &[u32],
        decided: &mut Vec<Choice>,
    ) -> Option<Vec<(Choice, usize)>> {
        let (value, chosen) = self.relaxed(decided, reach)?;
        if value < self.inst.p {
            return None;
        }
        let mut loads = vec![0u32; self.degree.len()];
        for f in chosen.iter().flatten() {
            loads[*f] += 1;
        }
        let fits = (decided.len()..self.degree.len())
            .all(|f| options[f].iter().any(|&(lo, hi)| lo <= loads[f] && loads[f] <= hi));
        if fits {
            let result = (0..self.degree.len())
                .map(|f| {
                    let choice = decided.get(f).copied().unwrap_or(Choice {
                        copies: None,
                        lo: loads[f],
                        hi: loads[f],
                    });
                    (choice, loads[f] as usize)
                })
                .collect();
            return Some(result);
        }
        let f = decided.len();
        // Open spans first, largest first: coverage-hungry instances settle fast.
        for &(lo, hi) in options[f].iter().rev() {
            decided.push(Choice { copies: None, lo, hi });
            if let Some(found) = self.free_dfs(options, reach, decided) {
                decided.pop();
                return Some(found);
            }
            decided.pop();
        }
        None
    }

    /// Valid copy counts for a facility together with their load intervals.
    fn copy_options(&self, f: usize, budget: u32) -> Vec<Choice> {
        let l = self.inst.lower;
        let u = self.inst.upper[f];
        let deg = self.degree[f];
        let max = match self.inst.mode {
            CapacityMode::Hard => 1,
            CapacityMode::Soft => budget,
        };
        (0..=max.min(budget))
            .filter_map(|m| {
                let (lo, hi) = (m * l, (m * u).min(deg));
                (lo <= hi).then_some(Choice {
                    copies: Some(m),
                    lo,
                    hi,
                })
            })
            .collect()
    }

    fn counted(&self, k: usize) -> Option<Vec<(Choice, usize)>> {
        let k = u32::try_from(k).ok()?;
        let mut decided = Vec::new();
        self.counted_dfs(k, &mut decided)
    }

    fn counted_dfs(&self, remaining: u32, decided: &mut Vec<Choice>) -> Option<Vec<(Choice, usize)>> {
        let f = decided.len();
        let n = self.degree.len();
        // Most copies the undecided facilities could still absorb.
        let room: u64 = (f..n)
            .map(|g| self.copy_options(g, remaining).last().map_or(0, |c| c.copies.unwrap()) as u64)
            .sum();
        if room < remaining as u64 {
            return None;
        }
        let reach: Vec<u32> = (0..n)
            .map(|g| self.copy_options(g, remaining).iter().map(|c| c.hi).max().unwrap_or(0))
            .collect();
        let (value, chosen) = self.relaxed(decided, &reach)?;
        if value < self.inst.p {
            return None;
        }
        if f == n {
            if remaining != 0 {
                return None;
            }
            let mut loads = vec![0usize; n];
            for g in chosen.iter().flatten() {
                loads[*g] += 1;
            }
            return Some(decided.iter().copied().zip(loads).collect());
        }
        for choice in self.copy_options(f, remaining).into_iter().rev() {
            decided.push(choice);
            if let Some(found) = self.counted_dfs(remaining - choice.copies.unwrap(), decided) {
                decided.pop();
                return Some(found);
            }
            decided.pop();
        }
        None
    }

    /// Rebuilds a concrete solution from per-facility decisions by solving the
    /// assignment flow with the decided loads pinned exactly.
    fn witness(&self, choices: &[(Choice, usize)]) -> Solution {
        let inst = self.inst;
        let bounds: Vec<(u32, u32)> = choices.iter().map(|&(_, load)| (load as u32, load as u32)).collect();
        let (_, chosen) = bounded_assignment(&self.allowed, &bounds, &vec![Pin::Free; self.allowed.len()])
            .expect("decided loads are realisable");
        let mut served: Vec<Vec<Vertex>> = vec![Vec::new(); choices.len()];
        for (c, f) in chosen.iter().enumerate() {
            if let Some(f) = f {
                served[*f].push(inst.clients[c]);
            }
        }
        let mut open = Vec::new();
        let mut assignment = BTreeMap::new();
        for (f, &(choice, load)) in choices.iter().enumerate() {
            let u = inst.facilities[f];
            let copies = match choice.copies {
                Some(m) => m as usize,
                None if load == 0 => 0,
                None => copies_for(load as u32, inst.lower, inst.upper[f], inst.mode) as usize,
            };
            for i in 0..copies {
                open.push(OpenCopy::new(u, i as u32));
            }
            if copies == 0 {
                continue;
            }
            // Spread the load evenly: the first `load % copies` copies take one extra.
            let base = load / copies;
            let extra = load % copies;
            let mut clients = served[f].iter();
            for i in 0..copies {
                let take = base + usize::from(i < extra);
                for &v in clients.by_ref().take(take) {
                    assignment.insert(v, OpenCopy::new(u, i as u32));
                }
            }
        }
        Solution::new(inst, open, assignment)
    }
}

/// Fewest copies that can carry `load` within per-copy bounds `[lower, upper]`.
fn copies_for(load: u32, lower: u32, upper: u32, mode: CapacityMode) -> u32 {
    match mode {
        CapacityMode::Hard => 1,
        CapacityMode::Soft => {
            let m = load.div_ceil(upper.max(1));
            debug_assert!(m * lower <= load);
            m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{check_feasible, Metric, ProblemKind};
    use crate::rational::int;
    use proptest::prelude::*;

    fn line(points: &[i64]) -> Metric {
        Metric::from_fn(points.len(), |i, j| int((points[i] - points[j]).abs()))
    }

    fn g1() -> Instance {
        Instance::new(
            ["f1", "f2", "c0", "c1", "c9", "c10"].map(String::from).to_vec(),
            line(&[0, 10, 0, 1, 9, 10]),
            vec![(Vertex(0), 2), (Vertex(1), 2)],
            (2..6).map(Vertex).collect(),
            2,
            None,
            4,
            CapacityMode::Soft,
            ProblemKind::Supplier,
        )
    }

    #[test]
    fn g1_radius_one() {
        let inst = g1();
        let res = exact_solve(&inst).unwrap();
        assert_eq!(res.radius, int(1));
        assert!(check_feasible(&inst, &res.witness).ok());
    }

    #[test]
    fn single_pair() {
        let inst = Instance::new(
            vec!["f".into(), "c".into()],
            line(&[0, 7]),
            vec![(Vertex(0), 1)],
            vec![Vertex(1)],
            1,
            None,
            1,
            CapacityMode::Hard,
            ProblemKind::Supplier,
        );
        assert_eq!(exact_radius(&inst).unwrap(), int(7));
    }

    #[test]
    fn p_above_clients() {
        let mut inst = g1();
        inst.p = 5;
        assert_eq!(exact_solve(&inst), Err(Error::Infeasible));
    }

    #[test]
    fn p_zero() {
        let inst = g1().with_p(0);
        let res = exact_solve(&inst).unwrap();
        assert_eq!(res.radius, int(0));
        assert_eq!(res.witness, Solution::empty());
    }

    #[test]
    fn too_large() {
        let n = 20;
        let inst = Instance::new(
            (0..n).map(|i| format!("v{i}")).collect(),
            Metric::from_fn(n, |i, j| int((i as i64 - j as i64).abs())),
            (0..n).map(|i| (Vertex(i), 1)).collect(),
            (0..n).map(Vertex).collect(),
            1,
            None,
            1,
            CapacityMode::Hard,
            ProblemKind::Center,
        );
        assert!(matches!(exact_solve(&inst), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn soft_needs_two_copies() {
        // One facility, four clients at distance 1, U = 2: soft opens two copies.
        let inst = Instance::new(
            ["f", "a", "b", "c", "d"].map(String::from).to_vec(),
            Metric::from_fn(5, |i, j| int(if i == j { 0 } else if i == 0 || j == 0 { 1 } else { 2 })),
            vec![(Vertex(0), 2)],
            (1..5).map(Vertex).collect(),
            2,
            None,
            4,
            CapacityMode::Soft,
            ProblemKind::Supplier,
        );
        let res = exact_solve(&inst).unwrap();
        assert_eq!(res.radius, int(1));
        assert_eq!(res.witness.open.len(), 2);
        assert!(check_feasible(&inst, &res.witness).ok());
        let hard = Instance { mode: CapacityMode::Hard, ..inst };
        assert_eq!(exact_solve(&hard), Err(Error::Infeasible));
    }

    #[test]
    fn cardinality_target() {
        // k = 1 forces one facility to take everything.
        let inst = g1().with_k(Some(1));
        let mut wide = inst.clone();
        wide.upper = vec![4, 4];
        let res = exact_solve(&wide).unwrap();
        assert_eq!(res.radius, int(10));
        assert!(check_feasible(&wide, &res.witness).ok());
        assert_eq!(exact_solve(&inst), Err(Error::Infeasible));
    }

    /// Tries every copy-count vector directly.
    fn brute_radius(inst: &Instance) -> Option<Rational> {
        let n = inst.facilities.len();
        let max = match inst.mode {
            CapacityMode::Hard => 1,
            CapacityMode::Soft => inst.k.unwrap_or(inst.clients.len()) as u32,
        };
        let mut radii = candidate_radii(inst);
        radii.insert(0, Rational::zero());
        for r in radii {
            let search = Search::new(inst, &r);
            let mut counts = vec![0u32; n];
            loop {
                let total: u32 = counts.iter().sum();
                if inst.k.is_none_or(|k| total as usize == k) {
                    let bounds: Vec<(u32, u32)> = counts
                        .iter()
                        .zip(&inst.upper)
                        .map(|(&m, &u)| (m * inst.lower, m * u))
                        .collect();
                    if let Some((v, _)) = bounded_assignment(&search.allowed, &bounds, &vec![Pin::Free; inst.clients.len()]) {
                        if v >= inst.p {
                            return Some(r);
                        }
                    }
                }
                let mut i = 0;
                while i < n && counts[i] == max {
                    counts[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                counts[i] += 1;
            }
        }
        None
    }

    fn small_instance() -> impl Strategy<Value = Instance> {
        (
            1usize..4,
            1usize..5,
            proptest::collection::vec(0i64..8, 7),
            0u32..3,
            proptest::collection::vec(0u32..3, 3),
            0usize..5,
            any::<bool>(),
            proptest::option::of(0usize..4),
        )
            .prop_map(|(nf, nc, pos, lower, extra, p, soft, k)| {
                let n = nf + nc;
                let pos = &pos[..n];
                Instance::new(
                    (0..n).map(|i| format!("v{i}")).collect(),
                    Metric::from_fn(n, |i, j| int((pos[i] - pos[j]).abs())),
                    (0..nf).map(|i| (Vertex(i), lower + extra[i])).collect(),
                    (nf..n).map(Vertex).collect(),
                    lower,
                    k,
                    p.min(nc),
                    if soft { CapacityMode::Soft } else { CapacityMode::Hard },
                    ProblemKind::Supplier,
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn matches_copy_count_enumeration(inst in small_instance()) {
            let got = exact_solve(&inst);
            match brute_radius(&inst) {
                Some(r) => {
                    let res = got.unwrap();
                    prop_assert_eq!(&res.radius, &r);
                    prop_assert!(check_feasible(&inst, &res.witness).ok());
                    prop_assert!(res.witness.radius <= r);
                }
                None => prop_assert_eq!(got, Err(Error::Infeasible)),
            }
        }

        #[test]
        fn monotone_in_p(inst in small_instance()) {
            let lower_p = exact_radius(&inst.with_p(inst.p.saturating_sub(1)));
            if let Ok(r) = exact_radius(&inst) {
                prop_assert!(lower_p.unwrap() <= r);
            }
        }
    }
}
