//! Turning an open facility set into a capacity-respecting assignment.
//!
//! Clients send at most one unit each, open facilities must receive a load
//! inside their `[lower, upper]` interval, and arcs exist only within the
//! radius bound. The maximum flow of that network is the best coverage the
//! open set can reach.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::instance::{Instance, OpenCopy, Solution, Vertex};
use crate::rational::Rational;

/// Pinned choice for one client in [`bounded_assignment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pin {
    Free,
    Unserved,
    To(usize),
}

/// Maximum assignment of clients to facilities subject to per-facility load
/// intervals. `allowed[c]` lists facility indices client `c` may use. Returns
/// `None` when the load lower bounds cannot be met, otherwise the served count
/// and the facility of every client.
pub fn bounded_assignment(
    allowed: &[Vec<usize>],
    bounds: &[(u32, u32)],
    pins: &[Pin],
) -> Option<(usize, Vec<Option<usize>>)> {
    let clients = allowed.len();
    let source = clients + bounds.len();
    let sink = source + 1;
    let mut net = FlowNetwork::<i64>::new(sink + 1);
    let mut arcs = Vec::new();
    for (c, options) in allowed.iter().enumerate() {
        let pin = pins.get(c).copied().unwrap_or(Pin::Free);
        match pin {
            Pin::Unserved => continue,
            Pin::To(f) => {
                if !options.contains(&f) {
                    return None;
                }
                net.add_edge(source, c, 1, 1);
                arcs.push((c, f, net.add_edge(c, clients + f, 0, 1)));
            }
            Pin::Free => {
                net.add_edge(source, c, 0, 1);
                for &f in options {
                    arcs.push((c, f, net.add_edge(c, clients + f, 0, 1)));
                }
            }
        }
    }
    for (f, &(lo, hi)) in bounds.iter().enumerate() {
        if lo > hi {
            return None;
        }
        net.add_edge(clients + f, sink, lo as i64, hi as i64);
    }
    let value = net.max_flow(source, sink)?;
    let mut chosen = vec![None; clients];
    for (c, f, e) in arcs {
        if net.flow(e) > 0 {
            chosen[c] = Some(f);
        }
    }
    Some((value as usize, chosen))
}

/// Maximum assignment that is lexicographically smallest by (client, facility)
/// among all maximum ones: each client in turn takes the lowest facility that
/// keeps the optimum reachable. `None` if lower bounds fail or the optimum is
/// below `required`.
pub fn lexicographic_assignment(
    allowed: &[Vec<usize>],
    bounds: &[(u32, u32)],
    required: usize,
) -> Option<Vec<Option<usize>>> {
    let mut pins = vec![Pin::Free; allowed.len()];
    let (best, _) = bounded_assignment(allowed, bounds, &pins)?;
    if best < required {
        return None;
    }
    for c in 0..allowed.len() {
        let mut fixed = false;
        for &f in &allowed[c] {
            pins[c] = Pin::To(f);
            if bounded_assignment(allowed, bounds, &pins).is_some_and(|(v, _)| v == best) {
                fixed = true;
                break;
            }
        }
        if !fixed {
            pins[c] = Pin::Unserved;
        }
    }
    let (value, chosen) = bounded_assignment(allowed, bounds, &pins)?;
    debug_assert_eq!(value, best);
    Some(chosen)
}

/// An open set to be turned into a solution within a radius bound.
#[derive(Clone, Debug)]
pub struct ExtractionProblem<'a> {
    pub inst: &'a Instance,
    /// Facilities to open, one copy each.
    pub open: Vec<Vertex>,
    /// Largest admissible assignment distance.
    pub radius: Rational,
    pub p: usize,
}

/// Serves as many clients as the open set allows with every open facility
/// loaded within `[L, U_u]` and every assignment within the radius bound.
pub fn extract_solution(ep: &ExtractionProblem<'_>) -> Result<Solution> {
    let inst = ep.inst;
    let mut open = ep.open.clone();
    open.sort();
    open.dedup();
    let mut bounds = Vec::with_capacity(open.len());
    for &u in &open {
        let upper = inst
            .upper_of(u)
            .ok_or_else(|| Error::ExtractionInfeasible(format!("{} is not a facility", inst.label(u))))?;
        bounds.push((inst.lower, upper));
    }
    let allowed: Vec<Vec<usize>> = inst
        .clients
        .iter()
        .map(|&v| (0..open.len()).filter(|&f| *inst.d(open[f], v) <= ep.radius).collect())
        .collect();
    let Some(chosen) = lexicographic_assignment(&allowed, &bounds, ep.p) else {
        return Err(Error::ExtractionInfeasible(format!(
            "no assignment within radius {} meets the load bounds and serves {} clients",
            crate::rational::format(&ep.radius),
            ep.p
        )));
    };
    let copies: Vec<OpenCopy> = open.iter().map(|&u| OpenCopy::new(u, 0)).collect();
    let assignment: BTreeMap<Vertex, OpenCopy> = inst
        .clients
        .iter()
        .zip(chosen)
        .filter_map(|(&v, f)| f.map(|f| (v, copies[f])))
        .collect();
    Ok(Solution::new(inst, copies, assignment))
}
