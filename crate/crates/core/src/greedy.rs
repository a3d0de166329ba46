//! Pass-up and pass-down over a core-center tree.
//!
//! Pass-up opens copies bottom-up, each serving exactly `L` clients, and
//! leaves fewer than `L` clients unassigned near the root. Pass-down places
//! the leftovers one at a time, shifting one slot along a grandparent chain
//! of core nodes whenever the chosen slack copy is not at the root.

use std::collections::BTreeSet;

use crate::cct::{CoreCenterTree, XiMap};
use crate::error::{Error, Result};
use crate::reduce::InducedInstance;

/// Output of [`pass_up`]. Copies are indexed by opening order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassUpResult {
    /// Facility node of every opened copy.
    pub open: Vec<usize>,
    /// Copy serving each node, `None` for unassigned clients and non-clients.
    pub assignment: Vec<Option<usize>>,
    /// Clients left unassigned, ascending.
    pub unassigned: Vec<usize>,
    pub a: usize,
    pub b: usize,
}

impl PassUpResult {
    pub fn load(&self, copy: usize) -> usize {
        self.assignment.iter().filter(|&&c| c == Some(copy)).count()
    }
}

pub fn pass_up(ind: &InducedInstance<'_>, cct: &CoreCenterTree, xi: &XiMap, lower: u32) -> Result<PassUpResult> {
    let l = lower as usize;
    let clients = ind.clients().len();
    if l == 0 || clients < l {
        return Err(Error::TooFewClients { clients, lower });
    }
    let n = ind.len();
    let root = cct.root();
    let mut alive = vec![false; n];
    for &u in cct.nodes() {
        alive[u] = true;
    }
    let mut waiting: BTreeSet<usize> = ind.clients().iter().copied().collect();
    let mut assignment = vec![None; n];
    let mut open = Vec::new();

    let alive_children = |alive: &[bool], u: usize| -> Vec<usize> {
        cct.children(u).iter().copied().filter(|&c| alive[c]).collect()
    };
    let open_blocks = |block: &[usize], at: usize, assignment: &mut Vec<Option<usize>>, open: &mut Vec<usize>| {
        for chunk in block.chunks(l) {
            debug_assert_eq!(chunk.len(), l);
            let copy = open.len();
            open.push(at);
            for &v in chunk {
                assignment[v] = Some(copy);
            }
        }
    };

    while alive[root] {
        let only_root = cct.nodes().iter().all(|&u| u == root || !alive[u]);
        let u = if only_root {
            root
        } else {
            let mut core = cct.core();
            core.retain(|&u| alive[u]);
            *core
                .iter()
                .find(|&&u| {
                    let kids = alive_children(&alive, u);
                    !kids.is_empty()
                        && kids
                            .iter()
                            .flat_map(|&c| alive_children(&alive, c))
                            .all(|g| alive_children(&alive, g).is_empty())
                })
                .expect("a core node with leaf grandchildren exists")
        };

        let mut below = Vec::new();
        let mut stack = alive_children(&alive, u);
        while let Some(w) = stack.pop() {
            below.push(w);
            stack.extend(alive_children(&alive, w));
        }
        let below_set: BTreeSet<usize> = below.iter().copied().collect();
        let pulled: Vec<usize> = waiting
            .iter()
            .copied()
            .filter(|&v| below_set.contains(&xi.get(v)))
            .collect();
        let q = pulled.len() % l;
        let own: Vec<usize> = xi.preimage(u).into_iter().filter(|v| waiting.contains(v)).collect();
        assert!(own.len() >= l - q, "core node {u} has too few preimages");
        let mut block: Vec<usize> = pulled.into_iter().chain(own.into_iter().take(l - q)).collect();
        block.sort_unstable();
        open_blocks(&block, u, &mut assignment, &mut open);
        for v in &block {
            waiting.remove(v);
        }
        for w in below {
            alive[w] = false;
        }

        if u == root {
            let rest: Vec<usize> = xi.preimage(u).into_iter().filter(|v| waiting.contains(v)).collect();
            let full = rest.len() / l * l;
            open_blocks(&rest[..full], u, &mut assignment, &mut open);
            for v in &rest[..full] {
                waiting.remove(v);
            }
            alive[root] = false;
        }
    }

    Ok(PassUpResult {
        open,
        assignment,
        unassigned: waiting.into_iter().collect(),
        a: clients / l,
        b: clients % l,
    })
}

/// Checks the four output properties of pass-up. Returns one message per
/// violation.
pub fn audit_pass_up(
    ind: &InducedInstance<'_>,
    cct: &CoreCenterTree,
    xi: &XiMap,
    lower: u32,
    up: &PassUpResult,
) -> Vec<String> {
    let mut problems = Vec::new();
    let clients = ind.clients().len();
    if up.a * lower as usize + up.b != clients || up.b >= lower as usize {
        problems.push(format!("a={} b={} do not decompose {clients}", up.a, up.b));
    }
    if up.open.len() != up.a {
        problems.push(format!("{} copies opened, expected {}", up.open.len(), up.a));
    }
    for &u in &up.open {
        if !cct.is_core(u) {
            problems.push(format!("copy opened at non-core node {u}"));
        }
    }
    if up.unassigned.len() != up.b {
        problems.push(format!("{} clients unassigned, expected {}", up.unassigned.len(), up.b));
    }
    for &v in &up.unassigned {
        if xi.get(v) != cct.root() {
            problems.push(format!("unassigned client {v} is not mapped to the root"));
        }
    }
    for copy in 0..up.open.len() {
        if up.load(copy) != lower as usize {
            problems.push(format!("copy {copy} serves {} clients", up.load(copy)));
        }
    }
    for &v in ind.clients() {
        let Some(copy) = up.assignment[v] else {
            if !up.unassigned.contains(&v) {
                problems.push(format!("client {v} is neither assigned nor unassigned"));
            }
            continue;
        };
        let target = up.open[copy];
        let x = xi.get(v);
        if target != x && cct.parent(x) != Some(target) && cct.grandparent(x) != Some(target) {
            problems.push(format!("client {v} served by {target}, not within two tree levels of {x}"));
        }
        if ind.d(v, target) > 5 {
            problems.push(format!("client {v} at hop distance {} from its copy", ind.d(v, target)));
        }
    }
    problems
}

/// One pass-down step: `nodes` is the grandparent chain from the root to the
/// slack copy's facility, `clients[0]` the placed client and `clients[i]` the
/// client shifted out of `nodes[i]`'s preimage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeRoute {
    pub nodes: Vec<usize>,
    pub clients: Vec<usize>,
    /// Copy that gained a client.
    pub copy: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassDownResult {
    pub open: Vec<usize>,
    pub assignment: Vec<Option<usize>>,
    pub unserved: Vec<usize>,
    pub routes: Vec<ExchangeRoute>,
}

impl PassDownResult {
    pub fn coverage(&self) -> usize {
        self.assignment.iter().filter(|c| c.is_some()).count()
    }

    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.open.len()];
        for c in self.assignment.iter().flatten() {
            loads[*c] += 1;
        }
        loads
    }
}

/// Places leftover clients until none remain or every copy is at its
/// capacity. `capacity[i]` is the bound for copy `i`.
pub fn pass_down(
    ind: &InducedInstance<'_>,
    cct: &CoreCenterTree,
    xi: &XiMap,
    up: &PassUpResult,
    capacity: &[u32],
) -> Result<PassDownResult> {
    assert_eq!(capacity.len(), up.open.len());
    let root = cct.root();
    let mut assignment = up.assignment.clone();
    let mut loads = vec![0usize; up.open.len()];
    for c in assignment.iter().flatten() {
        loads[*c] += 1;
    }
    let mut waiting: BTreeSet<usize> = up.unassigned.iter().copied().collect();
    let mut movable: BTreeSet<usize> = ind.clients().iter().copied().filter(|v| !waiting.contains(v)).collect();
    let mut routes = Vec::new();

    while let Some(&v) = waiting.first() {
        let slack = (0..up.open.len())
            .filter(|&j| loads[j] < capacity[j] as usize)
            .min_by_key(|&j| (cct.depth(up.open[j]), up.open[j], j));
        let Some(j) = slack else { break };
        let target = up.open[j];

        let mut nodes = vec![target];
        while *nodes.last().unwrap() != root {
            let w = *nodes.last().unwrap();
            let g = cct
                .grandparent(w)
                .expect("open copies sit on core nodes, so the grandparent chain reaches the root");
            nodes.push(g);
        }
        nodes.reverse();
        let m = nodes.len() - 1;
        let mut chain = vec![v];
        if m > 1 {
            for &w in &nodes[1..m] {
                let pick = xi
                    .preimage(w)
                    .into_iter()
                    .find(|c| movable.contains(c))
                    .ok_or(Error::RouteMissing { facility: ind.vertex(w) })?;
                chain.push(pick);
            }
        }
        for i in 0..chain.len() - 1 {
            assignment[chain[i]] = assignment[chain[i + 1]];
        }
        assignment[*chain.last().unwrap()] = Some(j);
        loads[j] += 1;
        for c in &chain[1..] {
            movable.remove(c);
        }
        waiting.remove(&v);
        routes.push(ExchangeRoute {
            nodes,
            clients: chain,
            copy: j,
        });
    }

    Ok(PassDownResult {
        open: up.open.clone(),
        assignment,
        unserved: waiting.into_iter().collect(),
        routes,
    })
}
