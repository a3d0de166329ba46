//! Radius guessing, threshold-graph decomposition and the per-component
//! recombination DP.
//!
//! At a guessed radius `r` every facility is joined to every client within
//! distance `r`. Each connected component of that graph becomes an
//! [`InducedInstance`] whose hop metric `d_G` satisfies `d <= r * d_G`, so a
//! solution of induced radius `rho` has original radius at most `rho * r`.

use std::collections::{BTreeMap, VecDeque};

use num_traits::Zero;

use crate::cct::preprocess_facilities;
use crate::error::{Error, Result};
use crate::instance::{
    candidate_radii, structural_violation, CapacityMode, Instance, Metric, OpenCopy, ProblemKind,
    Solution, Vertex,
};
use crate::rational::{int, Rational};

/// Distance value for node pairs in different components (never happens inside
/// one induced instance).
pub const UNREACHABLE: u32 = u32::MAX;

/// A connected piece of the threshold graph at radius `r`, with its unweighted
/// hop metric.
///
/// Nodes are indexed locally (`0..len()`) in ascending order of their vertex in
/// the parent instance. A vertex that is both a client and a facility is a
/// single node, at hop distance zero from itself.
#[derive(Clone, Debug)]
pub struct InducedInstance<'a> {
    parent: &'a Instance,
    radius: Rational,
    nodes: Vec<Vertex>,
    client: Vec<bool>,
    facility: Vec<bool>,
    adj: Vec<Vec<usize>>,
    dist: Vec<u32>,
    upper: Vec<u32>,
    clients: Vec<usize>,
    facilities: Vec<usize>,
}

impl<'a> InducedInstance<'a> {
    /// Builds the induced instance on `nodes` (sorted). `upper` is indexed like
    /// `nodes`; entries of non-facilities are ignored.
    pub(crate) fn build(
        parent: &'a Instance,
        radius: Rational,
        nodes: Vec<Vertex>,
        facility: Vec<bool>,
        upper: Vec<u32>,
    ) -> Self {
        let n = nodes.len();
        let client: Vec<bool> = nodes.iter().map(|&v| parent.is_client(v)).collect();
        let mut adj = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                let joinable = (facility[a] && client[b]) || (client[a] && facility[b]);
                if joinable && *parent.d(nodes[a], nodes[b]) <= radius {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        let mut dist = vec![UNREACHABLE; n * n];
        for s in 0..n {
            dist[s * n + s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                let dv = dist[s * n + v];
                for &w in &adj[v] {
                    if dist[s * n + w] == UNREACHABLE {
                        dist[s * n + w] = dv + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        let upper = upper
            .into_iter()
            .zip(&facility)
            .map(|(u, &f)| if f { u } else { 0 })
            .collect();
        let clients = (0..n).filter(|&i| client[i]).collect();
        let facilities = (0..n).filter(|&i| facility[i]).collect();
        InducedInstance {
            parent,
            radius,
            nodes,
            client,
            facility,
            adj,
            dist,
            upper,
            clients,
            facilities,
        }
    }

    pub fn parent(&self) -> &'a Instance {
        self.parent
    }

    /// The guessed radius this instance was induced at.
    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn vertex(&self, node: usize) -> Vertex {
        self.nodes[node]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.nodes
    }

    pub fn node_of(&self, v: Vertex) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    pub fn is_client(&self, node: usize) -> bool {
        self.client[node]
    }

    pub fn is_facility(&self, node: usize) -> bool {
        self.facility[node]
    }

    /// Local client nodes, ascending.
    pub fn clients(&self) -> &[usize] {
        &self.clients
    }

    /// Local facility nodes, ascending.
    pub fn facilities(&self) -> &[usize] {
        &self.facilities
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Hop distance `d_G`.
    pub fn d(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.len() + b]
    }

    /// Clients adjacent to facility `u`, plus `u` itself when it is a client.
    pub fn neighborhood(&self, u: usize) -> Vec<usize> {
        let mut hood: Vec<usize> = self.adj[u].iter().copied().filter(|&v| self.client[v]).collect();
        if self.client[u] {
            hood.push(u);
        }
        hood.sort_unstable();
        hood
    }

    /// Upper bound in force for facility `u` (capped after preprocessing).
    pub fn upper(&self, u: usize) -> u32 {
        self.upper[u]
    }

    pub fn lower(&self) -> u32 {
        self.parent.lower
    }

    pub fn is_connected(&self) -> bool {
        (0..self.len()).all(|v| self.d(0, v) != UNREACHABLE)
    }

    /// Keeps only the facilities flagged in `keep` with the given upper bounds
    /// and re-splits into connected pieces. Pieces without a facility are
    /// dropped; their clients are returned as stranded.
    pub(crate) fn restrict_facilities(&self, keep: &[bool], upper: &[u32]) -> (Vec<InducedInstance<'a>>, Vec<Vertex>) {
        let facility: Vec<bool> = (0..self.len()).map(|i| self.facility[i] && keep[i]).collect();
        let whole = InducedInstance::build(
            self.parent,
            self.radius.clone(),
            self.nodes.clone(),
            facility,
            upper.to_vec(),
        );
        whole.split()
    }

    /// Splits into connected components; facility-only pieces are dropped and
    /// client-only pieces reported as stranded.
    fn split(&self) -> (Vec<InducedInstance<'a>>, Vec<Vertex>) {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut parts = Vec::new();
        let mut stranded = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&v| self.d(s, v) != UNREACHABLE).collect();
            for &v in &members {
                seen[v] = true;
            }
            let has_client = members.iter().any(|&v| self.client[v]);
            let has_facility = members.iter().any(|&v| self.facility[v]);
            match (has_client, has_facility) {
                (true, true) => parts.push(InducedInstance::build(
                    self.parent,
                    self.radius.clone(),
                    members.iter().map(|&v| self.nodes[v]).collect(),
                    members.iter().map(|&v| self.facility[v]).collect(),
                    members.iter().map(|&v| self.upper[v]).collect(),
                )),
                (true, false) => stranded.extend(members.iter().map(|&v| self.nodes[v])),
                _ => {}
            }
        }
        (parts, stranded)
    }

    /// The induced instance as a stand-alone [`Instance`] over the hop metric,
    /// with local node `i` as vertex `i`. Facilities carry the bounds in force.
    pub fn to_instance(&self, k: Option<usize>, p: usize) -> Instance {
        let n = self.len();
        let metric = Metric::from_fn(n, |a, b| int(self.d(a, b) as i64));
        let labels = self.nodes.iter().map(|&v| self.parent.label(v).to_string()).collect();
        let kind = if self.clients == self.facilities {
            ProblemKind::Center
        } else {
            ProblemKind::Supplier
        };
        Instance::new(
            labels,
            metric,
            self.facilities.iter().map(|&u| (Vertex(u), self.upper[u])).collect(),
            self.clients.iter().map(|&v| Vertex(v)).collect(),
            self.parent.lower,
            k,
            p,
            self.parent.mode,
            kind,
        )
    }

    /// Maps a solution over local node ids (as produced on [`Self::to_instance`])
    /// back to parent vertices, recomputing the radius in the parent metric.
    pub fn lift(&self, local: &Solution) -> Solution {
        let map = |c: &OpenCopy| OpenCopy::new(self.nodes[c.facility.0], c.copy);
        let open = local.open.iter().map(map).collect();
        let assignment = local
            .assignment
            .iter()
            .map(|(v, c)| (self.nodes[v.0], map(c)))
            .collect();
        Solution::new(self.parent, open, assignment)
    }

    /// Largest hop distance between a served client and its center; `None` if
    /// the solution touches vertices outside this instance.
    pub fn induced_radius(&self, sol: &Solution) -> Option<u32> {
        let mut radius = 0;
        for (v, c) in &sol.assignment {
            let d = self.d(self.node_of(*v)?, self.node_of(c.facility)?);
            radius = radius.max(d);
        }
        Some(radius)
    }
}

/// Components of the threshold graph at one radius.
#[derive(Clone, Debug)]
pub struct ThresholdGraph<'a> {
    pub components: Vec<InducedInstance<'a>>,
    /// Clients with no facility within the radius.
    pub unreachable: Vec<Vertex>,
}

/// Joins each facility to the clients within `r` and splits into components.
pub fn build_threshold_graph<'a>(inst: &'a Instance, r: &Rational) -> ThresholdGraph<'a> {
    let mut nodes: Vec<Vertex> = inst.clients.iter().chain(&inst.facilities).copied().collect();
    nodes.sort();
    nodes.dedup();
    let facility = nodes.iter().map(|&v| inst.is_facility(v)).collect();
    let upper = nodes.iter().map(|&v| inst.upper_of(v).unwrap_or(0)).collect();
    let whole = InducedInstance::build(inst, r.clone(), nodes, facility, upper);
    let (components, unreachable) = whole.split();
    ThresholdGraph {
        components,
        unreachable,
    }
}

/// Boolean table `A[k'][p']` over `0..=k_max` and `0..=p_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolTable {
    k_max: usize,
    p_max: usize,
    cells: Vec<bool>,
}

impl BoolTable {
    pub fn new(k_max: usize, p_max: usize) -> Self {
        BoolTable {
            k_max,
            p_max,
            cells: vec![false; (k_max + 1) * (p_max + 1)],
        }
    }

    /// One-dimensional table for the variants without a cardinality target:
    /// `A[p']` holds for `p' <= coverage`.
    pub fn up_to(coverage: usize, p_max: usize) -> Self {
        let mut t = BoolTable::new(0, p_max);
        for p in 0..=coverage.min(p_max) {
            t.set(0, p, true);
        }
        t
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn get(&self, k: usize, p: usize) -> bool {
        k <= self.k_max && p <= self.p_max && self.cells[k * (self.p_max + 1) + p]
    }

    pub fn set(&mut self, k: usize, p: usize, value: bool) {
        self.cells[k * (self.p_max + 1) + p] = value;
    }
}

/// Per-component target chosen by [`combine_dp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Split {
    pub k: Option<usize>,
    pub p: usize,
}

/// Finds `(k_i, p_i)` with `A_i[k_i][p_i]`, `sum k_i = k` (when `k` is given)
/// and `sum p_i >= p`.
///
/// Runs the disjunctive recurrence over components with the coverage index
/// capped at `p`. Without `k` only column `k' = 0` of each table is read.
pub fn combine_dp(tables: &[BoolTable], k: Option<usize>, p: usize) -> Option<Vec<Split>> {
    let k_target = k.unwrap_or(0);
    let width = p + 1;
    let idx = |kk: usize, s: usize| kk * width + s;
    // back[i][(k', s)] = (k*, p*, previous s) chosen for component i.
    let mut back: Vec<Vec<Option<(usize, usize, usize)>>> = Vec::with_capacity(tables.len());
    let mut reach = vec![false; (k_target + 1) * width];
    reach[idx(0, 0)] = true;
    for table in tables {
        let mut next = vec![false; reach.len()];
        let mut choice = vec![None; reach.len()];
        for kk in 0..=k_target {
            for s in 0..=p {
                if !reach[idx(kk, s)] {
                    continue;
                }
                for k_star in 0..=(k_target - kk).min(table.k_max()) {
                    for p_star in 0..=table.p_max() {
                        if !table.get(k_star, p_star) {
                            continue;
                        }
                        let cell = idx(kk + k_star, (s + p_star).min(p));
                        if !next[cell] {
                            next[cell] = true;
                            choice[cell] = Some((k_star, p_star, s));
                        }
                    }
                }
            }
        }
        reach = next;
        back.push(choice);
    }
    if !reach[idx(k_target, p)] {
        return None;
    }
    let mut splits = vec![Split { k: None, p: 0 }; tables.len()];
    let (mut kk, mut s) = (k_target, p);
    for i in (0..tables.len()).rev() {
        let (k_star, p_star, prev) = back[i][idx(kk, s)].expect("reachable cell has a backpointer");
        splits[i] = Split {
            k: k.map(|_| k_star),
            p: p_star,
        };
        kk -= k_star;
        s = prev;
    }
    Some(splits)
}

/// Solves induced instances for a given cardinality and coverage target.
pub trait ComponentSolver {
    /// A solution opening exactly `k` centers (when given) and serving at least
    /// `p` clients, or `None` when the solver cannot produce one.
    fn solve(&self, ind: &InducedInstance<'_>, k: Option<usize>, p: usize) -> Result<Option<Solution>>;

    /// When true and no cardinality target is set, a single call with `p = 0`
    /// returns a maximum-coverage answer that stands for every smaller target.
    fn maximizes_coverage(&self) -> bool {
        false
    }
}

/// Result of [`solve_with_guessing`].
#[derive(Clone, Debug)]
pub struct GuessOutcome {
    pub solution: Solution,
    /// The smallest radius at which the components recombined.
    pub radius: Rational,
    pub components: usize,
}

/// Preprocessed components at radius `r` plus clients that cannot be served.
pub fn components_at<'a>(inst: &'a Instance, r: &Rational) -> (Vec<InducedInstance<'a>>, Vec<Vertex>) {
    let threshold = build_threshold_graph(inst, r);
    let mut unreachable = threshold.unreachable;
    let mut components = Vec::new();
    for comp in threshold.components {
        match preprocess_facilities(&comp, inst.lower) {
            Ok(pre) => {
                components.extend(pre.components);
                unreachable.extend(pre.stranded);
            }
            Err(_) => unreachable.extend(comp.clients().iter().map(|&v| comp.vertex(v))),
        }
    }
    unreachable.sort();
    (components, unreachable)
}

/// Scans candidate radii upwards and returns the union of component solutions at
/// the first radius where the recombination DP succeeds.
///
/// With a solver that returns induced radius at most `ratio`, the result has
/// radius at most `ratio` times the optimum.
pub fn solve_with_guessing(inst: &Instance, solver: &dyn ComponentSolver, ratio: u32) -> Result<GuessOutcome> {
    if let Some(v) = structural_violation(inst) {
        return Err(Error::InvalidInstance(v.to_string()));
    }
    if inst.p > inst.clients.len() {
        return Err(Error::Infeasible);
    }
    if inst.p == 0 && inst.k.unwrap_or(0) == 0 {
        return Ok(GuessOutcome {
            solution: Solution::empty(),
            radius: Rational::zero(),
            components: 0,
        });
    }
    for r in candidate_radii(inst) {
        let (components, unreachable) = components_at(inst, &r);
        if inst.clients.len() - unreachable.len() < inst.p {
            continue;
        }
        let mut tables = Vec::with_capacity(components.len());
        let mut cache: Vec<BTreeMap<(usize, usize), Solution>> = Vec::with_capacity(components.len());
        for comp in &components {
            let (table, solutions) = fill_table(comp, solver, inst.k, inst.p)?;
            tables.push(table);
            cache.push(solutions);
        }
        let Some(splits) = combine_dp(&tables, inst.k, inst.p) else {
            continue;
        };
        let parts = splits.iter().zip(&cache).map(|(split, sols)| {
            sols.get(&(split.k.unwrap_or(0), split.p))
                .cloned()
                .expect("every true cell has a cached solution")
        });
        let solution = Solution::union(inst, parts.collect::<Vec<_>>());
        debug_assert!(solution.radius <= &r * int(ratio as i64));
        return Ok(GuessOutcome {
            solution,
            radius: r,
            components: components.len(),
        });
    }
    Err(Error::Infeasible)
}

type TableFill = (BoolTable, BTreeMap<(usize, usize), Solution>);

fn fill_table(comp: &InducedInstance<'_>, solver: &dyn ComponentSolver, k: Option<usize>, p: usize) -> Result<TableFill> {
    let p_max = p.min(comp.clients().len());
    let mut solutions = BTreeMap::new();
    if k.is_none() && solver.maximizes_coverage() {
        let sol = solver.solve(comp, None, 0)?.unwrap_or_else(Solution::empty);
        let coverage = sol.coverage().min(p_max);
        for p_prime in 0..=coverage {
            solutions.insert((0, p_prime), sol.clone());
        }
        return Ok((BoolTable::up_to(coverage, p_max), solutions));
    }
    let k_max = k.map_or(0, |k| k.min(comp.facilities().len() * max_copies(comp)));
    let mut table = BoolTable::new(k_max, p_max);
    for kk in 0..=k_max {
        for pp in 0..=p_max {
            let target_k = k.map(|_| kk);
            if let Some(sol) = solver.solve(comp, target_k, pp)? {
                table.set(kk, pp, true);
                solutions.insert((kk, pp), sol);
            }
        }
    }
    Ok((table, solutions))
}

fn max_copies(comp: &InducedInstance<'_>) -> usize {
    match comp.parent().mode {
        CapacityMode::Hard => 1,
        CapacityMode::Soft => comp.parent().k.unwrap_or(1).max(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CapacityMode, ProblemKind};

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

    fn vertex_sets(g: &ThresholdGraph<'_>) -> Vec<Vec<usize>> {
        g.components
            .iter()
            .map(|c| c.vertices().iter().map(|v| v.0).collect())
            .collect()
    }

    #[test]
    fn g1_threshold_components() {
        let inst = g1();
        let g = build_threshold_graph(&inst, &int(1));
        assert_eq!(vertex_sets(&g), vec![vec![0, 2, 3], vec![1, 4, 5]]);
        assert!(g.unreachable.is_empty());

        let g = build_threshold_graph(&inst, &int(10));
        assert_eq!(vertex_sets(&g), vec![vec![0, 1, 2, 3, 4, 5]]);

        let g = build_threshold_graph(&inst, &int(0));
        assert_eq!(vertex_sets(&g), vec![vec![0, 2], vec![1, 5]]);
        assert_eq!(g.unreachable, vec![Vertex(3), Vertex(4)]);
    }

    #[test]
    fn induced_metric_is_hop_count() {
        let inst = g1();
        let g = build_threshold_graph(&inst, &int(9));
        let c = &g.components[0];
        // f1 - c9 - f2 at radius 9.
        let f1 = c.node_of(Vertex(0)).unwrap();
        let f2 = c.node_of(Vertex(1)).unwrap();
        assert_eq!(c.d(f1, f2), 2);
        assert!(c.is_connected());
        assert_eq!(c.neighborhood(f1).len(), 3);
    }

    fn table(k_max: usize, p_max: usize, cells: &[(usize, usize)]) -> BoolTable {
        let mut t = BoolTable::new(k_max, p_max);
        for &(k, p) in cells {
            t.set(k, p, true);
        }
        t
    }

    #[test]
    fn dp_two_components() {
        let a = table(2, 4, &[(1, 2)]);
        let split = combine_dp(&[a.clone(), a], Some(2), 4).unwrap();
        assert_eq!(
            split,
            vec![Split { k: Some(1), p: 2 }, Split { k: Some(1), p: 2 }]
        );
    }

    #[test]
    fn dp_all_false() {
        let a = BoolTable::new(2, 4);
        assert_eq!(combine_dp(&[a], Some(2), 4), None);
    }

    #[test]
    fn dp_unique_three_way_split() {
        // Only (0,0), (1,3), (1,1) reaches k=2, p=4.
        let a1 = table(2, 4, &[(0, 0), (2, 1)]);
        let a2 = table(2, 4, &[(1, 3), (0, 2)]);
        let a3 = table(2, 4, &[(1, 1), (2, 0)]);
        let split = combine_dp(&[a1, a2, a3], Some(2), 4).unwrap();
        let got: Vec<(usize, usize)> = split.iter().map(|s| (s.k.unwrap(), s.p)).collect();
        assert_eq!(got, vec![(0, 0), (1, 3), (1, 1)]);
    }

    #[test]
    fn dp_without_cardinality_sums_coverage() {
        let tables = [BoolTable::up_to(2, 5), BoolTable::up_to(1, 5)];
        let split = combine_dp(&tables, None, 3).unwrap();
        assert_eq!(split.iter().map(|s| s.p).sum::<usize>(), 3);
        assert!(split.iter().all(|s| s.k.is_none()));
        assert_eq!(combine_dp(&tables, None, 4), None);
    }

    #[test]
    fn dp_allows_overshooting_coverage() {
        let a = table(1, 3, &[(1, 3)]);
        let split = combine_dp(&[a], Some(1), 2).unwrap();
        assert_eq!(split, vec![Split { k: Some(1), p: 3 }]);
    }
}
