//! The distance-`r` LP relaxation, an exact feasibility simplex, and checks
//! for distance-`r` transfers of fractional opening vectors.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::instance::{CapacityMode, Instance, Solution, Vertex};
use crate::rational::{self, int, Rational};
use crate::reduce::InducedInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// Linear constraints over non-negative variables `0..vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    pub vars: usize,
    pub rows: Vec<Constraint>,
}

impl LinearSystem {
    pub fn new(vars: usize) -> Self {
        LinearSystem { vars, rows: Vec::new() }
    }

    pub fn push(&mut self, terms: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) {
        self.rows.push(Constraint { terms, sense, rhs });
    }

    pub fn satisfied_by(&self, point: &[Rational]) -> bool {
        point.len() == self.vars
            && point.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|row| {
                let lhs = row.terms.iter().fold(Rational::zero(), |acc, (j, a)| acc + a * &point[*j]);
                match row.sense {
                    Sense::Le => lhs <= row.rhs,
                    Sense::Ge => lhs >= row.rhs,
                    Sense::Eq => lhs == row.rhs,
                }
            })
    }
}

type Terms = Vec<(usize, Rational)>;

/// Phase-one simplex in exact arithmetic with Bland's rule. Returns a point
/// satisfying every constraint with all variables non-negative, or `None` if
/// the system is infeasible.
pub fn find_feasible_point(sys: &LinearSystem) -> Option<Vec<Rational>> {
    let m = sys.rows.len();
    let n = sys.vars;
    // Normalise to non-negative right-hand sides.
    let mut rows: Vec<(Terms, Sense, Rational)> = sys
        .rows
        .iter()
        .map(|row| {
            let mut dense = vec![Rational::zero(); n];
            for (j, a) in &row.terms {
                dense[*j] += a;
            }
            let terms: Vec<(usize, Rational)> = dense.into_iter().enumerate().filter(|(_, a)| !a.is_zero()).collect();
            if row.rhs.is_negative() {
                let flipped = match row.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (terms.into_iter().map(|(j, a)| (j, -a)).collect(), flipped, -row.rhs.clone())
            } else {
                (terms, row.sense, row.rhs.clone())
            }
        })
        .collect();

    let slack_count = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let art_count = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let first_art = n + slack_count;
    let width = first_art + art_count;
    let rhs_col = width;
    let mut table: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut objective = vec![Rational::zero(); width + 1];
    let (mut next_slack, mut next_art) = (n, first_art);
    for (terms, sense, rhs) in rows.drain(..) {
        let mut row = vec![Rational::zero(); width + 1];
        for (j, a) in terms {
            row[j] = a;
        }
        row[rhs_col] = rhs;
        match sense {
            Sense::Le => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Sense::Ge | Sense::Eq => {
                if sense == Sense::Ge {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                }
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
                for j in 0..first_art {
                    if !row[j].is_zero() {
                        objective[j] -= &row[j];
                    }
                }
                objective[rhs_col] -= &row[rhs_col];
            }
        }
        table.push(row);
    }

    while let Some(col) = (0..first_art).find(|&j| objective[j].is_negative()) {
        let mut pivot: Option<(usize, Rational)> = None;
        for (i, row) in table.iter().enumerate() {
            if !row[col].is_positive() {
                continue;
            }
            let ratio = &row[rhs_col] / &row[col];
            let better = match &pivot {
                None => true,
                Some((best_i, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*best_i]),
            };
            if better {
                pivot = Some((i, ratio));
            }
        }
        // Phase one is bounded below by zero, so a pivot row always exists.
        let (prow, _) = pivot.expect("phase-one objective is bounded");
        let p = table[prow][col].clone();
        let support: Vec<usize> = (0..=width).filter(|&j| !table[prow][j].is_zero()).collect();
        for &j in &support {
            table[prow][j] /= &p;
        }
        let pivot_row = table[prow].clone();
        for (i, row) in table.iter_mut().enumerate() {
            if i == prow || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for &j in &support {
                row[j] -= &factor * &pivot_row[j];
            }
        }
        if !objective[col].is_zero() {
            let factor = objective[col].clone();
            for &j in &support {
                objective[j] -= &factor * &pivot_row[j];
            }
        }
        basis[prow] = col;
    }

    if !objective[rhs_col].is_zero() {
        return None;
    }
    let mut point = vec![Rational::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            point[b] = table[i][rhs_col].clone();
        }
    }
    Some(point)
}

/// Fractional assignment and opening variables over the pairs within the
/// radius. Pairs beyond the radius have no variable (they are fixed to zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRelaxation {
    pub radius: Rational,
    pub facilities: Vec<Vertex>,
    pub clients: Vec<Vertex>,
    /// `(facility index, client index)` for every eligible pair.
    pub pairs: Vec<(usize, usize)>,
    pub lower: u32,
    pub upper: Vec<u32>,
    pub k: Option<usize>,
    pub p: usize,
    /// Whether `y <= 1` is imposed. Soft capacities allow several copies per
    /// facility, so their opening variables are left uncapped.
    pub cap_openings: bool,
    facility_labels: Vec<String>,
    client_labels: Vec<String>,
}

/// A candidate point of an [`LpRelaxation`]: `x` indexed like `pairs`, `y`
/// like `facilities`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpPoint {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
}

/// The relaxation of `inst` at radius `r` under its own metric.
pub fn build_lp_r(inst: &Instance, r: &Rational) -> LpRelaxation {
    let pairs = pairs_within(inst.facilities.len(), inst.clients.len(), |f, c| {
        inst.d(inst.facilities[f], inst.clients[c]) <= r
    });
    LpRelaxation {
        radius: r.clone(),
        facilities: inst.facilities.clone(),
        clients: inst.clients.clone(),
        pairs,
        lower: inst.lower,
        upper: inst.upper.clone(),
        k: inst.k,
        p: inst.p,
        cap_openings: inst.mode == CapacityMode::Hard,
        facility_labels: inst.facilities.iter().map(|&v| inst.label(v).to_string()).collect(),
        client_labels: inst.clients.iter().map(|&v| inst.label(v).to_string()).collect(),
    }
}

/// The relaxation of an induced instance at hop radius `r`, using the upper
/// bounds in force there.
pub fn build_lp_r_induced(ind: &InducedInstance<'_>, k: Option<usize>, p: usize, r: u32) -> LpRelaxation {
    let fs = ind.facilities();
    let cs = ind.clients();
    let pairs = pairs_within(fs.len(), cs.len(), |f, c| ind.d(fs[f], cs[c]) <= r);
    let parent = ind.parent();
    LpRelaxation {
        radius: int(r as i64),
        facilities: fs.iter().map(|&u| ind.vertex(u)).collect(),
        clients: cs.iter().map(|&v| ind.vertex(v)).collect(),
        pairs,
        lower: parent.lower,
        upper: fs.iter().map(|&u| ind.upper(u)).collect(),
        k,
        p,
        cap_openings: parent.mode == CapacityMode::Hard,
        facility_labels: fs.iter().map(|&u| parent.label(ind.vertex(u)).to_string()).collect(),
        client_labels: cs.iter().map(|&v| parent.label(ind.vertex(v)).to_string()).collect(),
    }
}

fn pairs_within(facilities: usize, clients: usize, eligible: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for f in 0..facilities {
        for c in 0..clients {
            if eligible(f, c) {
                pairs.push((f, c));
            }
        }
    }
    pairs
}

impl LpRelaxation {
    fn y_var(&self, f: usize) -> usize {
        self.pairs.len() + f
    }

    /// The constraint system over `x` (pair order) followed by `y`.
    pub fn system(&self) -> LinearSystem {
        let nf = self.facilities.len();
        let mut sys = LinearSystem::new(self.pairs.len() + nf);
        let one = Rational::one;
        for (j, &(f, _)) in self.pairs.iter().enumerate() {
            sys.push(vec![(j, one()), (self.y_var(f), -one())], Sense::Le, Rational::zero());
        }
        if self.cap_openings {
            for f in 0..nf {
                sys.push(vec![(self.y_var(f), one())], Sense::Le, one());
            }
        }
        if let Some(k) = self.k {
            sys.push((0..nf).map(|f| (self.y_var(f), one())).collect(), Sense::Eq, int(k as i64));
        }
        sys.push((0..self.pairs.len()).map(|j| (j, one())).collect(), Sense::Ge, int(self.p as i64));
        for c in 0..self.clients.len() {
            let terms: Vec<(usize, Rational)> = self
                .pairs
                .iter()
                .enumerate()
                .filter(|(_, &(_, pc))| pc == c)
                .map(|(j, _)| (j, one()))
                .collect();
            if !terms.is_empty() {
                sys.push(terms, Sense::Le, one());
            }
        }
        for f in 0..nf {
            let served: Vec<usize> = (0..self.pairs.len()).filter(|&j| self.pairs[j].0 == f).collect();
            let mut lower: Vec<(usize, Rational)> = served.iter().map(|&j| (j, -one())).collect();
            lower.push((self.y_var(f), int(self.lower as i64)));
            sys.push(lower, Sense::Le, Rational::zero());
            let mut upper: Vec<(usize, Rational)> = served.iter().map(|&j| (j, one())).collect();
            upper.push((self.y_var(f), -int(self.upper[f] as i64)));
            sys.push(upper, Sense::Le, Rational::zero());
        }
        sys
    }

    /// Checks every constraint family directly from its definition. Returns one
    /// message per violated constraint.
    pub fn recheck(&self, pt: &LpPoint) -> Vec<String> {
        let mut problems = Vec::new();
        if pt.x.len() != self.pairs.len() || pt.y.len() != self.facilities.len() {
            problems.push("point has the wrong dimensions".into());
            return problems;
        }
        let zero = Rational::zero();
        let one = Rational::one();
        for (j, x) in pt.x.iter().enumerate() {
            let (f, c) = self.pairs[j];
            if *x < zero || *x > one {
                problems.push(format!("x[{f},{c}] = {} outside [0, 1]", rational::format(x)));
            }
            if *x > pt.y[f] {
                problems.push(format!("x[{f},{c}] exceeds y[{f}]"));
            }
        }
        for (f, y) in pt.y.iter().enumerate() {
            if *y < zero || (self.cap_openings && *y > one) {
                problems.push(format!("y[{f}] = {} out of range", rational::format(y)));
            }
        }
        if let Some(k) = self.k {
            if rational::sum(&pt.y) != int(k as i64) {
                problems.push(format!("openings sum to {}, not {k}", rational::format(&rational::sum(&pt.y))));
            }
        }
        if rational::sum(&pt.x) < int(self.p as i64) {
            problems.push(format!("total assignment below {}", self.p));
        }
        for c in 0..self.clients.len() {
            let served = rational::sum(self.pairs.iter().zip(&pt.x).filter(|((_, pc), _)| *pc == c).map(|(_, x)| x));
            if served > one {
                problems.push(format!("client {c} assigned more than once"));
            }
        }
        for f in 0..self.facilities.len() {
            let load = rational::sum(self.pairs.iter().zip(&pt.x).filter(|((pf, _), _)| *pf == f).map(|(_, x)| x));
            if load < int(self.lower as i64) * &pt.y[f] {
                problems.push(format!("facility {f} below its lower bound"));
            }
            if load > int(self.upper[f] as i64) * &pt.y[f] {
                problems.push(format!("facility {f} above its upper bound"));
            }
        }
        problems
    }

    /// Integral point of a solution: `y` counts open copies, `x` marks
    /// assignments. Assignments beyond the radius are dropped.
    pub fn point_from_solution(&self, sol: &Solution) -> LpPoint {
        let mut y = vec![Rational::zero(); self.facilities.len()];
        for copy in &sol.open {
            if let Ok(f) = self.facilities.binary_search(&copy.facility) {
                y[f] += Rational::one();
            }
        }
        let x = self
            .pairs
            .iter()
            .map(|&(f, c)| match sol.assignment.get(&self.clients[c]) {
                Some(copy) if copy.facility == self.facilities[f] => Rational::one(),
                _ => Rational::zero(),
            })
            .collect();
        LpPoint { x, y }
    }

    /// Renders the relaxation in CPLEX LP text format. All coefficients are
    /// integers; the radius appears in a comment.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ capcenter LP relaxation, format version 1");
        let _ = writeln!(out, "\\ radius {}", rational::format(&self.radius));
        for (f, label) in self.facility_labels.iter().enumerate() {
            let _ = writeln!(out, "\\ y{f} opens facility {label}");
        }
        for (c, label) in self.client_labels.iter().enumerate() {
            let _ = writeln!(out, "\\ client index {c} is {label}");
        }
        let name = |j: usize| {
            if j < self.pairs.len() {
                format!("x{}_{}", self.pairs[j].0, self.pairs[j].1)
            } else {
                format!("y{}", j - self.pairs.len())
            }
        };
        let _ = writeln!(out, "Minimize");
        let _ = writeln!(out, " obj: 0 y0");
        let _ = writeln!(out, "Subject To");
        for (i, row) in self.system().rows.iter().enumerate() {
            let mut line = format!(" c{}:", i + 1);
            for (j, a) in &row.terms {
                let sign = if a.is_negative() { '-' } else { '+' };
                let mag = a.abs();
                if mag.is_one() {
                    let _ = write!(line, " {sign} {}", name(*j));
                } else {
                    let _ = write!(line, " {sign} {} {}", mag.numer(), name(*j));
                }
            }
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, "{line} {sense} {}", row.rhs.numer());
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.pairs.len() + self.facilities.len() {
            let _ = writeln!(out, " {} >= 0", name(j));
        }
        let _ = writeln!(out, "End");
        out
    }
}

/// A feasible point of the relaxation, or `None` when it is infeasible.
pub fn solve_feasibility(lp: &LpRelaxation) -> Option<LpPoint> {
    if lp.facilities.is_empty() {
        // With no variables the system reduces to `0 >= p` and `0 = k`.
        let ok = lp.p == 0 && lp.k.unwrap_or(0) == 0;
        return ok.then(|| LpPoint {
            x: Vec::new(),
            y: Vec::new(),
        });
    }
    let point = find_feasible_point(&lp.system())?;
    let split = lp.pairs.len();
    Some(LpPoint {
        x: point[..split].to_vec(),
        y: point[split..].to_vec(),
    })
}

/// Facilities with a distance table and capacity bounds, the setting in which
/// opening vectors are transferred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferSpace {
    pub facilities: Vec<Vertex>,
    pub dist: Vec<Vec<Rational>>,
    pub lower: Vec<u32>,
    pub upper: Vec<u32>,
}

impl TransferSpace {
    /// Facilities of `inst` under its own metric.
    pub fn from_instance(inst: &Instance) -> Self {
        let fs = &inst.facilities;
        TransferSpace {
            facilities: fs.clone(),
            dist: fs.iter().map(|&a| fs.iter().map(|&b| inst.d(a, b).clone()).collect()).collect(),
            lower: vec![inst.lower; fs.len()],
            upper: inst.upper.clone(),
        }
    }

    /// Facilities of an induced instance under the hop metric.
    pub fn from_induced(ind: &InducedInstance<'_>) -> Self {
        let fs = ind.facilities();
        TransferSpace {
            facilities: fs.iter().map(|&u| ind.vertex(u)).collect(),
            dist: fs.iter().map(|&a| fs.iter().map(|&b| int(ind.d(a, b) as i64)).collect()).collect(),
            lower: vec![ind.lower(); fs.len()],
            upper: fs.iter().map(|&u| ind.upper(u)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    fn near(&self, a: usize, b: usize, r: &Rational) -> bool {
        self.dist[a][b] <= *r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Decide the subset conditions by transportation feasibility.
    Flow,
    /// Enumerate every subset (at most 20 facilities).
    Exhaustive,
}

pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Whether `y2` is a distance-`r` transfer of `y`: equal totals, the upper-bound
/// subset condition and the lower-bound subset condition.
pub fn verify_transfer(space: &TransferSpace, y: &[Rational], y2: &[Rational], r: &Rational, mode: CheckMode) -> Result<bool> {
    let n = space.len();
    if y.len() != n || y2.len() != n {
        return Err(Error::InvalidInstance("opening vector length differs from facility count".into()));
    }
    if mode == CheckMode::Exhaustive && n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            facilities: n,
            clients: 0,
            max_facilities: EXHAUSTIVE_LIMIT,
            max_clients: 0,
        });
    }
    if rational::sum(y) != rational::sum(y2) {
        return Ok(false);
    }
    let weigh = |bounds: &[u32], v: &[Rational]| -> Vec<Rational> {
        bounds.iter().zip(v).map(|(&b, q)| int(b as i64) * q).collect()
    };
    // Upper side: mass U*y at W must fit into U*y2 near W.
    let upper_ok = hall(space, &weigh(&space.upper, y), &weigh(&space.upper, y2), r, mode);
    // Lower side: mass L*y2 at W must fit into L*y near W.
    let lower_ok = hall(space, &weigh(&space.lower, y2), &weigh(&space.lower, y), r, mode);
    Ok(upper_ok && lower_ok)
}

/// `sum_{w near W} capacity_w >= sum_{u in W} supply_u` for every subset `W`.
fn hall(space: &TransferSpace, supply: &[Rational], capacity: &[Rational], r: &Rational, mode: CheckMode) -> bool {
    let n = space.len();
    match mode {
        CheckMode::Flow => {
            let total = rational::sum(supply);
            let (s, t) = (2 * n, 2 * n + 1);
            let mut net = FlowNetwork::<Rational>::new(2 * n + 2);
            for u in 0..n {
                net.add_edge(s, u, Rational::zero(), supply[u].clone());
                net.add_edge(n + u, t, Rational::zero(), capacity[u].clone());
                for w in 0..n {
                    if space.near(u, w, r) {
                        net.add_edge(u, n + w, Rational::zero(), total.clone());
                    }
                }
            }
            net.max_flow(s, t).is_some_and(|f| f == total)
        }
        CheckMode::Exhaustive => (1u32..(1 << n)).all(|mask| {
            let inside = |u: usize| mask >> u & 1 == 1;
            let need = rational::sum((0..n).filter(|&u| inside(u)).map(|u| &supply[u]));
            let have = rational::sum(
                (0..n)
                    .filter(|&w| (0..n).any(|u| inside(u) && space.near(u, w, r)))
                    .map(|w| &capacity[w]),
            );
            have >= need
        }),
    }
}

/// Mass moved between facilities: `g[u][w]` leaves `u` and arrives at `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferWitness {
    pub g: Vec<Vec<Rational>>,
}

impl TransferWitness {
    pub fn identity(y: &[Rational]) -> Self {
        let n = y.len();
        let mut g = vec![vec![Rational::zero(); n]; n];
        for (u, q) in y.iter().enumerate() {
            g[u][u] = q.clone();
        }
        TransferWitness { g }
    }

    pub fn outflow(&self) -> Vec<Rational> {
        self.g.iter().map(rational::sum).collect()
    }

    pub fn inflow(&self) -> Vec<Rational> {
        (0..self.g.len()).map(|w| rational::sum(self.g.iter().map(|row| &row[w]))).collect()
    }

    /// Non-negative, zero beyond `r`, rows summing to `y` and columns to `y2`.
    pub fn is_valid(&self, space: &TransferSpace, y: &[Rational], y2: &[Rational], r: &Rational) -> bool {
        let n = space.len();
        self.g.len() == n
            && self.g.iter().enumerate().all(|(u, row)| {
                row.len() == n
                    && row
                        .iter()
                        .enumerate()
                        .all(|(w, q)| !q.is_negative() && (q.is_zero() || space.near(u, w, r)))
            })
            && self.outflow() == y
            && self.inflow() == y2
    }

    /// Chains `self` (from `y` to `y'`) with `next` (from `y'` to `y''`):
    /// mass reaching an intermediate facility leaves it in the proportions
    /// `next` uses.
    pub fn compose(&self, next: &TransferWitness) -> TransferWitness {
        let n = self.g.len();
        let middle = self.inflow();
        let mut g = vec![vec![Rational::zero(); n]; n];
        for (v, through) in middle.iter().enumerate() {
            if through.is_zero() {
                continue;
            }
            for (row, out) in self.g.iter().zip(g.iter_mut()) {
                if row[v].is_zero() {
                    continue;
                }
                let share = &row[v] / through;
                for (cell, onward) in out.iter_mut().zip(&next.g[v]) {
                    if !onward.is_zero() {
                        *cell += &share * onward;
                    }
                }
            }
        }
        TransferWitness { g }
    }
}

/// Finds a mass-moving witness from `y` to `y2` that never moves mass farther
/// than `r`, if one exists.
pub fn verify_local_transfer(space: &TransferSpace, y: &[Rational], y2: &[Rational], r: &Rational) -> Result<Option<TransferWitness>> {
    let n = space.len();
    let total = rational::sum(y);
    if y.len() != n || y2.len() != n || total != rational::sum(y2) {
        return Err(Error::SumMismatch);
    }
    let (s, t) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::<Rational>::new(2 * n + 2);
    let mut arcs = Vec::new();
    for u in 0..n {
        net.add_edge(s, u, Rational::zero(), y[u].clone());
        net.add_edge(n + u, t, Rational::zero(), y2[u].clone());
        for w in 0..n {
            if space.near(u, w, r) {
                arcs.push((u, w, net.add_edge(u, n + w, Rational::zero(), total.clone())));
            }
        }
    }
    if net.max_flow(s, t) != Some(total) {
        return Ok(None);
    }
    let mut g = vec![vec![Rational::zero(); n]; n];
    for (u, w, e) in arcs {
        g[u][w] = net.flow(e);
    }
    Ok(Some(TransferWitness { g }))
}

/// Which capacity side is uniform when certifying a local transfer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UniformSide {
    Lower,
    Upper,
}

/// A witness plus the subset condition of the non-uniform side: together they
/// make `y2` a distance-`r` transfer of `y`.
pub fn certify_local_transfer(
    space: &TransferSpace,
    y: &[Rational],
    y2: &[Rational],
    r: &Rational,
    side: UniformSide,
) -> Result<Option<TransferWitness>> {
    let uniform = |b: &[u32]| b.windows(2).all(|w| w[0] == w[1]);
    let weigh = |bounds: &[u32], v: &[Rational]| -> Vec<Rational> {
        bounds.iter().zip(v).map(|(&b, q)| int(b as i64) * q).collect()
    };
    let side_ok = match side {
        UniformSide::Lower => {
            if !uniform(&space.lower) {
                return Err(Error::NotUniform);
            }
            hall(space, &weigh(&space.upper, y), &weigh(&space.upper, y2), r, CheckMode::Flow)
        }
        UniformSide::Upper => {
            if !uniform(&space.upper) {
                return Err(Error::NotUniform);
            }
            hall(space, &weigh(&space.lower, y2), &weigh(&space.lower, y), r, CheckMode::Flow)
        }
    };
    let witness = verify_local_transfer(space, y, y2, r)?;
    Ok(witness.filter(|_| side_ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CapacityMode, Metric, ProblemKind};
    use crate::oracle::exact_solve;
    use crate::rational::frac;
    use proptest::prelude::*;

    fn line(points: &[i64]) -> Metric {
        Metric::from_fn(points.len(), |i, j| int((points[i] - points[j]).abs()))
    }

    fn g1_left(k: Option<usize>, p: usize) -> Instance {
        Instance::new(
            ["f1", "c0", "c1"].map(String::from).to_vec(),
            line(&[0, 0, 1]),
            vec![(Vertex(0), 2)],
            vec![Vertex(1), Vertex(2)],
            2,
            k,
            p,
            CapacityMode::Hard,
            ProblemKind::Supplier,
        )
    }

    #[test]
    fn simplex_small_systems() {
        // x + y = 1, x - y >= 1/2  ->  feasible.
        let mut sys = LinearSystem::new(2);
        sys.push(vec![(0, int(1)), (1, int(1))], Sense::Eq, int(1));
        sys.push(vec![(0, int(1)), (1, int(-1))], Sense::Ge, frac(1, 2));
        let pt = find_feasible_point(&sys).unwrap();
        assert!(sys.satisfied_by(&pt));
        // x <= 1, x >= 2 -> infeasible.
        let mut sys = LinearSystem::new(1);
        sys.push(vec![(0, int(1))], Sense::Le, int(1));
        sys.push(vec![(0, int(1))], Sense::Ge, int(2));
        assert_eq!(find_feasible_point(&sys), None);
        // Negative right-hand side: -x <= -3.
        let mut sys = LinearSystem::new(1);
        sys.push(vec![(0, int(-1))], Sense::Le, int(-3));
        let pt = find_feasible_point(&sys).unwrap();
        assert!(pt[0] >= int(3));
    }

    #[test]
    fn zero_targets_accept_zero_point() {
        let inst = g1_left(Some(0), 0);
        let lp = build_lp_r(&inst, &int(1));
        let zero = LpPoint {
            x: vec![int(0); lp.pairs.len()],
            y: vec![int(0); lp.facilities.len()],
        };
        assert!(lp.recheck(&zero).is_empty());
        assert!(solve_feasibility(&lp).is_some());
    }

    #[test]
    fn toy_relaxation() {
        let inst = g1_left(Some(1), 2);
        let lp = build_lp_r(&inst, &int(1));
        assert_eq!(lp.pairs.len(), 2);
        let full = LpPoint {
            x: vec![int(1), int(1)],
            y: vec![int(1)],
        };
        assert!(lp.recheck(&full).is_empty());
        let pt = solve_feasibility(&lp).unwrap();
        assert!(lp.recheck(&pt).is_empty());

        let tight = build_lp_r(&inst, &int(0));
        assert_eq!(tight.pairs.len(), 1);
        assert_eq!(solve_feasibility(&tight), None);
    }

    #[test]
    fn integral_optimum_is_feasible() {
        let inst = g1_left(Some(1), 2);
        let opt = exact_solve(&inst).unwrap();
        let lp = build_lp_r(&inst, &opt.radius);
        let pt = lp.point_from_solution(&opt.witness);
        assert!(lp.recheck(&pt).is_empty());
    }

    #[test]
    fn dump_has_one_row_per_constraint() {
        let inst = g1_left(Some(1), 2);
        let lp = build_lp_r(&inst, &int(1));
        let text = lp.dump();
        let rows = text.lines().filter(|l| l.starts_with(" c")).count();
        assert_eq!(rows, lp.system().rows.len());
        assert!(text.contains(" c1: + x0_0 - y0 <= 0"));
        assert!(text.ends_with("End\n"));
    }

    /// Three facilities on a line at 0, 1, 2 with the given upper bounds.
    fn space(upper: [u32; 3]) -> TransferSpace {
        TransferSpace {
            facilities: (0..3).map(Vertex).collect(),
            dist: (0..3).map(|a: i64| (0..3).map(|b: i64| int((a - b).abs())).collect()).collect(),
            lower: vec![1; 3],
            upper: upper.to_vec(),
        }
    }

    #[test]
    fn identity_transfer() {
        let sp = space([1, 2, 3]);
        let y = vec![frac(1, 2), int(1), frac(1, 2)];
        for mode in [CheckMode::Flow, CheckMode::Exhaustive] {
            assert!(verify_transfer(&sp, &y, &y, &int(0), mode).unwrap());
        }
        let w = verify_local_transfer(&sp, &y, &y, &int(0)).unwrap().unwrap();
        assert_eq!(w, TransferWitness::identity(&y));
    }

    #[test]
    fn unit_move_needs_radius_two() {
        let sp = space([2, 1, 3]);
        let y = vec![int(1), int(0), int(0)];
        let y2 = vec![int(0), int(0), int(1)];
        for mode in [CheckMode::Flow, CheckMode::Exhaustive] {
            assert!(verify_transfer(&sp, &y, &y2, &int(2), mode).unwrap());
            assert!(!verify_transfer(&sp, &y, &y2, &int(1), mode).unwrap());
        }
        let w = verify_local_transfer(&sp, &y, &y2, &int(2)).unwrap().unwrap();
        assert_eq!(w.g[0][2], int(1));
        assert_eq!(verify_local_transfer(&sp, &y, &y2, &int(1)).unwrap(), None);
        assert!(certify_local_transfer(&sp, &y, &y2, &int(2), UniformSide::Lower).unwrap().is_some());
    }

    #[test]
    fn local_transfer_rejects_sum_mismatch() {
        let sp = space([1, 1, 1]);
        let y = vec![int(1), int(0), int(0)];
        let y2 = vec![int(1), int(1), int(0)];
        assert_eq!(verify_local_transfer(&sp, &y, &y2, &int(1)), Err(Error::SumMismatch));
    }

    #[test]
    fn certify_needs_uniform_side() {
        let mut sp = space([1, 1, 1]);
        sp.lower = vec![0, 1, 1];
        let y = vec![int(1), int(0), int(0)];
        assert_eq!(
            certify_local_transfer(&sp, &y, &y, &int(0), UniformSide::Lower),
            Err(Error::NotUniform)
        );
    }

    fn random_space(n: usize, pos: &[i64], upper: &[u32]) -> TransferSpace {
        TransferSpace {
            facilities: (0..n).map(Vertex).collect(),
            dist: (0..n).map(|a| (0..n).map(|b| int((pos[a] - pos[b]).abs())).collect()).collect(),
            lower: vec![1; n],
            upper: upper[..n].to_vec(),
        }
    }

    fn vector(raw: &[u8], n: usize) -> Vec<Rational> {
        raw[..n].iter().map(|&q| frac(q as i64, 4)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flow_matches_exhaustive(
            n in 1usize..7,
            pos in proptest::collection::vec(0i64..6, 7),
            upper in proptest::collection::vec(1u32..5, 7),
            y in proptest::collection::vec(0u8..5, 7),
            y2 in proptest::collection::vec(0u8..5, 7),
            r in 0i64..4,
        ) {
            let sp = random_space(n, &pos, &upper);
            let (y, mut y2) = (vector(&y, n), vector(&y2, n));
            // Balance the totals half of the time so both outcomes occur.
            let diff = rational::sum(&y) - rational::sum(&y2);
            if !diff.is_negative() {
                y2[0] += diff;
            }
            let r = int(r);
            prop_assert_eq!(
                verify_transfer(&sp, &y, &y2, &r, CheckMode::Flow).unwrap(),
                verify_transfer(&sp, &y, &y2, &r, CheckMode::Exhaustive).unwrap()
            );
        }

        #[test]
        fn certified_local_transfers_are_transfers(
            n in 1usize..7,
            pos in proptest::collection::vec(0i64..6, 7),
            y in proptest::collection::vec(0u8..5, 7),
            y2 in proptest::collection::vec(0u8..5, 7),
            r in 0i64..4,
        ) {
            let sp = random_space(n, &pos, &[3; 7]);
            let (y, mut y2) = (vector(&y, n), vector(&y2, n));
            let diff = rational::sum(&y) - rational::sum(&y2);
            if diff.is_negative() {
                return Ok(());
            }
            y2[0] += diff;
            let r = int(r);
            if let Some(w) = certify_local_transfer(&sp, &y, &y2, &r, UniformSide::Lower).unwrap() {
                prop_assert!(w.is_valid(&sp, &y, &y2, &r));
                prop_assert!(verify_transfer(&sp, &y, &y2, &r, CheckMode::Exhaustive).unwrap());
            }
        }

        #[test]
        fn witnesses_compose(
            n in 1usize..6,
            pos in proptest::collection::vec(0i64..6, 6),
            y in proptest::collection::vec(0u8..5, 6),
            moves in proptest::collection::vec((0usize..6, 0usize..6), 0..6),
            moves2 in proptest::collection::vec((0usize..6, 0usize..6), 0..6),
        ) {
            let sp = random_space(n, &pos, &[3; 6]);
            let y = vector(&y, n);
            // Build y' and y'' by moving half of a facility's mass elsewhere.
            let shift = |v: &[Rational], moves: &[(usize, usize)]| {
                let mut v = v.to_vec();
                for &(a, b) in moves {
                    let (a, b) = (a % n, b % n);
                    let half = &v[a] / int(2);
                    v[a] -= &half;
                    v[b] += half;
                }
                v
            };
            let y1 = shift(&y, &moves);
            let y2 = shift(&y1, &moves2);
            let r1 = int(6);
            let w1 = verify_local_transfer(&sp, &y, &y1, &r1).unwrap().unwrap();
            let w2 = verify_local_transfer(&sp, &y1, &y2, &r1).unwrap().unwrap();
            // Tighten to the radii the witnesses actually use.
            let used = |w: &TransferWitness| {
                let mut m = Rational::zero();
                for u in 0..n {
                    for v in 0..n {
                        if !w.g[u][v].is_zero() && sp.dist[u][v] > m {
                            m = sp.dist[u][v].clone();
                        }
                    }
                }
                m
            };
            let (ra, rb) = (used(&w1), used(&w2));
            let composed = w1.compose(&w2);
            prop_assert!(composed.is_valid(&sp, &y, &y2, &(ra + rb)));
        }
    }
}
