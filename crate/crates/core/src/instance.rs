//! Problem instances, solutions and feasibility checking.
//!
//! Every vertex of an instance lives in one dense distance table. Clients and
//! facilities are (possibly overlapping) subsets of those vertices: in center
//! mode the two sets coincide, in supplier mode they are usually disjoint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// Index of a vertex in an instance's distance table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub usize);

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityMode {
    Soft,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Center,
    Supplier,
}

/// Dense symmetric distance table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metric {
    n: usize,
    table: Vec<Rational>,
}

impl Metric {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut table = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                table.push(f(i, j));
            }
        }
        Metric { n, table }
    }

    /// Builds a metric from a strictly lower-triangular table: `rows[i]` holds
    /// `d(i, 0), ..., d(i, i - 1)`. The diagonal is zero.
    pub fn from_lower_triangle(rows: &[Vec<Rational>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().enumerate().any(|(i, r)| r.len() != i) {
            return None;
        }
        Some(Metric::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => Rational::zero(),
            std::cmp::Ordering::Greater => rows[i][j].clone(),
            std::cmp::Ordering::Less => rows[j][i].clone(),
        }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> &Rational {
        &self.table[a * self.n + b]
    }
}

/// A capacitated center/supplier instance with uniform lower bound `lower`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub labels: Vec<String>,
    pub metric: Metric,
    /// Sorted, deduplicated.
    pub clients: Vec<Vertex>,
    /// Sorted, deduplicated; `upper[i]` belongs to `facilities[i]`.
    pub facilities: Vec<Vertex>,
    pub upper: Vec<u32>,
    pub lower: u32,
    pub k: Option<usize>,
    pub p: usize,
    pub mode: CapacityMode,
    pub kind: ProblemKind,
}

impl Instance {
    /// Assembles an instance, sorting the client and facility lists.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        labels: Vec<String>,
        metric: Metric,
        mut facilities: Vec<(Vertex, u32)>,
        mut clients: Vec<Vertex>,
        lower: u32,
        k: Option<usize>,
        p: usize,
        mode: CapacityMode,
        kind: ProblemKind,
    ) -> Self {
        facilities.sort();
        facilities.dedup_by_key(|f| f.0);
        clients.sort();
        clients.dedup();
        let (facilities, upper) = facilities.into_iter().unzip();
        Instance {
            labels,
            metric,
            clients,
            facilities,
            upper,
            lower,
            k,
            p,
            mode,
            kind,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.metric.len()
    }

    pub fn d(&self, a: Vertex, b: Vertex) -> &Rational {
        self.metric.get(a.0, b.0)
    }

    pub fn is_client(&self, v: Vertex) -> bool {
        self.clients.binary_search(&v).is_ok()
    }

    pub fn is_facility(&self, v: Vertex) -> bool {
        self.facilities.binary_search(&v).is_ok()
    }

    pub fn upper_of(&self, v: Vertex) -> Option<u32> {
        self.facilities
            .binary_search(&v)
            .ok()
            .map(|i| self.upper[i])
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v.0]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<Vertex> {
        self.labels.iter().position(|l| l == label).map(Vertex)
    }

    /// `Some(U)` when every facility has the same upper bound.
    pub fn uniform_upper(&self) -> Option<u32> {
        let first = *self.upper.first()?;
        self.upper.iter().all(|&u| u == first).then_some(first)
    }

    pub fn with_p(&self, p: usize) -> Self {
        Instance { p, ..self.clone() }
    }

    pub fn with_k(&self, k: Option<usize>) -> Self {
        Instance { k, ..self.clone() }
    }
}

/// One open center: copy `copy` of facility `facility`. Hard-mode solutions only
/// use copy 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpenCopy {
    pub facility: Vertex,
    pub copy: u32,
}

impl OpenCopy {
    pub fn new(facility: Vertex, copy: u32) -> Self {
        OpenCopy { facility, copy }
    }
}

/// Served clients, open copies and the assignment between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Sorted.
    pub open: Vec<OpenCopy>,
    pub assignment: BTreeMap<Vertex, OpenCopy>,
    /// Maximum assigned distance in the instance metric; zero when nothing is served.
    pub radius: Rational,
}

impl Solution {
    pub fn empty() -> Self {
        Solution {
            open: Vec::new(),
            assignment: BTreeMap::new(),
            radius: Rational::zero(),
        }
    }

    pub fn new(inst: &Instance, mut open: Vec<OpenCopy>, assignment: BTreeMap<Vertex, OpenCopy>) -> Self {
        open.sort();
        let radius = assignment_radius(inst, &assignment);
        Solution {
            open,
            assignment,
            radius,
        }
    }

    pub fn served(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.assignment.keys().copied()
    }

    pub fn coverage(&self) -> usize {
        self.assignment.len()
    }

    /// Client count per open copy, including copies that serve nobody.
    pub fn loads(&self) -> BTreeMap<OpenCopy, usize> {
        let mut loads: BTreeMap<OpenCopy, usize> = self.open.iter().map(|&c| (c, 0)).collect();
        for c in self.assignment.values() {
            *loads.entry(*c).or_default() += 1;
        }
        loads
    }

    /// Open facilities with their copy multiplicities.
    pub fn multiplicities(&self) -> BTreeMap<Vertex, usize> {
        let mut m = BTreeMap::new();
        for c in &self.open {
            *m.entry(c.facility).or_default() += 1;
        }
        m
    }

    /// Merges solutions over disjoint vertex sets.
    pub fn union(inst: &Instance, parts: impl IntoIterator<Item = Solution>) -> Self {
        let mut open = Vec::new();
        let mut assignment = BTreeMap::new();
        for part in parts {
            open.extend(part.open);
            assignment.extend(part.assignment);
        }
        Solution::new(inst, open, assignment)
    }
}

/// Maximum of `d(v, φ(v))` over the assignment, recomputed from the metric.
pub fn assignment_radius(inst: &Instance, assignment: &BTreeMap<Vertex, OpenCopy>) -> Rational {
    assignment
        .iter()
        .map(|(v, c)| inst.d(*v, c.facility))
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero)
}

/// A single structural or feasibility finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NegativeDistance { a: Vertex, b: Vertex },
    NonzeroDiagonal { a: Vertex },
    Asymmetric { a: Vertex, b: Vertex },
    Triangle { a: Vertex, b: Vertex, c: Vertex },
    LowerExceedsUpper { facility: Vertex, lower: u32, upper: u32 },
    TargetExceedsClients { p: usize, clients: usize },
    CenterSetsDiffer,
    UnknownVertex { v: Vertex },
    LabelCount { labels: usize, vertices: usize },
    CoverageShortfall { served: usize, required: usize },
    CapacityLower { copy: OpenCopy, load: usize, lower: u32 },
    CapacityUpper { copy: OpenCopy, load: usize, upper: u32 },
    KMismatch { expected: usize, open: usize },
    SoftMultiplicityInHardMode { facility: Vertex, copies: usize },
    NotAFacility { v: Vertex },
    NotAClient { v: Vertex },
    UnopenedTarget { client: Vertex, copy: OpenCopy },
    DuplicateCopy { copy: OpenCopy },
    RadiusMismatch { reported: Rational, actual: Rational },
    NotATree { node: Vertex },
    OpeningOutOfRange { node: Vertex, y: Rational },
    FractionalTotal { total: Rational },
    InteriorNotOpen { node: Vertex, y: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NegativeDistance { a, b } => write!(f, "negative distance between {a} and {b}"),
            NonzeroDiagonal { a } => write!(f, "nonzero self-distance at {a}"),
            Asymmetric { a, b } => write!(f, "asymmetric distance between {a} and {b}"),
            Triangle { a, b, c } => write!(f, "triangle inequality fails at ({a}, {b}, {c})"),
            LowerExceedsUpper { facility, lower, upper } => {
                write!(f, "lower bound {lower} exceeds upper bound {upper} at {facility}")
            }
            TargetExceedsClients { p, clients } => {
                write!(f, "coverage target {p} exceeds client count {clients}")
            }
            CenterSetsDiffer => write!(f, "center instance with different client and facility sets"),
            UnknownVertex { v } => write!(f, "vertex {v} is outside the distance table"),
            LabelCount { labels, vertices } => {
                write!(f, "{labels} labels for {vertices} vertices")
            }
            CoverageShortfall { served, required } => {
                write!(f, "served {served} clients, {required} required")
            }
            CapacityLower { copy, load, lower } => write!(
                f,
                "copy {} of {} serves {load} < {lower}",
                copy.copy, copy.facility
            ),
            CapacityUpper { copy, load, upper } => write!(
                f,
                "copy {} of {} serves {load} > {upper}",
                copy.copy, copy.facility
            ),
            KMismatch { expected, open } => write!(f, "{open} centers open, exactly {expected} required"),
            SoftMultiplicityInHardMode { facility, copies } => {
                write!(f, "{copies} copies of {facility} in hard mode")
            }
            NotAFacility { v } => write!(f, "{v} is not a facility"),
            NotAClient { v } => write!(f, "{v} is not a client"),
            UnopenedTarget { client, copy } => write!(
                f,
                "{client} assigned to unopened copy {} of {}",
                copy.copy, copy.facility
            ),
            DuplicateCopy { copy } => write!(f, "copy {} of {} listed twice", copy.copy, copy.facility),
            RadiusMismatch { reported, actual } => {
                write!(f, "reported radius {reported} differs from actual {actual}")
            }
            NotATree { node } => write!(f, "node {node} does not lead to a single root"),
            OpeningOutOfRange { node, y } => write!(f, "opening {y} at {node} outside [0, 1]"),
            FractionalTotal { total } => write!(f, "openings sum to the non-integer {total}"),
            InteriorNotOpen { node, y } => write!(f, "non-leaf {node} has opening {y}, not 1"),
        }
    }
}

/// Outcome of a validation; `ok()` holds exactly when there are no violations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural invariants of an instance.
/// First violation other than an unreachable coverage target. Solvers report
/// the latter as infeasibility rather than as a malformed instance.
pub fn structural_violation(inst: &Instance) -> Option<Violation> {
    validate_instance(inst)
        .violations
        .into_iter()
        .find(|v| !matches!(v, Violation::TargetExceedsClients { .. }))
}

pub fn validate_instance(inst: &Instance) -> FeasibilityReport {
    let mut violations = Vec::new();
    let n = inst.num_vertices();
    if inst.labels.len() != n {
        violations.push(Violation::LabelCount {
            labels: inst.labels.len(),
            vertices: n,
        });
    }
    for &v in inst.clients.iter().chain(&inst.facilities) {
        if v.0 >= n {
            violations.push(Violation::UnknownVertex { v });
        }
    }
    if !violations.is_empty() {
        return FeasibilityReport { violations };
    }
    let m = &inst.metric;
    for a in 0..n {
        if !m.get(a, a).is_zero() {
            violations.push(Violation::NonzeroDiagonal { a: Vertex(a) });
        }
        for b in 0..n {
            if m.get(a, b).is_negative() {
                violations.push(Violation::NegativeDistance {
                    a: Vertex(a),
                    b: Vertex(b),
                });
            }
            if a < b && m.get(a, b) != m.get(b, a) {
                violations.push(Violation::Asymmetric {
                    a: Vertex(a),
                    b: Vertex(b),
                });
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let ab = m.get(a, b);
            for c in 0..n {
                if a < c && *m.get(a, c) > ab + m.get(b, c) {
                    violations.push(Violation::Triangle {
                        a: Vertex(a),
                        b: Vertex(b),
                        c: Vertex(c),
                    });
                }
            }
        }
    }
    for (&f, &u) in inst.facilities.iter().zip(&inst.upper) {
        if inst.lower > u {
            violations.push(Violation::LowerExceedsUpper {
                facility: f,
                lower: inst.lower,
                upper: u,
            });
        }
    }
    if inst.p > inst.clients.len() {
        violations.push(Violation::TargetExceedsClients {
            p: inst.p,
            clients: inst.clients.len(),
        });
    }
    if inst.kind == ProblemKind::Center && inst.clients != inst.facilities {
        violations.push(Violation::CenterSetsDiffer);
    }
    FeasibilityReport { violations }
}

/// Checks a solution against the instance's capacity, coverage, cardinality and
/// multiplicity constraints.
pub fn check_feasible(inst: &Instance, sol: &Solution) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &sol.open {
        if !seen.insert(*c) {
            violations.push(Violation::DuplicateCopy { copy: *c });
        }
        if !inst.is_facility(c.facility) {
            violations.push(Violation::NotAFacility { v: c.facility });
        }
    }
    for (v, c) in &sol.assignment {
        if !inst.is_client(*v) {
            violations.push(Violation::NotAClient { v: *v });
        }
        if !seen.contains(c) {
            violations.push(Violation::UnopenedTarget { client: *v, copy: *c });
        }
    }
    if sol.coverage() < inst.p {
        violations.push(Violation::CoverageShortfall {
            served: sol.coverage(),
            required: inst.p,
        });
    }
    for (copy, load) in sol.loads() {
        let Some(upper) = inst.upper_of(copy.facility) else {
            continue;
        };
        if load < inst.lower as usize {
            violations.push(Violation::CapacityLower {
                copy,
                load,
                lower: inst.lower,
            });
        }
        if load > upper as usize {
            violations.push(Violation::CapacityUpper { copy, load, upper });
        }
    }
    if let Some(k) = inst.k {
        if sol.open.len() != k {
            violations.push(Violation::KMismatch {
                expected: k,
                open: sol.open.len(),
            });
        }
    }
    if inst.mode == CapacityMode::Hard {
        for (facility, copies) in sol.multiplicities() {
            if copies > 1 {
                violations.push(Violation::SoftMultiplicityInHardMode { facility, copies });
            }
        }
    }
    let all_known = sol
        .assignment
        .iter()
        .all(|(v, c)| v.0 < inst.num_vertices() && c.facility.0 < inst.num_vertices());
    if all_known {
        let actual = assignment_radius(inst, &sol.assignment);
        if actual != sol.radius {
            violations.push(Violation::RadiusMismatch {
                reported: sol.radius.clone(),
                actual,
            });
        }
    }
    FeasibilityReport { violations }
}

/// All facility-to-client distances, sorted and deduplicated.
pub fn candidate_radii(inst: &Instance) -> Vec<Rational> {
    let mut radii: Vec<Rational> = inst
        .facilities
        .iter()
        .flat_map(|&u| inst.clients.iter().map(move |&v| inst.d(u, v).clone()))
        .collect();
    radii.sort();
    radii.dedup();
    radii
}
