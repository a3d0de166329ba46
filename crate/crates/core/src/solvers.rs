//! The four end-to-end pipelines: preprocess, core-center tree, pass-up,
//! optional relocation, pass-down.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::cct::{build_cct, build_xi, preprocess_facilities, CoreCenterTree, XiMap};
use crate::error::{Error, Result};
use crate::flow::MinCostFlow;
use crate::greedy::{pass_down, pass_up, PassDownResult, PassUpResult};
use crate::instance::{CapacityMode, Instance, OpenCopy, ProblemKind, Solution};
use crate::reduce::{solve_with_guessing, ComponentSolver, GuessOutcome, InducedInstance};

/// Hop radius within which open copies may be relocated.
pub const RELOCATION_RADIUS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Soft capacities, uniform upper bound, supplier or center.
    SoftUniform,
    /// Hard capacities, uniform upper bound, center.
    HardUniformCenter,
    /// Hard capacities, per-facility upper bounds, center.
    HardNonuniformCenter,
    /// Soft capacities, per-facility upper bounds, supplier or center.
    SoftNonuniformSupplier,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SoftUniform,
        Variant::HardUniformCenter,
        Variant::HardNonuniformCenter,
        Variant::SoftNonuniformSupplier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::SoftUniform => "soft-uniform",
            Variant::HardUniformCenter => "hard-uniform-center",
            Variant::HardNonuniformCenter => "hard-nonuniform-center",
            Variant::SoftNonuniformSupplier => "soft-nonuniform-supplier",
        }
    }

    /// Guaranteed approximation ratio.
    pub fn ratio(self) -> u32 {
        match self {
            Variant::SoftUniform => 5,
            Variant::HardUniformCenter => 10,
            Variant::HardNonuniformCenter | Variant::SoftNonuniformSupplier => 11,
        }
    }

    pub fn mode(self) -> CapacityMode {
        match self {
            Variant::SoftUniform | Variant::SoftNonuniformSupplier => CapacityMode::Soft,
            Variant::HardUniformCenter | Variant::HardNonuniformCenter => CapacityMode::Hard,
        }
    }

    /// Rejects instances the variant does not handle.
    pub fn check_compatible(self, inst: &Instance) -> Result<()> {
        let reject = |reason: &str| {
            Err(Error::IncompatibleVariant {
                variant: self.name().to_string(),
                reason: reason.to_string(),
            })
        };
        if inst.k.is_some() {
            return reject("a cardinality target k is not supported");
        }
        if inst.mode != self.mode() {
            return reject(match self.mode() {
                CapacityMode::Soft => "instance has hard capacities",
                CapacityMode::Hard => "instance has soft capacities",
            });
        }
        let needs_center = matches!(self, Variant::HardUniformCenter | Variant::HardNonuniformCenter);
        if needs_center && inst.kind != ProblemKind::Center {
            return reject("instance is not a center instance");
        }
        let needs_uniform = matches!(self, Variant::SoftUniform | Variant::HardUniformCenter);
        if needs_uniform && inst.uniform_upper().is_none() && !inst.facilities.is_empty() {
            return reject("upper bounds are not uniform");
        }
        Ok(())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelocationMode {
    Matching,
    Greedy,
    ClientSubstitution,
}

/// New location for every open copy: `targets[i]` replaces copy `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelocationPlan {
    pub mode: RelocationMode,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
}

impl RelocationPlan {
    /// Sum of the (capped) upper bounds at the targets.
    pub fn weight(&self, ind: &InducedInstance<'_>) -> u64 {
        self.targets.iter().map(|&w| ind.upper(w) as u64).sum()
    }
}

/// Moves the pass-up copies onto distinct facilities within hop distance 6,
/// using a maximum matching of maximum total upper bound.
pub fn relocate_matching(ind: &InducedInstance<'_>, up: &PassUpResult, p: usize) -> Result<RelocationPlan> {
    let a = up.open.len();
    let facilities = ind.facilities();
    let source = 0;
    let sink = 1 + a + facilities.len();
    let mut net = MinCostFlow::new(sink + 1);
    let mut arcs = Vec::new();
    for (i, &u) in up.open.iter().enumerate() {
        net.add_edge(source, 1 + i, 1, 0);
        for (j, &w) in facilities.iter().enumerate() {
            if ind.d(u, w) <= RELOCATION_RADIUS {
                arcs.push((i, w, net.add_edge(1 + i, 1 + a + j, 1, -(ind.upper(w) as i64))));
            }
        }
    }
    for j in 0..facilities.len() {
        net.add_edge(1 + a + j, sink, 1, 0);
    }
    let (matched, cost) = net.run(source, sink, a as i64);
    let weight = (-cost) as u64;
    if matched as usize != a || weight < p as u64 {
        return Err(Error::MatchingDeficient {
            matched: matched as usize,
            open: a,
            weight,
            target: p,
        });
    }
    let mut targets = vec![usize::MAX; a];
    for (i, w, e) in arcs {
        if net.flow(e) == 1 {
            targets[i] = w;
        }
    }
    Ok(RelocationPlan {
        mode: RelocationMode::Matching,
        sources: up.open.clone(),
        targets,
    })
}

/// Moves every copy to the facility with the largest upper bound within hop
/// distance 6 (lowest id on ties).
pub fn relocate_greedy(ind: &InducedInstance<'_>, up: &PassUpResult) -> RelocationPlan {
    let targets = up
        .open
        .iter()
        .map(|&u| {
            let ball = || ind.facilities().iter().copied().filter(move |&w| ind.d(u, w) <= RELOCATION_RADIUS);
            let best = ball().map(|w| ind.upper(w)).max().expect("u is within its own ball");
            ball().find(|&w| ind.upper(w) == best).unwrap()
        })
        .collect();
    RelocationPlan {
        mode: RelocationMode::Greedy,
        sources: up.open.clone(),
        targets,
    }
}

/// Checks distance, distinctness and weight properties of a plan.
pub fn audit_relocation(ind: &InducedInstance<'_>, plan: &RelocationPlan, p: usize) -> Vec<String> {
    let mut problems = Vec::new();
    let limit = match plan.mode {
        RelocationMode::ClientSubstitution => 5,
        _ => RELOCATION_RADIUS,
    };
    for (&u, &w) in plan.sources.iter().zip(&plan.targets) {
        if ind.d(u, w) > limit {
            problems.push(format!("copy at {u} moved to {w} at hop distance {}", ind.d(u, w)));
        }
    }
    if plan.mode != RelocationMode::Greedy {
        let mut seen = plan.targets.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            problems.push("relocation targets are not distinct".into());
        }
    }
    if plan.mode == RelocationMode::Matching && plan.weight(ind) < p as u64 {
        problems.push(format!("relocated capacity {} is below {p}", plan.weight(ind)));
    }
    problems
}

/// Everything one pipeline run on a preprocessed sub-instance produced.
#[derive(Clone, Debug)]
pub struct RunTrace<'a> {
    pub sub: InducedInstance<'a>,
    pub lower: u32,
    pub cct: CoreCenterTree,
    pub xi: XiMap,
    pub pass_up: PassUpResult,
    pub relocation: Option<RelocationPlan>,
    /// Capacity of each copy during pass-down.
    pub capacity: Vec<u32>,
    pub pass_down: PassDownResult,
}

#[derive(Clone, Debug)]
pub struct Traced<'a> {
    pub solution: Solution,
    pub runs: Vec<RunTrace<'a>>,
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::TooFewClients { .. } | Error::MatchingDeficient { .. } | Error::NoFacilitySurvives { .. }
    )
}

/// Runs a variant's pipeline on one induced instance, keeping intermediate
/// results. Sub-instances on which the pipeline cannot open anything
/// contribute no coverage.
pub fn solve_traced<'a>(variant: Variant, ind: &InducedInstance<'a>, p: usize) -> Result<Traced<'a>> {
    let parent = ind.parent();
    if p == 0 && ind.clients().is_empty() {
        return Ok(Traced {
            solution: Solution::empty(),
            runs: Vec::new(),
        });
    }
    // Copies must hold at least one client for the tree argument to work.
    let lower = parent.lower.max(1);
    let subs = match preprocess_facilities(ind, lower) {
        Ok(pre) => pre.components,
        Err(e) if recoverable(&e) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut runs = Vec::new();
    let mut parts = Vec::new();
    for sub in subs {
        match run_pipeline(variant, sub, lower) {
            Ok((run, part)) => {
                runs.push(run);
                parts.push(part);
            }
            Err(e) if recoverable(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let solution = Solution::union(parent, parts);
    if solution.coverage() < p {
        return Err(Error::CoverageShortfall {
            served: solution.coverage(),
            required: p,
        });
    }
    Ok(Traced { solution, runs })
}

fn run_pipeline<'a>(variant: Variant, sub: InducedInstance<'a>, lower: u32) -> Result<(RunTrace<'a>, Solution)> {
    let cct = build_cct(&sub);
    let xi = build_xi(&sub, &cct);
    let up = pass_up(&sub, &cct, &xi, lower)?;
    let (relocation, capacity) = match variant {
        Variant::SoftUniform | Variant::HardUniformCenter => {
            let u = sub.parent().uniform_upper().expect("uniform upper bounds");
            (None, vec![u; up.open.len()])
        }
        Variant::HardNonuniformCenter => {
            let plan = relocate_matching(&sub, &up, 0)?;
            let caps = plan.targets.iter().map(|&w| sub.upper(w)).collect();
            (Some(plan), caps)
        }
        Variant::SoftNonuniformSupplier => {
            let plan = relocate_greedy(&sub, &up);
            let caps = plan.targets.iter().map(|&w| sub.upper(w)).collect();
            (Some(plan), caps)
        }
    };
    let down = pass_down(&sub, &cct, &xi, &up, &capacity)?;

    let (relocation, targets) = match (variant, relocation) {
        (Variant::HardUniformCenter, _) => {
            let targets: Vec<usize> = (0..down.open.len())
                .map(|j| {
                    sub.clients()
                        .iter()
                        .copied()
                        .find(|&v| down.assignment[v] == Some(j))
                        .expect("every copy serves at least one client")
                })
                .collect();
            let plan = RelocationPlan {
                mode: RelocationMode::ClientSubstitution,
                sources: down.open.clone(),
                targets: targets.clone(),
            };
            (Some(plan), targets)
        }
        (_, Some(plan)) => {
            let targets = plan.targets.clone();
            (Some(plan), targets)
        }
        (_, None) => (None, down.open.clone()),
    };

    let mut next_copy: BTreeMap<usize, u32> = BTreeMap::new();
    let copies: Vec<OpenCopy> = targets
        .iter()
        .map(|&w| {
            let slot = next_copy.entry(w).or_default();
            let copy = OpenCopy::new(sub.vertex(w), *slot);
            *slot += 1;
            copy
        })
        .collect();
    let assignment = sub
        .clients()
        .iter()
        .filter_map(|&v| down.assignment[v].map(|j| (sub.vertex(v), copies[j])))
        .collect();
    let solution = Solution::new(sub.parent(), copies, assignment);
    let run = RunTrace {
        sub,
        lower,
        cct,
        xi,
        pass_up: up,
        relocation,
        capacity,
        pass_down: down,
    };
    Ok((run, solution))
}

/// Soft uniform pipeline: induced radius at most 5.
pub fn solve_soft_uniform(ind: &InducedInstance<'_>, p: usize) -> Result<Solution> {
    solve_traced(Variant::SoftUniform, ind, p).map(|t| t.solution)
}

/// Hard uniform center pipeline: soft solution with every copy replaced by one
/// of its own clients; induced radius at most 10.
pub fn solve_hard_uniform_center(ind: &InducedInstance<'_>, p: usize) -> Result<Solution> {
    solve_traced(Variant::HardUniformCenter, ind, p).map(|t| t.solution)
}

/// Hard non-uniform center pipeline with matching relocation; induced radius
/// at most 11.
pub fn solve_hard_nonuniform_center(ind: &InducedInstance<'_>, p: usize) -> Result<Solution> {
    solve_traced(Variant::HardNonuniformCenter, ind, p).map(|t| t.solution)
}

/// Soft non-uniform pipeline with greedy relocation; induced radius at most 11.
pub fn solve_soft_nonuniform_supplier(ind: &InducedInstance<'_>, p: usize) -> Result<Solution> {
    solve_traced(Variant::SoftNonuniformSupplier, ind, p).map(|t| t.solution)
}

impl ComponentSolver for Variant {
    fn solve(&self, ind: &InducedInstance<'_>, k: Option<usize>, p: usize) -> Result<Option<Solution>> {
        if k.is_some() {
            return Err(Error::IncompatibleVariant {
                variant: self.name().to_string(),
                reason: "a cardinality target k is not supported".into(),
            });
        }
        match solve_traced(*self, ind, p) {
            Ok(t) => Ok(Some(t.solution)),
            Err(Error::CoverageShortfall { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn maximizes_coverage(&self) -> bool {
        true
    }
}

/// Runs a variant end to end with radius guessing.
pub fn solve_instance(inst: &Instance, variant: Variant) -> Result<GuessOutcome> {
    variant.check_compatible(inst)?;
    solve_with_guessing(inst, &variant, variant.ratio())
}
