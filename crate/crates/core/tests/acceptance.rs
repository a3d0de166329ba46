//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use capcenter::bench::{format_table, run_suite};
use capcenter::cct::{audit_cct, audit_xi};
use capcenter::flow::FlowNetwork;
use capcenter::generate::{generate, suite_config, GenConfig, Shape};
use capcenter::greedy::audit_pass_up;
use capcenter::instance::{candidate_radii, check_feasible, CapacityMode, Instance, Metric, ProblemKind, Vertex};
use capcenter::lp::{build_lp_r, solve_feasibility, verify_local_transfer, verify_transfer, CheckMode, TransferSpace};
use capcenter::oracle::exact_solve;
use capcenter::rational::{frac, int, sum, Rational};
use capcenter::reduce::{combine_dp, components_at, BoolTable};
use capcenter::solvers::{audit_relocation, solve_instance, solve_traced, RelocationMode, Variant};
use capcenter::tree_transfer::{indicator, round_tree, validate_tree_instance, TreeInstance};
use capcenter::assign::{extract_solution, ExtractionProblem};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const RATIO_SUITE: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct SuiteCase {
    variant: Variant,
    inst: Instance,
    optimum: Rational,
}

fn suite() -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    for variant in Variant::ALL {
        for i in 0..RATIO_SUITE {
            let inst = generate(&suite_config(variant, SEED, i));
            let optimum = exact_solve(&inst).expect("suite instance feasible").radius;
            cases.push(SuiteCase { variant, inst, optimum });
        }
    }
    cases
}

fn ratio_suite() -> Outcome {
    let report = run_suite(&Variant::ALL, SEED, RATIO_SUITE);
    let table = format_table(&report.rows);
    let pass = report.rows.iter().all(|r| r.passed());
    let summary: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{} max {} (bound {}, {} failures)",
                r.variant,
                r.max_ratio.as_ref().map_or("-".into(), |q| q.to_string()),
                r.bound,
                r.failures
            )
        })
        .collect();
    if !pass {
        eprintln!("{table}");
    }
    outcome(pass, summary.join("; "))
}

/// Counters for the pass-up, pass-down and relocation audits.
#[derive(Default)]
struct PipelineAudit {
    runs: usize,
    pass_up_problems: Vec<String>,
    pass_down_problems: Vec<String>,
    relocation_runs: usize,
    relocation_problems: Vec<String>,
    errors: Vec<String>,
}

/// Replays every pipeline invocation the radius scan makes, up to the radius
/// at which each suite instance is solved.
fn audit_pipelines(cases: &[SuiteCase]) -> PipelineAudit {
    let mut audit = PipelineAudit::default();
    for case in cases {
        let guessed = match solve_instance(&case.inst, case.variant) {
            Ok(out) => out.radius,
            Err(e) => {
                audit.errors.push(format!("{}: {e}", case.variant));
                continue;
            }
        };
        for r in candidate_radii(&case.inst).into_iter().filter(|r| *r <= guessed) {
            let (comps, _) = components_at(&case.inst, &r);
            for comp in &comps {
                let traced = match solve_traced(case.variant, comp, 0) {
                    Ok(t) => t,
                    Err(e) => {
                        audit.errors.push(format!("{} at r={r}: {e}", case.variant));
                        continue;
                    }
                };
                for run in &traced.runs {
                    audit.runs += 1;
                    let sub = &run.sub;
                    audit.pass_up_problems.extend(audit_cct(sub, &run.cct));
                    audit.pass_up_problems.extend(audit_xi(sub, &run.cct, &run.xi, run.lower));
                    audit
                        .pass_up_problems
                        .extend(audit_pass_up(sub, &run.cct, &run.xi, run.lower, &run.pass_up));

                    let down = &run.pass_down;
                    let capacity: usize = run.capacity.iter().map(|&c| c as usize).sum();
                    let clients = sub.clients().len();
                    if down.coverage() < capacity.min(clients) {
                        audit.pass_down_problems.push(format!(
                            "coverage {} below min(capacity {capacity}, clients {clients})",
                            down.coverage()
                        ));
                    }
                    for &v in sub.clients() {
                        if let Some(j) = down.assignment[v] {
                            if sub.d(v, down.open[j]) > 5 {
                                audit.pass_down_problems.push(format!("client {v} at induced distance > 5"));
                            }
                        }
                    }
                    for (j, load) in down.loads().into_iter().enumerate() {
                        if load > run.capacity[j] as usize {
                            audit.pass_down_problems.push(format!("copy {j} over capacity"));
                        }
                    }

                    if case.variant == Variant::HardNonuniformCenter {
                        audit.relocation_runs += 1;
                        match &run.relocation {
                            Some(plan) if plan.mode == RelocationMode::Matching => {
                                audit
                                    .relocation_problems
                                    .extend(audit_relocation(sub, plan, down.coverage()));
                            }
                            _ => audit.relocation_problems.push("missing matching plan".into()),
                        }
                    }
                }
            }
        }
    }
    audit
}

fn first_few(problems: &[String]) -> String {
    problems.iter().take(3).cloned().collect::<Vec<_>>().join(" | ")
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| frac(rng.gen_range(0..=8), 4)).collect()
}

fn transfer_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5);
    let (mut agree, mut valid) = (0, 0);
    let trials = 100;
    for t in 0..trials {
        let n = rng.gen_range(1..=10);
        let pts: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(0..5), rng.gen_range(0..5))).collect();
        let space = TransferSpace {
            facilities: (0..n).map(Vertex).collect(),
            dist: (0..n)
                .map(|a| (0..n).map(|b| int((pts[a].0 - pts[b].0).abs() + (pts[a].1 - pts[b].1).abs())).collect())
                .collect(),
            lower: (0..n).map(|_| rng.gen_range(0..=2)).collect(),
            upper: (0..n).map(|_| rng.gen_range(2..=5)).collect(),
        };
        let y = random_vector(&mut rng, n);
        let y2 = if t % 2 == 0 {
            // Move mass around so the totals agree.
            let mut v = y.clone();
            for _ in 0..3 {
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let half = &v[a] / int(2);
                v[a] -= &half;
                v[b] += half;
            }
            v
        } else {
            random_vector(&mut rng, n)
        };
        let r = int(rng.gen_range(0..=4));
        let flow = verify_transfer(&space, &y, &y2, &r, CheckMode::Flow).unwrap();
        let exhaustive = verify_transfer(&space, &y, &y2, &r, CheckMode::Exhaustive).unwrap();
        if flow == exhaustive {
            agree += 1;
        }
        if flow {
            valid += 1;
        }
    }
    outcome(agree == trials, format!("{agree}/{trials} agree ({valid} valid transfers)"))
}

fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize, lower: u32, upper: std::ops::RangeInclusive<u32>) -> TreeInstance {
    loop {
        let n = rng.gen_range(1..=max_nodes);
        let parent: Vec<Option<usize>> = (0..n).map(|v| (v > 0).then(|| rng.gen_range(0..v))).collect();
        let mut ti = TreeInstance {
            parent,
            lower: vec![lower; n],
            upper: (0..n).map(|_| rng.gen_range(upper.clone())).collect(),
            y: vec![int(1); n],
        };
        let leaves: Vec<usize> = (0..n).filter(|&v| ti.is_leaf(v)).collect();
        for &v in &leaves {
            ti.y[v] = frac(rng.gen_range(0..=12), 12);
        }
        let total = sum(&ti.y);
        let excess = &total - total.floor();
        let last = *leaves.last().unwrap();
        if excess <= ti.y[last] {
            ti.y[last] = &ti.y[last] - excess;
        } else {
            ti.y[last] = &ti.y[last] + (Rational::one() - excess);
        }
        if validate_tree_instance(&ti).ok() {
            return ti;
        }
    }
}

fn tree_rounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x6);
    let mut failures = Vec::new();
    for i in 0..100 {
        let ti = random_tree(&mut rng, 12, 1, 1..=6);
        let set = round_tree(&ti).unwrap();
        let space = ti.space();
        let target = indicator(ti.len(), &set);
        let two = int(2);
        let witness = verify_local_transfer(&space, &ti.y, &target, &two).unwrap().is_some();
        let exhaustive = verify_transfer(&space, &ti.y, &target, &two, CheckMode::Exhaustive).unwrap();
        let size = int(set.len() as i64) == sum(&ti.y);
        if !(witness && exhaustive && size) {
            failures.push(format!("tree {i}: witness {witness}, exhaustive {exhaustive}, size {size}"));
        }
    }
    outcome(failures.is_empty(), format!("100 trees, {} failures {}", failures.len(), first_few(&failures)))
}

fn lp_sanity(cases: &[SuiteCase]) -> Outcome {
    let mut problems = Vec::new();
    for case in cases {
        let lp = build_lp_r(&case.inst, &case.optimum);
        match solve_feasibility(&lp) {
            Some(pt) => problems.extend(lp.recheck(&pt)),
            None => problems.push(format!("{}: LP infeasible at the optimum", case.variant)),
        }
    }
    // Hard center instances with a cardinality target and full coverage.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7);
    let (mut tight, mut infeasible_below) = (0, 0);
    for _ in 0..60 {
        let n = rng.gen_range(2..=8);
        let lower = rng.gen_range(1..=2);
        let cfg = GenConfig {
            seed: rng.gen(),
            shape: if rng.gen_bool(0.5) { Shape::Grid } else { Shape::Graph },
            kind: ProblemKind::Center,
            mode: CapacityMode::Hard,
            facilities: n,
            clients: n,
            lower,
            spread: 3,
            uniform: false,
            k: Some(rng.gen_range(1..=n)),
            p: Some(n),
            grid: 10,
        };
        let inst = generate(&cfg);
        let Ok(opt) = exact_solve(&inst) else { continue };
        let at_opt = build_lp_r(&inst, &opt.radius);
        match solve_feasibility(&at_opt) {
            Some(pt) => problems.extend(at_opt.recheck(&pt)),
            None => problems.push("tight instance: LP infeasible at the optimum".into()),
        }
        let Some(below) = candidate_radii(&inst).into_iter().rfind(|r| *r < opt.radius) else {
            continue;
        };
        tight += 1;
        if solve_feasibility(&build_lp_r(&inst, &below)).is_some() {
            problems.push(format!("tight instance: LP feasible at r={below} below the optimum {}", opt.radius));
        } else {
            infeasible_below += 1;
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} suite LPs feasible at the optimum; {infeasible_below}/{tight} tight instances infeasible below the optimum; {} problems {}",
            cases.len(),
            problems.len(),
            first_few(&problems)
        ),
    )
}

/// Center instance on a random tree under the hop metric with a fractional
/// LP point at radius 1 whose openings form a tree instance.
fn tree_chain_case(rng: &mut ChaCha8Rng) -> Option<(Instance, TreeInstance, usize)> {
    let lower = rng.gen_range(1..=2);
    let ti = random_tree(rng, 10, lower, lower..=lower + 3);
    let n = ti.len();
    let metric = Metric::from_fn(n, |a, b| int(ti.hop_distance(a, b) as i64));
    // Clients send at most one unit, facilities receive within [L y, U y].
    let (s, t) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::<Rational>::new(2 * n + 2);
    for v in 0..n {
        net.add_edge(s, v, Rational::zero(), Rational::one());
        for u in 0..n {
            if ti.hop_distance(u, v) <= 1 {
                net.add_edge(v, n + u, Rational::zero(), ti.y[u].clone());
            }
        }
        net.add_edge(n + v, t, int(lower as i64) * &ti.y[v], int(ti.upper[v] as i64) * &ti.y[v]);
    }
    let served = net.max_flow(s, t)?;
    let p = served.floor().to_integer().try_into().ok()?;
    let k = sum(&ti.y).to_integer().try_into().ok()?;
    let inst = Instance::new(
        (0..n).map(|i| format!("t{i}")).collect(),
        metric,
        (0..n).map(|v| (Vertex(v), ti.upper[v])).collect(),
        (0..n).map(Vertex).collect(),
        lower,
        Some(k),
        p,
        CapacityMode::Hard,
        ProblemKind::Center,
    );
    Some((inst, ti, p))
}

fn tree_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x8);
    let (mut done, mut failures) = (0, Vec::new());
    while done < 50 {
        let Some((inst, ti, p)) = tree_chain_case(&mut rng) else { continue };
        done += 1;
        let lp = build_lp_r(&inst, &int(1));
        if solve_feasibility(&lp).is_none() {
            failures.push(format!("case {done}: LP at radius 1 infeasible"));
            continue;
        }
        let open: Vec<Vertex> = round_tree(&ti).unwrap().into_iter().map(Vertex).collect();
        let ep = ExtractionProblem {
            inst: &inst,
            open,
            radius: int(3),
            p,
        };
        match extract_solution(&ep) {
            Ok(sol) => {
                let report = check_feasible(&inst, &sol);
                if !report.ok() {
                    failures.push(format!("case {done}: {}", report.violations[0]));
                }
            }
            Err(e) => failures.push(format!("case {done}: {e}")),
        }
    }
    outcome(failures.is_empty(), format!("50 tree instances, {} failures {}", failures.len(), first_few(&failures)))
}

fn dp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x9);
    let mut failures = Vec::new();
    let (mut feasible, cases) = (0, 50);
    for case in 0..cases {
        let comps = rng.gen_range(1..=3);
        let k = rng.gen_bool(0.5).then(|| rng.gen_range(0..=4));
        let p = rng.gen_range(0..=8);
        let density = rng.gen_range(0.2..0.7);
        let tables: Vec<BoolTable> = (0..comps)
            .map(|_| {
                let (km, pm) = (rng.gen_range(0..=4), rng.gen_range(0..=8));
                let mut t = BoolTable::new(km, pm);
                for a in 0..=km {
                    for b in 0..=pm {
                        t.set(a, b, rng.gen_bool(density));
                    }
                }
                t
            })
            .collect();
        // Every combination of cells, one per component.
        let cells: Vec<Vec<(usize, usize)>> = tables
            .iter()
            .map(|t| {
                let kmax = if k.is_some() { t.k_max() } else { 0 };
                (0..=kmax)
                    .flat_map(|a| (0..=t.p_max()).map(move |b| (a, b)))
                    .filter(|&(a, b)| t.get(a, b))
                    .collect()
            })
            .collect();
        let mut exists = false;
        let mut idx = vec![0usize; comps];
        if cells.iter().all(|c| !c.is_empty()) {
            loop {
                let ks: usize = (0..comps).map(|i| cells[i][idx[i]].0).sum();
                let ps: usize = (0..comps).map(|i| cells[i][idx[i]].1).sum();
                if k.is_none_or(|k| ks == k) && ps >= p {
                    exists = true;
                    break;
                }
                let mut i = 0;
                while i < comps && idx[i] + 1 == cells[i].len() {
                    idx[i] = 0;
                    i += 1;
                }
                if i == comps {
                    break;
                }
                idx[i] += 1;
            }
        }
        let got = combine_dp(&tables, k, p);
        if got.is_some() != exists {
            failures.push(format!("case {case}: dp {} vs enumeration {exists}", got.is_some()));
        }
        if let Some(splits) = got {
            feasible += 1;
            let ok = splits.iter().zip(&tables).all(|(s, t)| t.get(s.k.unwrap_or(0), s.p))
                && k.is_none_or(|k| splits.iter().map(|s| s.k.unwrap()).sum::<usize>() == k)
                && splits.iter().map(|s| s.p).sum::<usize>() >= p;
            if !ok {
                failures.push(format!("case {case}: returned split is invalid"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} cases ({feasible} feasible), {} mismatches {}", failures.len(), first_few(&failures)),
    )
}

fn run_binary(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_capcenter")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inst.json");
    let file_s = file.to_str().unwrap();
    let mut problems = Vec::new();
    let (c1, g1) = run_binary(&["gen", "--seed", "7", "--facilities", "5", "--clients", "10"]);
    let (c2, g2) = run_binary(&["gen", "--seed", "7", "--facilities", "5", "--clients", "10"]);
    if c1 != 0 || c2 != 0 || g1 != g2 {
        problems.push("gen output differs");
    }
    std::fs::write(&file, &g1).unwrap();
    assert!(Path::new(&file).exists());
    for json in [false, true] {
        let mut args = vec!["solve", file_s, "--variant", "soft-nonuniform-supplier"];
        if json {
            args.push("--json");
        }
        let (a_code, a) = run_binary(&args);
        let (b_code, b) = run_binary(&args);
        if a_code != 0 || a_code != b_code || a != b {
            problems.push("solve output differs");
        }
    }
    let bench = ["bench", "--seed", "3", "--count", "25"];
    let (a_code, a) = run_binary(&bench);
    let (b_code, b) = run_binary(&bench);
    if a_code != 0 || a_code != b_code || a != b {
        problems.push("bench output differs");
    }
    outcome(problems.is_empty(), format!("gen, solve, solve --json, bench reruns: {}", if problems.is_empty() { "identical".to_string() } else { problems.join(", ") }))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let cases = suite();
    let audit = audit_pipelines(&cases);
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    results.push((1, "ratio suite", ratio_suite()));
    let mut up = audit.pass_up_problems.clone();
    up.extend(audit.errors.iter().cloned());
    results.push((
        2,
        "pass-up invariants",
        outcome(up.is_empty(), format!("{} runs audited, {} violations {}", audit.runs, up.len(), first_few(&up))),
    ));
    let mut down = audit.pass_down_problems.clone();
    down.extend(audit.errors.iter().cloned());
    results.push((
        3,
        "pass-down contract",
        outcome(down.is_empty(), format!("{} runs audited, {} violations {}", audit.runs, down.len(), first_few(&down))),
    ));
    results.push((
        4,
        "relocation plans",
        outcome(
            audit.relocation_problems.is_empty() && audit.relocation_runs > 0,
            format!(
                "{} matching plans audited, {} violations {}",
                audit.relocation_runs,
                audit.relocation_problems.len(),
                first_few(&audit.relocation_problems)
            ),
        ),
    ));
    results.push((5, "transfer checker equivalence", transfer_equivalence()));
    results.push((6, "tree rounding", tree_rounding()));
    results.push((7, "LP sanity", lp_sanity(&cases)));
    results.push((8, "tree extraction chain", tree_chain()));
    results.push((9, "DP against enumeration", dp_correctness()));
    results.push((10, "determinism", determinism()));

    for (n, name, o) in &results {
        println!("criterion {n:>2} {:<30} {} {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
