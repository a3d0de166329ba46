//! Seeded random instances: integer grid points under a scaled Euclidean
//! metric, or random connected graphs under the hop metric.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{candidate_radii, CapacityMode, Instance, Metric, ProblemKind, Vertex};
use crate::io;
use crate::oracle::{self, feasible_at};
use crate::rational::int;
use crate::solvers::Variant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Grid,
    Graph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub shape: Shape,
    pub kind: ProblemKind,
    pub mode: CapacityMode,
    pub facilities: usize,
    /// Ignored for center instances, whose clients are the facilities.
    pub clients: usize,
    pub lower: u32,
    /// Upper bounds are drawn from `[lower, lower + spread]`.
    pub spread: u32,
    pub uniform: bool,
    pub k: Option<usize>,
    /// `None` draws a target no larger than the best achievable coverage.
    pub p: Option<usize>,
    /// Coordinates are drawn from `[0, grid)`.
    pub grid: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            shape: Shape::Grid,
            kind: ProblemKind::Supplier,
            mode: CapacityMode::Soft,
            facilities: 4,
            clients: 8,
            lower: 2,
            spread: 2,
            uniform: false,
            k: None,
            p: None,
            grid: 12,
        }
    }
}

/// Instance file text for `cfg`. Equal configurations give identical text.
pub fn generate_text(cfg: &GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nf = cfg.facilities.max(1);
    let center = cfg.kind == ProblemKind::Center;
    let nc = if center { nf } else { cfg.clients };
    let n = if center { nf } else { nf + nc };
    let labels: Vec<String> = if center {
        (0..n).map(|i| format!("v{i}")).collect()
    } else {
        (0..nf).map(|i| format!("f{i}")).chain((0..nc).map(|i| format!("c{i}"))).collect()
    };
    let uniform_u = cfg.lower + rng.gen_range(0..=cfg.spread);
    let uppers: Vec<u32> = (0..nf)
        .map(|_| if cfg.uniform { uniform_u } else { cfg.lower + rng.gen_range(0..=cfg.spread) })
        .collect();
    let facilities: Vec<(usize, u32)> = (0..nf).zip(uppers).collect();
    let clients: Vec<usize> = if center { (0..n).collect() } else { (nf..n).collect() };

    let (metric, coords) = match cfg.shape {
        Shape::Grid => {
            let grid = cfg.grid.max(1);
            let coords: Vec<Vec<i64>> = (0..n).map(|_| vec![rng.gen_range(0..grid), rng.gen_range(0..grid)]).collect();
            (None, Some(coords))
        }
        Shape::Graph => (Some(random_graph_metric(&mut rng, nf, n, center)), None),
    };
    let draw_p = rng.gen_range(nc.div_ceil(2)..=nc);
    let header = |p: usize| (cfg.kind, cfg.mode, cfg.lower, cfg.k, p);
    let render = |p: usize| match (&metric, &coords) {
        (_, Some(coords)) => io::print_euclidean(&labels, coords, &facilities, &clients, 1, header(p)),
        (Some(metric), None) => io::print_instance(&Instance::new(
            labels.clone(),
            metric.clone(),
            facilities.iter().map(|&(v, u)| (Vertex(v), u)).collect(),
            clients.iter().map(|&v| Vertex(v)).collect(),
            cfg.lower,
            cfg.k,
            p,
            cfg.mode,
            cfg.kind,
        )),
        (None, None) => unreachable!(),
    };
    let p = match cfg.p {
        Some(p) => p,
        None => {
            let probe = io::parse_instance(&render(0)).expect("generated instance parses");
            draw_p.min(achievable_coverage(&probe))
        }
    };
    render(p)
}

pub fn generate(cfg: &GenConfig) -> Instance {
    io::parse_instance(&generate_text(cfg)).expect("generated instance parses")
}

/// Largest coverage target any solution reaches, found with the exact
/// solver at the largest candidate radius. Instances beyond the exact
/// solver's limits report the client count.
pub fn achievable_coverage(inst: &Instance) -> usize {
    if inst.facilities.len() > oracle::MAX_FACILITIES || inst.clients.len() > oracle::MAX_CLIENTS {
        return inst.clients.len();
    }
    let r = candidate_radii(inst).pop().unwrap_or_else(|| int(0));
    let mut p = inst.clients.len();
    while p > 0 && feasible_at(&inst.with_p(p), &r).is_none() {
        p -= 1;
    }
    p
}

/// Hop distances of a random connected graph. Supplier graphs are bipartite
/// between facilities `0..nf` and clients `nf..n`.
fn random_graph_metric(rng: &mut ChaCha8Rng, nf: usize, n: usize, center: bool) -> Metric {
    let side = |v: usize| center || v < nf;
    let mut adj = vec![Vec::new(); n];
    let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    };
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(rng);
    if !center {
        // Seed both sides so every later vertex finds a partner.
        order.retain(|&v| v != nf);
        if nf < n {
            order.insert(0, nf);
        }
    }
    let mut placed = vec![0];
    for v in order {
        let partners: Vec<usize> = placed
            .iter()
            .copied()
            .filter(|&u| center || side(u) != side(v))
            .collect();
        let u = partners[rng.gen_range(0..partners.len())];
        link(u, v, &mut adj);
        placed.push(v);
    }
    for _ in 0..n / 2 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if center || side(a) != side(b) {
            link(a, b, &mut adj);
        }
    }
    let dist: Vec<Vec<u64>> = (0..n)
        .map(|s| {
            let mut d = vec![u64::MAX; n];
            d[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if d[w] == u64::MAX {
                        d[w] = d[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            d
        })
        .collect();
    Metric::from_fn(n, |i, j| int(dist[i][j] as i64))
}

/// The `index`-th instance of the seeded suite for `variant`: at most 10
/// facilities and 14 clients, `L` in 1..=3 and upper bounds in `[L, L + 3]`.
pub fn suite_config(variant: Variant, seed: u64, index: usize) -> GenConfig {
    let tag = Variant::ALL.iter().position(|&v| v == variant).unwrap_or(0) as u64;
    let mixed = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag << 32)
        .wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    let center = match variant {
        Variant::HardUniformCenter | Variant::HardNonuniformCenter => true,
        Variant::SoftUniform | Variant::SoftNonuniformSupplier => rng.gen_bool(0.25),
    };
    let kind = if center { ProblemKind::Center } else { ProblemKind::Supplier };
    let (facilities, clients) = if center {
        let n = rng.gen_range(2..=10);
        (n, n)
    } else {
        (rng.gen_range(1..=10), rng.gen_range(2..=14))
    };
    GenConfig {
        seed: rng.gen(),
        shape: if rng.gen_bool(0.5) { Shape::Grid } else { Shape::Graph },
        kind,
        mode: variant.mode(),
        facilities,
        clients,
        lower: rng.gen_range(1..=3),
        spread: 3,
        uniform: matches!(variant, Variant::SoftUniform | Variant::HardUniformCenter),
        k: None,
        p: None,
        grid: 10,
    }
}
