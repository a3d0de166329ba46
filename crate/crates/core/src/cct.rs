//! Facility preprocessing, the core-center tree and the client-to-facility map.
//!
//! All node ids here are local indices of an [`InducedInstance`]; ascending
//! local order equals ascending vertex order in the parent instance.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::reduce::InducedInstance;

/// Induced sub-instances that remain after facility preprocessing.
#[derive(Clone, Debug)]
pub struct Preprocessed<'a> {
    /// Connected pieces, each with at least one surviving facility.
    pub components: Vec<InducedInstance<'a>>,
    /// Clients left without any surviving facility in reach.
    pub stranded: Vec<crate::instance::Vertex>,
}

/// Drops facilities whose client neighborhood has fewer than `lower` members
/// (or whose upper bound is below `lower`), caps every surviving upper bound at
/// the neighborhood size and re-splits into connected pieces.
pub fn preprocess_facilities<'a>(ind: &InducedInstance<'a>, lower: u32) -> Result<Preprocessed<'a>> {
    let n = ind.len();
    let mut keep = vec![false; n];
    let mut upper = vec![0u32; n];
    for &u in ind.facilities() {
        let hood = ind.neighborhood(u).len() as u32;
        if hood >= lower && ind.upper(u) >= lower {
            keep[u] = true;
            upper[u] = ind.upper(u).min(hood);
        }
    }
    if !keep.iter().any(|&k| k) {
        return Err(Error::NoFacilitySurvives { lower });
    }
    let (components, stranded) = ind.restrict_facilities(&keep, &upper);
    Ok(Preprocessed {
        components,
        stranded,
    })
}

/// Rooted spanning tree of the squared graph over facilities whose even layers
/// are pairwise at hop distance at least 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreCenterTree {
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<Option<u32>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl CoreCenterTree {
    pub fn root(&self) -> usize {
        self.root
    }

    /// Tree nodes in construction order (root first).
    pub fn nodes(&self) -> &[usize] {
        &self.order
    }

    pub fn contains(&self, u: usize) -> bool {
        self.depth.get(u).is_some_and(Option::is_some)
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    pub fn grandparent(&self, u: usize) -> Option<usize> {
        self.parent[u].and_then(|p| self.parent[p])
    }

    pub fn depth(&self, u: usize) -> u32 {
        self.depth[u].expect("node is in the tree")
    }

    /// Children in ascending id order.
    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    pub fn is_core(&self, u: usize) -> bool {
        self.depth[u].is_some_and(|d| d % 2 == 0)
    }

    /// The core-center set: even-depth nodes, ascending.
    pub fn core(&self) -> Vec<usize> {
        let mut core: Vec<usize> = self.order.iter().copied().filter(|&u| self.is_core(u)).collect();
        core.sort_unstable();
        core
    }
}

/// Modified BFS over the squared facility graph: each odd-layer node adopts
/// its unscanned neighbours as even-layer children, and every new even-layer
/// node immediately adopts its own unscanned neighbours as odd-layer children.
pub fn build_cct(ind: &InducedInstance<'_>) -> CoreCenterTree {
    let n = ind.len();
    let facilities = ind.facilities();
    let root = *facilities.first().expect("induced instance has a facility");
    let square = |u: usize| facilities.iter().copied().filter(move |&w| w != u && ind.d(u, w) <= 2);

    let mut tree = CoreCenterTree {
        root,
        parent: vec![None; n],
        depth: vec![None; n],
        children: vec![Vec::new(); n],
        order: vec![root],
    };
    let attach = |tree: &mut CoreCenterTree, child: usize, parent: usize| {
        tree.parent[child] = Some(parent);
        tree.depth[child] = Some(tree.depth[parent].unwrap() + 1);
        tree.children[parent].push(child);
        tree.order.push(child);
    };
    tree.depth[root] = Some(0);
    let mut frontier: Vec<usize> = Vec::new();
    for w in square(root) {
        attach(&mut tree, w, root);
        frontier.push(w);
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &x in &frontier {
            for y in square(x) {
                if tree.contains(y) {
                    continue;
                }
                attach(&mut tree, y, x);
                for z in square(y) {
                    if !tree.contains(z) {
                        attach(&mut tree, z, y);
                        next.push(z);
                    }
                }
            }
        }
        frontier = next;
    }
    tree
}

/// Checks the tree-edge and core-separation properties plus disjointness of
/// core neighborhoods. Returns one message per violation.
pub fn audit_cct(ind: &InducedInstance<'_>, cct: &CoreCenterTree) -> Vec<String> {
    let mut problems = Vec::new();
    for &f in ind.facilities() {
        if !cct.contains(f) {
            problems.push(format!("facility {f} is not in the tree"));
        }
    }
    if !cct.is_core(cct.root()) {
        problems.push("root is not a core node".into());
    }
    for &u in cct.nodes() {
        if let Some(p) = cct.parent(u) {
            if ind.d(u, p) > 2 {
                problems.push(format!("tree edge ({p}, {u}) has hop distance {}", ind.d(u, p)));
            }
        }
    }
    let core = cct.core();
    for (i, &a) in core.iter().enumerate() {
        let hood_a: BTreeSet<usize> = ind.neighborhood(a).into_iter().collect();
        for &b in &core[i + 1..] {
            if ind.d(a, b) < 3 {
                problems.push(format!("core nodes {a} and {b} are at hop distance {}", ind.d(a, b)));
            }
            if ind.neighborhood(b).iter().any(|v| hood_a.contains(v)) {
                problems.push(format!("core nodes {a} and {b} share a client"));
            }
        }
    }
    problems
}

/// Total map from clients to adjacent facilities; every core node receives its
/// whole neighborhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XiMap {
    image: Vec<Option<usize>>,
}

impl XiMap {
    pub fn get(&self, client: usize) -> usize {
        self.image[client].expect("node is a client")
    }

    /// Clients mapped to `u`, ascending.
    pub fn preimage(&self, u: usize) -> Vec<usize> {
        (0..self.image.len()).filter(|&v| self.image[v] == Some(u)).collect()
    }
}

pub fn build_xi(ind: &InducedInstance<'_>, cct: &CoreCenterTree) -> XiMap {
    let mut image = vec![None; ind.len()];
    for u in cct.core() {
        for v in ind.neighborhood(u) {
            image[v] = Some(u);
        }
    }
    for &v in ind.clients() {
        if image[v].is_none() {
            image[v] = ind
                .facilities()
                .iter()
                .copied()
                .find(|&f| f == v || ind.d(f, v) == 1);
        }
    }
    XiMap { image }
}

/// Checks that every client maps along an edge (or to itself) and that every
/// core node has at least `lower` preimages.
pub fn audit_xi(ind: &InducedInstance<'_>, cct: &CoreCenterTree, xi: &XiMap, lower: u32) -> Vec<String> {
    let mut problems = Vec::new();
    for &v in ind.clients() {
        match xi.image[v] {
            None => problems.push(format!("client {v} is unmapped")),
            Some(u) if !ind.is_facility(u) || ind.d(u, v) > 1 => {
                problems.push(format!("client {v} maps to {u} which is not adjacent"))
            }
            Some(_) => {}
        }
    }
    for u in cct.core() {
        let size = xi.preimage(u).len();
        if size < lower as usize {
            problems.push(format!("core node {u} has only {size} preimages"));
        }
    }
    problems
}
