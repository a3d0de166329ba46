//! Tree instances and their rounding to an integral local distance-2 transfer.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{FeasibilityReport, Vertex, Violation};
use crate::lp::TransferSpace;
use crate::rational::{self, int, Rational};

/// A rooted tree of facilities with capacity intervals and a fractional
/// opening vector. Node `v` is identified by its index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeInstance {
    /// Parent of each node; `None` marks the root.
    pub parent: Vec<Option<usize>>,
    pub lower: Vec<u32>,
    pub upper: Vec<u32>,
    pub y: Vec<Rational>,
}

impl TreeInstance {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(Option::is_none)
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parent[c] == Some(v)).collect()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        !self.parent.contains(&Some(v))
    }

    /// Path from `v` up to the root, or `None` on a cycle or dangling parent.
    fn ancestors(&self, v: usize) -> Option<Vec<usize>> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            if p >= self.len() || path.len() > self.len() {
                return None;
            }
            path.push(p);
            cur = p;
        }
        Some(path)
    }

    pub fn depth(&self, v: usize) -> usize {
        self.ancestors(v).map_or(0, |a| a.len() - 1)
    }

    /// Number of tree edges between `a` and `b`.
    pub fn hop_distance(&self, a: usize, b: usize) -> usize {
        let (pa, pb) = (self.ancestors(a).unwrap_or_default(), self.ancestors(b).unwrap_or_default());
        let common = pa.iter().rev().zip(pb.iter().rev()).take_while(|(x, y)| x == y).count();
        pa.len() + pb.len() - 2 * common
    }

    /// The nodes under the hop metric, with their own bounds.
    pub fn space(&self) -> TransferSpace {
        let n = self.len();
        TransferSpace {
            facilities: (0..n).map(Vertex).collect(),
            dist: (0..n).map(|a| (0..n).map(|b| int(self.hop_distance(a, b) as i64)).collect()).collect(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

pub fn validate_tree_instance(ti: &TreeInstance) -> FeasibilityReport {
    let n = ti.len();
    let mut violations = Vec::new();
    if ti.lower.len() != n || ti.upper.len() != n || ti.y.len() != n {
        violations.push(Violation::LabelCount {
            labels: ti.y.len(),
            vertices: n,
        });
        return FeasibilityReport { violations };
    }
    let roots = ti.parent.iter().filter(|p| p.is_none()).count();
    for v in 0..n {
        let rooted = ti.ancestors(v).is_some();
        if !rooted || (roots != 1 && ti.parent[v].is_none()) {
            violations.push(Violation::NotATree { node: Vertex(v) });
        }
    }
    for v in 0..n {
        let y = &ti.y[v];
        if y.is_negative() || *y > Rational::one() {
            violations.push(Violation::OpeningOutOfRange {
                node: Vertex(v),
                y: y.clone(),
            });
        }
        if !ti.is_leaf(v) && !y.is_one() {
            violations.push(Violation::InteriorNotOpen {
                node: Vertex(v),
                y: y.clone(),
            });
        }
        if ti.lower[v] > ti.upper[v] {
            violations.push(Violation::LowerExceedsUpper {
                facility: Vertex(v),
                lower: ti.lower[v],
                upper: ti.upper[v],
            });
        }
    }
    let total = rational::sum(&ti.y);
    if !rational::is_integer(&total) {
        violations.push(Violation::FractionalTotal { total });
    }
    FeasibilityReport { violations }
}

/// Rounds the opening vector to a node set whose indicator is an integral
/// local distance-2 transfer of it. Nodes are returned in ascending order.
pub fn round_tree(ti: &TreeInstance) -> Result<Vec<usize>> {
    if let Some(v) = validate_tree_instance(ti).violations.first() {
        return Err(Error::InvalidInstance(v.to_string()));
    }
    if ti.is_empty() {
        return Ok(Vec::new());
    }
    let mut state = Rounding {
        ti,
        alive: vec![true; ti.len()],
        y: ti.y.clone(),
        upper: ti.upper.clone(),
        depth: (0..ti.len()).map(|v| ti.depth(v)).collect(),
    };
    let mut chosen = state.round();
    chosen.sort_unstable();
    Ok(chosen)
}

struct Rounding<'a> {
    ti: &'a TreeInstance,
    alive: Vec<bool>,
    y: Vec<Rational>,
    upper: Vec<u32>,
    depth: Vec<usize>,
}

impl Rounding<'_> {
    fn alive_children(&self, v: usize) -> Vec<usize> {
        (0..self.alive.len())
            .filter(|&c| self.alive[c] && self.ti.parent[c] == Some(v))
            .collect()
    }

    fn round(&mut self) -> Vec<usize> {
        let deepest = (0..self.alive.len())
            .filter(|&v| self.alive[v] && !self.alive_children(v).is_empty())
            .max_by_key(|&v| (self.depth[v], std::cmp::Reverse(v)));
        let Some(r) = deepest else {
            // A single node remains.
            let v = (0..self.alive.len()).find(|&v| self.alive[v]).expect("root stays alive");
            return if self.y[v].is_one() { vec![v] } else { Vec::new() };
        };
        let mut kids = self.alive_children(r);
        let s = rational::sum(kids.iter().map(|&c| &self.y[c]));
        let y_total = s.ceil();
        let split = &y_total - &s;
        for &c in &kids {
            self.alive[c] = false;
        }
        self.y[r] = Rational::one() - split;
        let count = rational::to_u64(&y_total).expect("non-negative integer") as usize;
        if count == 0 {
            return self.round();
        }
        kids.sort_by_key(|&c| (std::cmp::Reverse(self.upper[c]), c));
        let mut first: Vec<usize> = kids[..count].to_vec();
        let pivot = first[count - 1];
        if self.upper[r] < self.upper[pivot] {
            let mut rest = self.round();
            first.append(&mut rest);
            return first;
        }
        if self.upper[r] > self.upper[pivot] {
            self.upper[r] = self.upper[pivot];
        }
        let mut rest = self.round();
        if !rest.contains(&r) {
            first.retain(|&c| c != pivot);
            first.push(r);
        }
        first.append(&mut rest);
        first
    }
}

/// The 0/1 vector of a node set.
pub fn indicator(n: usize, set: &[usize]) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    for &u in set {
        v[u] = Rational::one();
    }
    v
}
