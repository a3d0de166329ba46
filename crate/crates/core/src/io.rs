//! Instance, solution and opening-vector files.
//!
//! All three are JSON documents carrying a `version` field. Rationals are
//! strings of the form `"n/d"` (a bare integer string is accepted on input).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{CapacityMode, Instance, Metric, OpenCopy, ProblemKind, Solution, Vertex};
use crate::rational::{self, isqrt_ceil, Rational};

pub const FORMAT_VERSION: u32 = 1;

/// A rational written as `"n/d"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Q(pub Rational);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Q;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string \"n/d\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Q, E> {
                rational::parse(v)
                    .map(Q)
                    .ok_or_else(|| E::custom(format!("invalid rational {v:?}")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Q, E> {
                Ok(Q(rational::int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Q, E> {
                Ok(Q(Rational::from_integer(BigInt::from(v))))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    kind: ProblemKind,
    mode: CapacityMode,
    #[serde(rename = "L")]
    lower: u32,
    p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    facilities: Vec<FacilityEntry>,
    clients: Vec<ClientEntry>,
    /// Order of the distance table; defaults to facilities, then new clients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<String>>,
    metric: MetricSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacilityEntry {
    id: String,
    #[serde(rename = "U")]
    upper: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClientEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum MetricSpec {
    /// Distances are `ceil(scale * euclidean) / scale`.
    EuclideanFromCoordinates { scale: u64 },
    /// `rows[i]` holds the distances from vertex `i` to vertices `0..i`.
    Table { rows: Vec<Vec<Q>> },
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read_to_string(path)?)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(parse_error)?;
    if file.version != FORMAT_VERSION {
        return Err(invalid(format!("unsupported version {}", file.version)));
    }
    let mut coords: HashMap<&str, Option<&Vec<i64>>> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for f in &file.facilities {
        if coords.insert(&f.id, f.coords.as_ref()).is_some() {
            return Err(invalid(format!("duplicate facility {:?}", f.id)));
        }
        order.push(&f.id);
    }
    let mut seen_clients = std::collections::HashSet::new();
    for c in &file.clients {
        if !seen_clients.insert(c.id.as_str()) {
            return Err(invalid(format!("duplicate client {:?}", c.id)));
        }
        match coords.get(c.id.as_str()) {
            Some(existing) => {
                if let (Some(a), Some(b)) = (existing, c.coords.as_ref()) {
                    if *a != b {
                        return Err(invalid(format!("conflicting coordinates for {:?}", c.id)));
                    }
                }
                if existing.is_none() {
                    coords.insert(&c.id, c.coords.as_ref());
                }
            }
            None => {
                coords.insert(&c.id, c.coords.as_ref());
                order.push(&c.id);
            }
        }
    }
    if let Some(vs) = &file.vertices {
        let mut listed: Vec<&str> = vs.iter().map(String::as_str).collect();
        let mut expected = order.clone();
        listed.sort_unstable();
        expected.sort_unstable();
        if listed != expected {
            return Err(invalid("vertex list does not match the facility and client ids"));
        }
        order = vs.iter().map(String::as_str).collect();
    }
    let index: HashMap<&str, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = order.len();

    let metric = match &file.metric {
        MetricSpec::EuclideanFromCoordinates { scale } => {
            if *scale == 0 {
                return Err(invalid("euclidean scale must be positive"));
            }
            let points: Vec<&Vec<i64>> = order
                .iter()
                .map(|id| coords[id].ok_or_else(|| invalid(format!("{id:?} has no coordinates"))))
                .collect::<Result<_>>()?;
            let dim = points.first().map_or(0, |p| p.len());
            if points.iter().any(|p| p.len() != dim) {
                return Err(invalid("coordinates of different dimensions"));
            }
            let scale = BigInt::from(*scale);
            Metric::from_fn(n, |i, j| {
                let sq: BigInt = points[i]
                    .iter()
                    .zip(points[j])
                    .map(|(a, b)| {
                        let d = BigInt::from(*a) - BigInt::from(*b);
                        &d * &d
                    })
                    .sum();
                Rational::new(isqrt_ceil(&(sq * &scale * &scale)), scale.clone())
            })
        }
        MetricSpec::Table { rows } => {
            let rows: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|q| q.0.clone()).collect()).collect();
            Metric::from_lower_triangle(&rows).filter(|m| m.len() == n).ok_or_else(|| {
                invalid(format!("distance table must have {n} rows, row i holding i entries"))
            })?
        }
    };

    let facilities = file.facilities.iter().map(|f| (Vertex(index[f.id.as_str()]), f.upper)).collect();
    let clients = file.clients.iter().map(|c| Vertex(index[c.id.as_str()])).collect();
    Ok(Instance::new(
        order.iter().map(|s| s.to_string()).collect(),
        metric,
        facilities,
        clients,
        file.lower,
        file.k,
        file.p,
        file.mode,
        file.kind,
    ))
}

/// Writes an instance with an explicit distance table and vertex order, so
/// that reading it back reproduces every field.
pub fn print_instance(inst: &Instance) -> String {
    let n = inst.num_vertices();
    let file = InstanceFile {
        version: FORMAT_VERSION,
        kind: inst.kind,
        mode: inst.mode,
        lower: inst.lower,
        p: inst.p,
        k: inst.k,
        facilities: inst
            .facilities
            .iter()
            .zip(&inst.upper)
            .map(|(&v, &u)| FacilityEntry {
                id: inst.label(v).to_string(),
                upper: u,
                coords: None,
            })
            .collect(),
        clients: inst
            .clients
            .iter()
            .map(|&v| ClientEntry {
                id: inst.label(v).to_string(),
                coords: None,
            })
            .collect(),
        vertices: Some(inst.labels.clone()),
        metric: MetricSpec::Table {
            rows: (0..n).map(|i| (0..i).map(|j| Q(inst.metric.get(i, j).clone())).collect()).collect(),
        },
    };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serialises");
    out.push('\n');
    out
}

/// Writes a generated instance with coordinates and a Euclidean metric.
pub(crate) fn print_euclidean(
    labels: &[String],
    coords: &[Vec<i64>],
    facilities: &[(usize, u32)],
    clients: &[usize],
    scale: u64,
    header: (ProblemKind, CapacityMode, u32, Option<usize>, usize),
) -> String {
    let (kind, mode, lower, k, p) = header;
    let file = InstanceFile {
        version: FORMAT_VERSION,
        kind,
        mode,
        lower,
        p,
        k,
        facilities: facilities
            .iter()
            .map(|&(v, u)| FacilityEntry {
                id: labels[v].clone(),
                upper: u,
                coords: Some(coords[v].clone()),
            })
            .collect(),
        clients: clients
            .iter()
            .map(|&v| ClientEntry {
                id: labels[v].clone(),
                coords: (!facilities.iter().any(|f| f.0 == v)).then(|| coords[v].clone()),
            })
            .collect(),
        vertices: None,
        metric: MetricSpec::EuclideanFromCoordinates { scale },
    };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serialises");
    out.push('\n');
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    version: u32,
    radius: Q,
    coverage: usize,
    open: Vec<CopyEntry>,
    assignment: Vec<AssignEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CopyEntry {
    facility: String,
    copy: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignEntry {
    client: String,
    facility: String,
    copy: u32,
}

pub fn print_solution(inst: &Instance, sol: &Solution) -> String {
    let file = SolutionFile {
        version: FORMAT_VERSION,
        radius: Q(sol.radius.clone()),
        coverage: sol.coverage(),
        open: sol
            .open
            .iter()
            .map(|c| CopyEntry {
                facility: inst.label(c.facility).to_string(),
                copy: c.copy,
            })
            .collect(),
        assignment: sol
            .assignment
            .iter()
            .map(|(&v, c)| AssignEntry {
                client: inst.label(v).to_string(),
                facility: inst.label(c.facility).to_string(),
                copy: c.copy,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("solution serialises");
    out.push('\n');
    out
}

/// Reads a solution for `inst`, keeping the radius it reports.
pub fn parse_solution(inst: &Instance, text: &str) -> Result<Solution> {
    let file: SolutionFile = serde_json::from_str(text).map_err(parse_error)?;
    if file.version != FORMAT_VERSION {
        return Err(invalid(format!("unsupported version {}", file.version)));
    }
    let lookup = |id: &str| inst.vertex_by_label(id).ok_or_else(|| invalid(format!("unknown vertex {id:?}")));
    let open = file
        .open
        .iter()
        .map(|c| Ok(OpenCopy::new(lookup(&c.facility)?, c.copy)))
        .collect::<Result<Vec<_>>>()?;
    let mut assignment = BTreeMap::new();
    for a in &file.assignment {
        let v = lookup(&a.client)?;
        if assignment.insert(v, OpenCopy::new(lookup(&a.facility)?, a.copy)).is_some() {
            return Err(invalid(format!("client {:?} assigned twice", a.client)));
        }
    }
    let mut sol = Solution::new(inst, open, assignment);
    sol.radius = file.radius.0;
    Ok(sol)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpeningFile {
    version: u32,
    y: BTreeMap<String, Q>,
}

/// Reads an opening vector indexed like `inst.facilities`; omitted
/// facilities are zero.
pub fn parse_opening(inst: &Instance, text: &str) -> Result<Vec<Rational>> {
    let file: OpeningFile = serde_json::from_str(text).map_err(parse_error)?;
    if file.version != FORMAT_VERSION {
        return Err(invalid(format!("unsupported version {}", file.version)));
    }
    let mut y = vec![rational::int(0); inst.facilities.len()];
    for (id, q) in file.y {
        let pos = inst
            .vertex_by_label(&id)
            .and_then(|v| inst.facilities.binary_search(&v).ok())
            .ok_or_else(|| invalid(format!("{id:?} is not a facility")))?;
        y[pos] = q.0;
    }
    Ok(y)
}

pub fn print_opening(inst: &Instance, y: &[Rational]) -> String {
    let file = OpeningFile {
        version: FORMAT_VERSION,
        y: inst
            .facilities
            .iter()
            .zip(y)
            .map(|(&v, q)| (inst.label(v).to_string(), Q(q.clone())))
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("opening vector serialises");
    out.push('\n');
    out
}
