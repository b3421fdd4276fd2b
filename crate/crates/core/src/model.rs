//! Problem representation, validation and instance generation.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::seeded_rng;

/// Graph of sensors and anchors.
///
/// Sensor–sensor edges are stored with `i < j`; anchor–sensor edges are
/// ordered `(anchor, sensor)` pairs. There is no way to express an
/// anchor–anchor edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    n_sensors: usize,
    n_anchors: usize,
    edges_ss: Vec<(usize, usize)>,
    edges_as: Vec<(usize, usize)>,
}

impl Topology {
    pub fn new(
        n_sensors: usize,
        n_anchors: usize,
        edges_ss: Vec<(usize, usize)>,
        edges_as: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges_ss.len());
        let mut normalized = Vec::with_capacity(edges_ss.len());
        for (i, j) in edges_ss {
            if i == j {
                return Err(SnlError::InvalidTopology(format!("self-loop on sensor {i}")));
            }
            if i >= n_sensors || j >= n_sensors {
                return Err(SnlError::InvalidTopology(format!(
                    "sensor edge ({i}, {j}) out of range for {n_sensors} sensors"
                )));
            }
            let e = (i.min(j), i.max(j));
            if !seen.insert(e) {
                return Err(SnlError::InvalidTopology(format!("duplicate sensor edge {e:?}")));
            }
            normalized.push(e);
        }
        let mut seen = HashSet::with_capacity(edges_as.len());
        for &(a, s) in &edges_as {
            if a >= n_anchors || s >= n_sensors {
                return Err(SnlError::InvalidTopology(format!(
                    "anchor edge ({a}, {s}) out of range for {n_anchors} anchors / {n_sensors} sensors"
                )));
            }
            if !seen.insert((a, s)) {
                return Err(SnlError::InvalidTopology(format!("duplicate anchor edge ({a}, {s})")));
            }
        }
        Ok(Self { n_sensors, n_anchors, edges_ss: normalized, edges_as })
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_anchors(&self) -> usize {
        self.n_anchors
    }

    pub fn edges_ss(&self) -> &[(usize, usize)] {
        &self.edges_ss
    }

    pub fn edges_as(&self) -> &[(usize, usize)] {
        &self.edges_as
    }

    pub fn n_edges(&self) -> usize {
        self.edges_ss.len() + self.edges_as.len()
    }

    /// Degree of every sensor, counting both sensor and anchor neighbours.
    pub fn sensor_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_sensors];
        for &(i, j) in &self.edges_ss {
            deg[i] += 1;
            deg[j] += 1;
        }
        for &(_, s) in &self.edges_as {
            deg[s] += 1;
        }
        deg
    }
}

/// A topology together with positions for every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Framework {
    topology: Topology,
    dim: usize,
    anchors: Vec<Vec<f64>>,
    sensors: Vec<Vec<f64>>,
}

impl Framework {
    pub fn new(
        topology: Topology,
        dim: usize,
        anchors: Vec<Vec<f64>>,
        sensors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(SnlError::InvalidFramework("dimension must be positive".into()));
        }
        if anchors.len() != topology.n_anchors() {
            return Err(SnlError::InvalidFramework(format!(
                "{} anchor positions for {} anchors",
                anchors.len(),
                topology.n_anchors()
            )));
        }
        if sensors.len() != topology.n_sensors() {
            return Err(SnlError::InvalidFramework(format!(
                "{} sensor positions for {} sensors",
                sensors.len(),
                topology.n_sensors()
            )));
        }
        check_points(&anchors, dim, "anchor").map_err(SnlError::InvalidFramework)?;
        check_points(&sensors, dim, "sensor").map_err(SnlError::InvalidFramework)?;
        Ok(Self { topology, dim, anchors, sensors })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn sensors(&self) -> &[Vec<f64>] {
        &self.sensors
    }

    /// The SNL problem this framework solves: every edge gets its exact
    /// Euclidean length.
    pub fn problem(&self) -> SnlProblem {
        let edges_ss = self
            .topology
            .edges_ss()
            .iter()
            .map(|&(i, j)| SensorEdge { i, j, dist: distance(&self.sensors[i], &self.sensors[j]) })
            .collect();
        let edges_as = self
            .topology
            .edges_as()
            .iter()
            .map(|&(a, s)| AnchorEdge {
                anchor: a,
                sensor: s,
                dist: distance(&self.anchors[a], &self.sensors[s]),
            })
            .collect();
        SnlProblem {
            dim: self.dim,
            n_sensors: self.topology.n_sensors(),
            anchors: self.anchors.clone(),
            edges_ss,
            edges_as,
        }
    }
}

/// Measured distance between sensors `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEdge {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
}

/// Measured distance between an anchor and a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorEdge {
    pub anchor: usize,
    pub sensor: usize,
    pub dist: f64,
}

/// Anchor positions plus the measured distances: the thing being solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnlProblem {
    dim: usize,
    n_sensors: usize,
    anchors: Vec<Vec<f64>>,
    edges_ss: Vec<SensorEdge>,
    edges_as: Vec<AnchorEdge>,
}

impl SnlProblem {
    pub fn new(
        dim: usize,
        n_sensors: usize,
        anchors: Vec<Vec<f64>>,
        edges_ss: Vec<SensorEdge>,
        edges_as: Vec<AnchorEdge>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(SnlError::InvalidProblem("dimension must be positive".into()));
        }
        check_points(&anchors, dim, "anchor").map_err(SnlError::InvalidProblem)?;
        // Reuse the topology checks for ranges, self-loops and duplicates.
        let topo = Topology::new(
            n_sensors,
            anchors.len(),
            edges_ss.iter().map(|e| (e.i, e.j)).collect(),
            edges_as.iter().map(|e| (e.anchor, e.sensor)).collect(),
        )
        .map_err(|e| SnlError::InvalidProblem(e.to_string()))?;
        let dists = edges_ss.iter().map(|e| e.dist).chain(edges_as.iter().map(|e| e.dist));
        if let Some(bad) = dists.into_iter().find(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(SnlError::InvalidProblem(format!("edge distance {bad} is not positive")));
        }
        let edges_ss = edges_ss
            .into_iter()
            .zip(topo.edges_ss())
            .map(|(e, &(i, j))| SensorEdge { i, j, dist: e.dist })
            .collect();
        Ok(Self { dim, n_sensors, anchors, edges_ss, edges_as })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len()
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn edges_ss(&self) -> &[SensorEdge] {
        &self.edges_ss
    }

    pub fn edges_as(&self) -> &[AnchorEdge] {
        &self.edges_as
    }

    pub fn n_edges(&self) -> usize {
        self.edges_ss.len() + self.edges_as.len()
    }

    pub fn topology(&self) -> Topology {
        Topology {
            n_sensors: self.n_sensors,
            n_anchors: self.anchors.len(),
            edges_ss: self.edges_ss.iter().map(|e| (e.i, e.j)).collect(),
            edges_as: self.edges_as.iter().map(|e| (e.anchor, e.sensor)).collect(),
        }
    }

    /// Largest violation of the edge equations by `points` (one d-vector
    /// per sensor, anchors zero-padded if the points live in more
    /// dimensions).
    pub fn max_edge_deviation(&self, points: &[Vec<f64>]) -> f64 {
        let ss = self
            .edges_ss
            .iter()
            .map(|e| (distance(&points[e.i], &points[e.j]) - e.dist).abs());
        let r#as = self
            .edges_as
            .iter()
            .map(|e| (padded_distance(&self.anchors[e.anchor], &points[e.sensor]) - e.dist).abs());
        ss.chain(r#as).fold(0.0, f64::max)
    }
}

/// Axis-aligned box `[lo, hi]` in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(SnlError::InvalidParameter("rectangle bounds must be non-empty and equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && h > l)) {
            return Err(SnlError::InvalidParameter(format!("degenerate rectangle {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `[0, side]^dim`.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![side; dim])
    }

    /// `[lo, hi]^dim`.
    pub fn symmetric(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn sides(&self) -> impl Iterator<Item = f64> + '_ {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l)
    }

    pub fn volume(&self) -> f64 {
        self.sides().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.sides().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    /// All `2^d` corners, lowest first, in binary counting order.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { self.hi[k] } else { self.lo[k] }).collect())
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| rng.random_range(l..h)).collect()
    }
}

/// Random unit-disk instance family: sensors uniform on `region`, edges
/// wherever two vertices are within `radius` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDiskCase {
    region: Rect,
    radius: f64,
    n_sensors: usize,
    anchors: Vec<Vec<f64>>,
}

impl UnitDiskCase {
    pub fn new(region: Rect, radius: f64, n_sensors: usize, anchors: Vec<Vec<f64>>) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SnlError::InvalidParameter(format!("radius {radius} must be positive")));
        }
        if let Some(a) = anchors.iter().find(|a| !region.contains(a)) {
            return Err(SnlError::InvalidParameter(format!("anchor {a:?} outside region")));
        }
        Ok(Self { region, radius, n_sensors, anchors })
    }

    pub fn region(&self) -> &Rect {
        &self.region
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    /// Same region, radius and anchors with a different sensor count.
    pub fn with_sensors(&self, n_sensors: usize) -> Self {
        Self { n_sensors, ..self.clone() }
    }
}

/// Draws one framework from the unit-disk family.
pub fn sample_unit_disk(case: &UnitDiskCase, seed: u64) -> Framework {
    let mut rng = seeded_rng(seed, 0);
    let sensors: Vec<Vec<f64>> = (0..case.n_sensors).map(|_| case.region.sample(&mut rng)).collect();
    framework_by_radius(case.region.dim(), case.anchors.clone(), sensors, case.radius)
        .expect("unit-disk sample is valid by construction")
}

/// Builds the framework whose edges are all vertex pairs at distance `<= radius`.
pub fn framework_by_radius(
    dim: usize,
    anchors: Vec<Vec<f64>>,
    sensors: Vec<Vec<f64>>,
    radius: f64,
) -> Result<Framework> {
    let n = sensors.len();
    let mut ss = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if distance(&sensors[i], &sensors[j]) <= radius {
                ss.push((i, j));
            }
        }
    }
    let mut r#as = Vec::new();
    for (a, anchor) in anchors.iter().enumerate() {
        for (s, sensor) in sensors.iter().enumerate() {
            if distance(anchor, sensor) <= radius {
                r#as.push((a, s));
            }
        }
    }
    let topology = Topology::new(n, anchors.len(), ss, r#as)?;
    Framework::new(topology, dim, anchors, sensors)
}

/// Smallest acceptable singular-value ratio of the predecessor simplex a new
/// sensor is attached to. Keeps generated trilaterations well conditioned.
const TRILATERATION_MIN_CONDITION: f64 = 0.15;
const TRILATERATION_MAX_TRIES: usize = 10_000;

/// Generates a trilateration framework: `dim + 1` anchors on corners of the
/// region, then sensors added one at a time, each linked to its `dim + 1`
/// nearest already-placed vertices.
pub fn gen_trilateration(dim: usize, n_sensors: usize, region: &Rect, seed: u64) -> Result<Framework> {
    if dim == 0 || region.dim() != dim {
        return Err(SnlError::InvalidParameter(format!(
            "region dimension {} does not match dim {dim}",
            region.dim()
        )));
    }
    let k = dim + 1;
    let mut anchors = vec![region.lo.clone()];
    for axis in 0..dim {
        let mut a = region.lo.clone();
        a[axis] = region.hi[axis];
        anchors.push(a);
    }

    let mut rng = seeded_rng(seed, 0);
    let mut sensors: Vec<Vec<f64>> = Vec::with_capacity(n_sensors);
    let mut ss = Vec::new();
    let mut r#as = Vec::new();
    let min_gap = 1e-2 * region.diameter();

    for s in 0..n_sensors {
        let mut placed = false;
        for _ in 0..TRILATERATION_MAX_TRIES {
            let p = region.sample(&mut rng);
            // Predecessors: anchors (Err) then sensors (Ok), sorted by distance.
            let mut preds: Vec<(f64, std::result::Result<usize, usize>)> = anchors
                .iter()
                .enumerate()
                .map(|(a, q)| (distance(&p, q), Err(a)))
                .chain(sensors.iter().enumerate().map(|(i, q)| (distance(&p, q), Ok(i))))
                .collect();
            preds.sort_by(|a, b| a.0.total_cmp(&b.0));
            preds.truncate(k);
            if preds[0].0 < min_gap {
                continue;
            }
            let pts: Vec<&[f64]> = preds
                .iter()
                .map(|(_, v)| match *v {
                    Err(a) => anchors[a].as_slice(),
                    Ok(i) => sensors[i].as_slice(),
                })
                .collect();
            if simplex_condition(&pts) < TRILATERATION_MIN_CONDITION {
                continue;
            }
            for (_, v) in &preds {
                match *v {
                    Err(a) => r#as.push((a, s)),
                    Ok(i) => ss.push((i, s)),
                }
            }
            sensors.push(p);
            placed = true;
            break;
        }
        if !placed {
            return Err(SnlError::InvalidParameter(
                "could not place a sensor in general position".into(),
            ));
        }
    }
    let topology = Topology::new(n_sensors, anchors.len(), ss, r#as)?;
    Framework::new(topology, dim, anchors, sensors)
}

/// Ratio of smallest to largest singular value of the edge vectors
/// `p_k - p_0`; zero for affinely dependent points.
fn simplex_condition(points: &[&[f64]]) -> f64 {
    let d = points[0].len();
    let m = DMatrix::from_fn(d, points.len() - 1, |r, c| points[c + 1][r] - points[0][r]);
    let sv = m.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Named constructions used throughout the documentation and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinExample {
    /// One anchor at the origin, one sensor at distance 1.
    OneAnchorOneSensor,
    /// Anchors (-1,0), (1,0), (0,0.4); sensor (0,1); fully connected.
    ThreeAnchorOneSensor,
    /// Four anchors `(±e, ±h)`, sensors `(-e,0)` and `(e,0)`, edges within radius `r`.
    RadiusExample { e: f64, h: f64, r: f64 },
}

impl BuiltinExample {
    pub const NAMES: [&'static str; 3] =
        ["one_anchor_one_sensor", "three_anchor_one_sensor", "radius_example"];

    /// Looks an example up by name. `radius_example` takes `[e, h, r]`.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        match name {
            "one_anchor_one_sensor" => Ok(Self::OneAnchorOneSensor),
            "three_anchor_one_sensor" => Ok(Self::ThreeAnchorOneSensor),
            "radius_example" => match *params {
                [e, h, r] if e > 0.0 && h > 0.0 && r > 0.0 => Ok(Self::RadiusExample { e, h, r }),
                _ => Err(SnlError::InvalidParameter(
                    "radius_example needs positive e, h and r".into(),
                )),
            },
            other => Err(SnlError::UnknownExample(other.to_string())),
        }
    }

    pub fn framework(&self) -> Framework {
        match *self {
            Self::OneAnchorOneSensor => {
                let topo = Topology::new(1, 1, vec![], vec![(0, 0)]).expect("valid");
                Framework::new(topo, 2, vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0]]).expect("valid")
            }
            Self::ThreeAnchorOneSensor => {
                let topo = Topology::new(1, 3, vec![], vec![(0, 0), (1, 0), (2, 0)]).expect("valid");
                Framework::new(
                    topo,
                    2,
                    vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.4]],
                    vec![vec![0.0, 1.0]],
                )
                .expect("valid")
            }
            Self::RadiusExample { e, h, r } => {
                let anchors = vec![vec![-e, h], vec![-e, -h], vec![e, h], vec![e, -h]];
                let sensors = vec![vec![-e, 0.0], vec![e, 0.0]];
                framework_by_radius(2, anchors, sensors, r).expect("valid")
            }
        }
    }

    pub fn problem(&self) -> SnlProblem {
        self.framework().problem()
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance between a point and another one of possibly lower dimension,
/// the shorter one zero-padded.
pub(crate) fn padded_distance(a: &[f64], b: &[f64]) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let head: f64 = short.iter().zip(long).map(|(x, y)| (x - y) * (x - y)).sum();
    let tail: f64 = long[short.len()..].iter().map(|y| y * y).sum();
    (head + tail).sqrt()
}

fn check_points(points: &[Vec<f64>], dim: usize, what: &str) -> std::result::Result<(), String> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(format!("{what} {i} has {} coordinates, expected {dim}", p.len()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(format!("{what} {i} has a non-finite coordinate"));
        }
    }
    Ok(())
}
