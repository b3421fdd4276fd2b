//! JSON problem files.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "anchors": [[0.0, 0.0], [1.0, 0.0]],
//!   "sensors_true": [[0.5, 0.5]],
//!   "edges_ss": [],
//!   "edges_as": [[0, 0, 0.7071067811865476], [1, 0, 0.7071067811865476]]
//! }
//! ```
//!
//! `sensors_true` may be `null`. Without it the sensor count is taken from an
//! optional `n_sensors` field, falling back to the largest index used by an
//! edge.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::model::{AnchorEdge, Framework, SensorEdge, SnlProblem, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub dim: usize,
    pub anchors: Vec<Vec<f64>>,
    #[serde(default)]
    pub sensors_true: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub edges_ss: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub edges_as: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sensors: Option<usize>,
}

impl ProblemDocument {
    pub fn from_framework(fw: &Framework) -> Self {
        let mut doc = Self::from_problem(&fw.problem());
        doc.sensors_true = Some(fw.sensors().to_vec());
        doc
    }

    pub fn from_problem(p: &SnlProblem) -> Self {
        Self {
            dim: p.dim(),
            anchors: p.anchors().to_vec(),
            sensors_true: None,
            edges_ss: p.edges_ss().iter().map(|e| (e.i, e.j, e.dist)).collect(),
            edges_as: p.edges_as().iter().map(|e| (e.anchor, e.sensor, e.dist)).collect(),
            n_sensors: Some(p.n_sensors()),
        }
    }

    pub fn n_sensors(&self) -> usize {
        if let Some(s) = &self.sensors_true {
            return s.len();
        }
        if let Some(n) = self.n_sensors {
            return n;
        }
        let ss = self.edges_ss.iter().map(|e| e.0.max(e.1) + 1);
        let as_ = self.edges_as.iter().map(|e| e.1 + 1);
        ss.chain(as_).max().unwrap_or(0)
    }

    pub fn to_problem(&self) -> Result<SnlProblem> {
        if let (Some(s), Some(n)) = (&self.sensors_true, self.n_sensors) {
            if s.len() != n {
                return Err(SnlError::InvalidProblem(format!("n_sensors is {n} but {} true positions given", s.len())));
            }
        }
        SnlProblem::new(
            self.dim,
            self.n_sensors(),
            self.anchors.clone(),
            self.edges_ss.iter().map(|&(i, j, dist)| SensorEdge { i, j, dist }).collect(),
            self.edges_as.iter().map(|&(anchor, sensor, dist)| AnchorEdge { anchor, sensor, dist }).collect(),
        )
    }

    /// The framework described by the true positions, or `None` without them.
    pub fn to_framework(&self) -> Result<Option<Framework>> {
        let Some(sensors) = &self.sensors_true else {
            return Ok(None);
        };
        self.to_problem()?;
        let topo = Topology::new(
            sensors.len(),
            self.anchors.len(),
            self.edges_ss.iter().map(|e| (e.0, e.1)).collect(),
            self.edges_as.iter().map(|e| (e.0, e.1)).collect(),
        )?;
        let fw = Framework::new(topo, self.dim, self.anchors.clone(), sensors.clone())?;
        Ok(Some(fw))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
