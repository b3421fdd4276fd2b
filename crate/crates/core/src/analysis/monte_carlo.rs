//! Frequency of certified non-convexity on random unit-disk instances.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::check_sufficient_condition;
use super::probability::{lemma_gate, p_r_for_rectangle, theoretical_bound, wilson_interval, DEFAULT_EPSILON};
use crate::error::{Result, SnlError};
use crate::loss::LossSpec;
use crate::model::{sample_unit_disk, Rect, UnitDiskCase};
use crate::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub n: usize,
    pub trials: usize,
    pub certified: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// NaN when `p_r` is unavailable for the radius.
    pub bound_raw: f64,
    pub lemma_gate_ok: bool,
}

impl McRow {
    pub fn bound_clamped(&self) -> f64 {
        if self.bound_raw.is_nan() {
            f64::NAN
        } else {
            self.bound_raw.clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub region: Rect,
    pub radius: f64,
    pub anchors: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub p_r: Option<f64>,
    pub seed: u64,
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn row(&self, n: usize) -> Option<&McRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,trials,fraction,ci_low,ci_high,bound_raw,bound_clamped,lemma_gate_ok\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.trials,
                r.fraction,
                r.ci_low,
                r.ci_high,
                r.bound_raw,
                r.bound_clamped(),
                r.lemma_gate_ok
            );
        }
        out
    }
}

pub fn monte_carlo_nonconvexity(
    case: &UnitDiskCase,
    spec: &LossSpec,
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<McReport> {
    monte_carlo_nonconvexity_with_epsilon(case, spec, n_list, trials, seed, DEFAULT_EPSILON)
}

/// Trials for a given `n` draw their seeds from stream `n` of `seed`, so rows
/// do not depend on which other sizes are requested.
pub fn monte_carlo_nonconvexity_with_epsilon(
    case: &UnitDiskCase,
    spec: &LossSpec,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    epsilon: f64,
) -> Result<McReport> {
    if trials == 0 {
        return Err(SnlError::InvalidParameter("trials must be at least 1".into()));
    }
    if n_list.contains(&0) {
        return Err(SnlError::InvalidParameter("sensor counts must be at least 1".into()));
    }
    let spec = spec.with_ambient_dim(spec.ambient_dim.max(case.region().dim()));
    let p_r = match p_r_for_rectangle(case.region(), case.radius(), epsilon) {
        Ok(p) if p > 0.0 => Some(p),
        Ok(_) | Err(SnlError::RadiusTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();

    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let sized = case.with_sensors(n);
        let mut rng = seeded_rng(seed, n as u64);
        let seeds: Vec<u64> = (0..trials).map(|_| rng.random()).collect();
        let outcomes = seeds
            .par_iter()
            .map(|&s| check_sufficient_condition(&sample_unit_disk(&sized, s), &spec).map(|c| c.is_valid()))
            .collect::<Result<Vec<bool>>>()?;
        let certified = outcomes.iter().filter(|&&v| v).count();
        let (ci_low, ci_high) = wilson_interval(certified, trials);
        let (bound_raw, lemma_gate_ok) = match p_r {
            Some(p) => (theoretical_bound(n, p), lemma_gate(n, p)),
            None => (f64::NAN, false),
        };
        rows.push(McRow {
            n,
            trials,
            certified,
            fraction: certified as f64 / trials as f64,
            ci_low,
            ci_high,
            bound_raw,
            lemma_gate_ok,
        });
    }

    Ok(McReport {
        region: case.region().clone(),
        radius: case.radius(),
        anchors: case.anchors().to_vec(),
        epsilon,
        p_r,
        seed,
        rows,
    })
}
