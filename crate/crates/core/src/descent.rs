//! Gradient and subgradient descent on the loss, with multistart batching.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::loss::{self, LossSpec, SensorConfig};
use crate::model::{Rect, SnlProblem};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    Constant { eta: f64 },
    /// `eta / sqrt(k + 1)` at iteration `k`.
    Diminishing { eta: f64 },
    /// Armijo backtracking: accept `t` once
    /// `f(x − t g) ≤ f(x) − alpha·t·‖g‖²`, shrinking `t` by `beta`.
    Backtracking { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub grad_tol: f64,
    pub loss_tol: f64,
    pub record_trace: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            step_rule: StepRule::Backtracking { alpha: 0.3, beta: 0.5 },
            grad_tol: 1e-8,
            loss_tol: 1e-14,
            record_trace: false,
        }
    }
}

impl DescentOptions {
    /// Backtracking for smooth specs, diminishing steps otherwise (Armijo
    /// search on a subgradient can stall at kinks).
    pub fn for_spec(spec: &LossSpec) -> Self {
        if spec.outside_degree > 1.0 {
            Self::default()
        } else {
            Self { step_rule: StepRule::Diminishing { eta: 1e-2 }, ..Self::default() }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SnlError::InvalidParameter(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.grad_tol > 0.0 && self.loss_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        match self.step_rule {
            StepRule::Constant { eta } | StepRule::Diminishing { eta } if !(eta > 0.0) => bad("step size must be positive"),
            StepRule::Backtracking { alpha, beta }
                if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) =>
            {
                bad("backtracking parameters must lie in (0, 1)")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradTol,
    LossTol,
    /// No step size produced a decrease; the iterate is stationary to
    /// working precision.
    LineSearchStalled,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub x_final: SensorConfig,
    pub loss_final: f64,
    pub iters_used: usize,
    pub trace: Option<Vec<(usize, f64)>>,
    pub converged: bool,
    pub stop: StopReason,
}

impl DescentResult {
    /// `iter,loss` CSV of the recorded trace (header only if none was kept).
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,loss\n");
        for (k, l) in self.trace.iter().flatten() {
            out.push_str(&format!("{k},{l}\n"));
        }
        out
    }
}

const MIN_STEP: f64 = 1e-30;

/// Runs descent from `x0`. The best iterate seen is returned, so the final
/// loss never exceeds the starting loss even for non-monotone step rules.
pub fn descend(p: &SnlProblem, spec: &LossSpec, x0: &SensorConfig, opts: &DescentOptions) -> Result<DescentResult> {
    opts.validate()?;
    let mut x = x0.clone();
    let mut f = loss::loss_eval(p, spec, &x)?;
    if !f.is_finite() {
        return Err(SnlError::Diverged { iter: 0 });
    }
    let mut best = (x.clone(), f);
    let mut trace = opts.record_trace.then(|| vec![(0, f)]);
    let mut step = 1.0;
    let mut stop = StopReason::MaxIters;
    let mut iters = 0;

    for k in 0..opts.max_iters {
        if f <= opts.loss_tol {
            stop = StopReason::LossTol;
            break;
        }
        let g = loss::grad_unchecked(p, spec, &x);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if !g2.is_finite() {
            return Err(SnlError::Diverged { iter: k });
        }
        if g2.sqrt() <= opts.grad_tol {
            stop = StopReason::GradTol;
            break;
        }
        let t = match opts.step_rule {
            StepRule::Constant { eta } => eta,
            StepRule::Diminishing { eta } => eta / ((k + 1) as f64).sqrt(),
            StepRule::Backtracking { alpha, beta } => {
                // Allow the step to grow back after a run of short steps.
                let mut t = (step / beta).min(1.0);
                loop {
                    let trial = step_along(&x, &g, t);
                    let ft = loss::loss_unchecked(p, spec, &trial);
                    if ft <= f - alpha * t * g2 {
                        break;
                    }
                    t *= beta;
                    if t < MIN_STEP {
                        break;
                    }
                }
                step = t;
                t
            }
        };
        if t < MIN_STEP {
            stop = StopReason::LineSearchStalled;
            break;
        }
        x = step_along(&x, &g, t);
        f = loss::loss_unchecked(p, spec, &x);
        iters = k + 1;
        if !f.is_finite() {
            return Err(SnlError::Diverged { iter: iters });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push((iters, f));
        }
        if f < best.1 {
            best = (x.clone(), f);
        }
    }
    if stop == StopReason::MaxIters && f <= opts.loss_tol {
        stop = StopReason::LossTol;
    }

    let (x_final, _) = best;
    let loss_final = loss::loss_unchecked(p, spec, &x_final);
    Ok(DescentResult {
        x_final,
        loss_final,
        iters_used: iters,
        trace,
        converged: stop != StopReason::MaxIters,
        stop,
    })
}

fn step_along(x: &SensorConfig, g: &[f64], t: f64) -> SensorConfig {
    let mut y = x.clone();
    for (v, gk) in y.coords_mut().iter_mut().zip(g) {
        *v -= t * gk;
    }
    y
}

/// Descends from `n_starts` uniform random points of `start_box`.
///
/// `start_box` is either a box in the full configuration space (dimension
/// `D·n`) or a box in `R^D` applied to every sensor. Results come back in
/// start order whatever the scheduling.
pub fn multistart(
    p: &SnlProblem,
    spec: &LossSpec,
    n_starts: usize,
    start_box: &Rect,
    opts: &DescentOptions,
    seed: u64,
) -> Result<Vec<DescentResult>> {
    if n_starts == 0 {
        return Err(SnlError::InvalidParameter("n_starts must be at least 1".into()));
    }
    let dim = spec.ambient_dim;
    if start_box.dim() != dim && start_box.dim() != dim * p.n_sensors() {
        return Err(SnlError::DimensionMismatch { expected: dim * p.n_sensors(), found: start_box.dim() });
    }
    (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(seed, k as u64);
            let x0 = SensorConfig::sample_in(start_box, dim, p.n_sensors(), &mut rng)?;
            descend(p, spec, &x0, opts)
        })
        .collect()
}

/// A group of descent endpoints that landed at the same local minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumCluster {
    /// Lowest-loss endpoint of the cluster.
    pub representative: SensorConfig,
    pub loss: f64,
    /// Indices into the input results.
    pub members: Vec<usize>,
}

pub const DEFAULT_MERGE_RADIUS: f64 = 0.05;

/// Greedy single-link clustering of endpoints: an endpoint joins the first
/// cluster with a member within `merge_radius`. Clusters are sorted by loss.
pub fn cluster_minima(results: &[DescentResult], merge_radius: f64) -> Vec<MinimumCluster> {
    let mut clusters: Vec<MinimumCluster> = Vec::new();
    for (idx, r) in results.iter().enumerate() {
        let hit = clusters.iter_mut().find(|c| {
            c.members.iter().any(|&m| results[m].x_final.distance(&r.x_final) <= merge_radius)
        });
        match hit {
            Some(c) => {
                c.members.push(idx);
                if r.loss_final < c.loss {
                    c.loss = r.loss_final;
                    c.representative = r.x_final.clone();
                }
            }
            None => clusters.push(MinimumCluster {
                representative: r.x_final.clone(),
                loss: r.loss_final,
                members: vec![idx],
            }),
        }
    }
    clusters.sort_by(|a, b| a.loss.total_cmp(&b.loss));
    clusters
}
