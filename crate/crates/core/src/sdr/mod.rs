//! Semi-definite relaxation of the SNL problem.
//!
//! With `X = (x_1 … x_n)` and `Y = XᵀX`, every edge equation is linear in
//! the block matrix
//!
//! ```text
//! Z = | I_d  X |
//!     | Xᵀ   Y |
//! ```
//!
//! Relaxing `Y = XᵀX` to `Y ⪰ XᵀX` is the same as `Z ⪰ 0` (Schur
//! complement), which gives a convex problem: minimize the L1 misfit of the
//! edge equations over PSD `Z` with the identity block fixed.

mod admm;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::descent::{self, DescentOptions, DescentResult};
use crate::error::{Result, SnlError};
use crate::loss::{LossSpec, SensorConfig};
use crate::model::SnlProblem;

/// One linear edge measurement `⟨A, Z⟩ = target`.
///
/// `entries` lists the upper triangle of the symmetric matrix `A`
/// (`(i, j, a_ij)` with `i ≤ j`); `a_ij` is mirrored to `(j, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub entries: Vec<(usize, usize, f64)>,
    pub target: f64,
}

impl Measurement {
    /// Builds `A = u uᵀ` from a sparse `u`.
    fn rank_one(u: &[(usize, f64)], target: f64) -> Self {
        let mut entries = Vec::with_capacity(u.len() * (u.len() + 1) / 2);
        for (a, &(i, ui)) in u.iter().enumerate() {
            for &(j, uj) in &u[a..] {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                entries.push((r, c, ui * uj));
            }
        }
        Self { entries, target }
    }

    pub fn inner(&self, z: &DMatrix<f64>) -> f64 {
        sym_inner(&self.entries, z)
    }
}

fn sym_inner(entries: &[(usize, usize, f64)], z: &DMatrix<f64>) -> f64 {
    entries
        .iter()
        .map(|&(i, j, v)| if i == j { v * z[(i, i)] } else { v * (z[(i, j)] + z[(j, i)]) })
        .sum()
}

/// The assembled SDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpData {
    pub dim: usize,
    pub n_sensors: usize,
    /// One per edge, sensor–sensor edges first.
    pub measurements: Vec<Measurement>,
    /// Linear cost `C` (upper triangle), nonzero only when regularizing.
    pub cost: Vec<(usize, usize, f64)>,
}

impl SdpData {
    /// Side length `d + n` of `Z`.
    pub fn size(&self) -> usize {
        self.dim + self.n_sensors
    }

    /// `Σ_k |⟨A_k, Z⟩ − g_k| + ⟨C, Z⟩`.
    pub fn objective(&self, z: &DMatrix<f64>) -> f64 {
        let misfit: f64 = self.measurements.iter().map(|m| (m.inner(z) - m.target).abs()).sum();
        misfit + sym_inner(&self.cost, z)
    }
}

/// `u` for the sensor pair `{i, j}`: `(0; e_i − e_j)`.
fn sensor_pair_vector(dim: usize, i: usize, j: usize) -> Vec<(usize, f64)> {
    vec![(dim + i, 1.0), (dim + j, -1.0)]
}

/// `u` for anchor `a` and sensor `j`: `(a; −e_j)`.
fn anchor_pair_vector(dim: usize, anchor: &[f64], j: usize) -> Vec<(usize, f64)> {
    anchor
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(k, &v)| (k, v))
        .chain(std::iter::once((dim + j, -1.0)))
        .collect()
}

/// Assembles the edge measurements of `p`.
pub fn build_sdp(p: &SnlProblem) -> SdpData {
    build_sdp_regularized(p, 0.0)
}

/// As [`build_sdp`], adding `−λ Σ ⟨u uᵀ, Z⟩` over every vertex pair without
/// a measured distance. Minimizing it pushes unconnected nodes apart.
pub fn build_sdp_regularized(p: &SnlProblem, lambda: f64) -> SdpData {
    let d = p.dim();
    let n = p.n_sensors();
    let mut measurements = Vec::with_capacity(p.n_edges());
    for e in p.edges_ss() {
        measurements.push(Measurement::rank_one(&sensor_pair_vector(d, e.i, e.j), e.dist * e.dist));
    }
    for e in p.edges_as() {
        measurements.push(Measurement::rank_one(
            &anchor_pair_vector(d, &p.anchors()[e.anchor], e.sensor),
            e.dist * e.dist,
        ));
    }

    let mut cost = Vec::new();
    if lambda > 0.0 {
        let topo = p.topology();
        let ss: std::collections::HashSet<_> = topo.edges_ss().iter().copied().collect();
        let r#as: std::collections::HashSet<_> = topo.edges_as().iter().copied().collect();
        let mut add = |u: Vec<(usize, f64)>| {
            cost.extend(Measurement::rank_one(&u, 0.0).entries.into_iter().map(|(i, j, v)| (i, j, -lambda * v)));
        };
        for i in 0..n {
            for j in i + 1..n {
                if !ss.contains(&(i, j)) {
                    add(sensor_pair_vector(d, i, j));
                }
            }
        }
        for (a, anchor) in p.anchors().iter().enumerate() {
            for j in 0..n {
                if !r#as.contains(&(a, j)) {
                    add(anchor_pair_vector(d, anchor, j));
                }
            }
        }
    }
    SdpData { dim: d, n_sensors: n, measurements, cost }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdrOptions {
    /// Primal and dual residual tolerance (ℓ1 norm) of the splitting method.
    pub solver_tol: f64,
    pub max_iters: usize,
    /// Eigenvalues above `rank_tol · λ_max` count toward the numeric rank.
    pub rank_tol: f64,
    /// Weight λ of the spreading regularizer; 0 disables it.
    pub regularization_weight: f64,
    /// Initial ADMM penalty ρ (adapted during the run).
    pub penalty: f64,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self { solver_tol: 1e-7, max_iters: 50_000, rank_tol: 1e-6, regularization_weight: 0.0, penalty: 1.0 }
    }
}

impl SdrOptions {
    fn validate(&self) -> Result<()> {
        if !(self.solver_tol > 0.0 && self.rank_tol > 0.0 && self.penalty > 0.0) {
            return Err(SnlError::InvalidParameter("solver_tol, rank_tol and penalty must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(SnlError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.regularization_weight >= 0.0) {
            return Err(SnlError::InvalidParameter("regularization weight must be non-negative".into()));
        }
        Ok(())
    }
}

/// Solution of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrSolution {
    pub dim: usize,
    pub n_sensors: usize,
    /// The `(d + n) × (d + n)` PSD matrix.
    pub z: DMatrix<f64>,
    /// Objective value at `z`, including the regularizer if any.
    pub objective: f64,
    /// Eigenvalues of `z`, ascending.
    pub eigenvalues: Vec<f64>,
    pub numeric_rank: usize,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl SdrSolution {
    /// `d × n` block: column `j` is the estimate of sensor `j`.
    pub fn x(&self) -> DMatrix<f64> {
        self.z.view((0, self.dim), (self.dim, self.n_sensors)).into_owned()
    }

    pub fn y(&self) -> DMatrix<f64> {
        self.z.view((self.dim, self.dim), (self.n_sensors, self.n_sensors)).into_owned()
    }

    /// The `X` block as a `d`-dimensional configuration.
    pub fn positions(&self) -> SensorConfig {
        let x = self.x();
        let coords = (0..self.n_sensors).flat_map(|j| x.column(j).iter().copied().collect::<Vec<_>>()).collect();
        SensorConfig::new(self.dim, coords).expect("block has d rows")
    }

    /// `Y − XᵀX`, PSD whenever `z` is.
    pub fn schur_complement(&self) -> DMatrix<f64> {
        let x = self.x();
        self.y() - x.transpose() * x
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Largest deviation of the top-left block from `I_d`.
    pub fn identity_block_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((self.z[(i, j)] - target).abs());
            }
        }
        err
    }

    pub fn symmetry_error(&self) -> f64 {
        (&self.z - self.z.transpose()).amax()
    }

    pub fn to_record(&self) -> SdrRecord {
        SdrRecord {
            dim: self.dim,
            n_sensors: self.n_sensors,
            z: self.z.transpose().iter().copied().collect(),
            objective: self.objective,
            eigenvalues: self.eigenvalues.clone(),
            numeric_rank: self.numeric_rank,
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            converged: self.converged,
        }
    }
}

/// JSON form of [`SdrSolution`]; `z` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdrRecord {
    pub dim: usize,
    pub n_sensors: usize,
    pub z: Vec<f64>,
    pub objective: f64,
    pub eigenvalues: Vec<f64>,
    pub numeric_rank: usize,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl SdrRecord {
    pub fn into_solution(self) -> Result<SdrSolution> {
        let size = self.dim + self.n_sensors;
        if self.z.len() != size * size {
            return Err(SnlError::DimensionMismatch { expected: size * size, found: self.z.len() });
        }
        Ok(SdrSolution {
            dim: self.dim,
            n_sensors: self.n_sensors,
            z: DMatrix::from_row_slice(size, size, &self.z),
            objective: self.objective,
            eigenvalues: self.eigenvalues,
            numeric_rank: self.numeric_rank,
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            converged: self.converged,
        })
    }
}

fn sorted_eigenvalues(z: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(z.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn numeric_rank(eigenvalues: &[f64], rank_tol: f64) -> usize {
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l > rank_tol * max).count()
}

/// Solves the relaxation of `p`.
///
/// Fails with [`SnlError::SdrNotConverged`] (carrying the last iterate) if
/// the residuals are still above `solver_tol` after `max_iters`.
pub fn solve_sdr(p: &SnlProblem, opts: &SdrOptions) -> Result<SdrSolution> {
    let sol = solve_sdr_unchecked(p, opts)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(SnlError::SdrNotConverged(Box::new(sol)))
    }
}

/// As [`solve_sdr`] but returns the last iterate even without convergence.
pub fn solve_sdr_unchecked(p: &SnlProblem, opts: &SdrOptions) -> Result<SdrSolution> {
    opts.validate()?;
    let data = build_sdp_regularized(p, opts.regularization_weight);
    let out = admm::solve(
        &data,
        &admm::AdmmSettings { tol: opts.solver_tol, max_iters: opts.max_iters, rho: opts.penalty },
    );
    let eigenvalues = sorted_eigenvalues(&out.z);
    Ok(SdrSolution {
        dim: data.dim,
        n_sensors: data.n_sensors,
        objective: data.objective(&out.z),
        numeric_rank: numeric_rank(&eigenvalues, opts.rank_tol),
        eigenvalues,
        z: out.z,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        converged: out.converged,
    })
}

/// Sensor positions read off an SDR solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    /// `rank(Z) = d`: `Y = XᵀX` and `X` is a `d`-dimensional solution.
    Exact(SensorConfig),
    /// Higher rank: `X₂` with `X₂ᵀX₂ = Y − XᵀX` lifts the sensors to
    /// `(x_j; x2_j) ∈ R^{d+n}`, a solution with zero-padded anchors.
    Lifted { x: SensorConfig, x2: DMatrix<f64>, lifted: SensorConfig },
}

impl Realization {
    /// The `d`-dimensional part.
    pub fn positions(&self) -> &SensorConfig {
        match self {
            Self::Exact(x) | Self::Lifted { x, .. } => x,
        }
    }
}

/// Classifies `sol` by numeric rank and factors the Schur complement when
/// the rank exceeds `d`.
pub fn extract(sol: &SdrSolution, rank_tol: f64) -> Realization {
    let x = sol.positions();
    if numeric_rank(&sol.eigenvalues, rank_tol) <= sol.dim {
        return Realization::Exact(x);
    }
    let n = sol.n_sensors;
    let eig = SymmetricEigen::new(sol.schur_complement());
    // X₂ = diag(√λ) Vᵀ, negative round-off clamped.
    let x2 = DMatrix::from_fn(n, n, |r, c| eig.eigenvalues[r].max(0.0).sqrt() * eig.eigenvectors[(c, r)]);
    let lifted_dim = sol.dim + n;
    let mut coords = Vec::with_capacity(lifted_dim * n);
    for j in 0..n {
        coords.extend_from_slice(x.point(j));
        coords.extend(x2.column(j).iter());
    }
    let lifted = SensorConfig::new(lifted_dim, coords).expect("consistent lift");
    Realization::Lifted { x, x2, lifted }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub sdr: SdrSolution,
    pub warm: SensorConfig,
    pub result: DescentResult,
}

/// Relaxation then descent: solve the SDR, take its `X` block as the start
/// point, and run descent on the `b = c = 2` loss.
pub fn sdr_gd_pipeline(p: &SnlProblem, sdr_opts: &SdrOptions, descent_opts: &DescentOptions) -> Result<PipelineResult> {
    let sdr = solve_sdr(p, sdr_opts)?;
    let warm = sdr.positions();
    let result = descent::descend(p, &LossSpec::smooth(p.dim()), &warm, descent_opts)?;
    Ok(PipelineResult { sdr, warm, result })
}
