//! ADMM for
//!
//! ```text
//! minimize   Σ_k |⟨A_k, Z⟩ − g_k| + ⟨C, Z⟩
//! subject to Z[0..d, 0..d] = I_d,  Z ⪰ 0
//! ```
//!
//! Symmetric matrices are handled in `svec` form (upper triangle, off-diagonal
//! entries scaled by √2) so the trace inner product is the Euclidean one.
//! The splitting is
//!
//! ```text
//! W  (affine: identity block fixed, carries the linear cost)
//! Z  (PSD cone)              with  W = Z
//! r  (L1 residual)           with  𝒜(W) − g = r
//! ```
//!
//! The `r` update is the prox of `‖·‖₁`, i.e. soft thresholding. It stands in
//! for the explicit `w⁺ − w⁻` slack pair of the LP-style formulation: at the
//! optimum `w⁺ = max(r, 0)`, `w⁻ = max(−r, 0)`.
//!
//! Residuals are measured in the ℓ1 norm, the same norm as the objective, so
//! the objective at the returned `Z` is within a small multiple of the
//! tolerance of the optimum.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::SdpData;

pub(crate) struct AdmmSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub rho: f64,
}

pub(crate) struct AdmmOutput {
    pub z: DMatrix<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

const RELAXATION: f64 = 1.6;
const RHO_UPDATE_EVERY: usize = 25;
const RHO_BALANCE: f64 = 10.0;
const MAX_RHO_UPDATES: usize = 20;

#[inline]
pub(crate) fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

pub(crate) fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            v[svec_index(i, j)] = s * 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    v
}

pub(crate) fn smat(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                let x = x / std::f64::consts::SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
    }
    m
}

/// Euclidean projection onto the PSD cone: clamp negative eigenvalues.
pub(crate) fn project_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * vals[c]);
    let p = scaled * v.transpose();
    (&p + p.transpose()) * 0.5
}

fn soft_threshold(x: f64, k: f64) -> f64 {
    if x > k {
        x - k
    } else if x < -k {
        x + k
    } else {
        0.0
    }
}

pub(crate) fn solve(data: &SdpData, settings: &AdmmSettings) -> AdmmOutput {
    let d = data.dim;
    let size = data.size();
    let total = size * (size + 1) / 2;
    let m = data.measurements.len();

    // Coordinates of the identity block are fixed; everything else is free.
    let is_fixed = |idx: usize| -> bool {
        // idx = j(j+1)/2 + i with i <= j; fixed iff j < d.
        idx < d * (d + 1) / 2
    };
    let free: Vec<usize> = (0..total).filter(|&k| !is_fixed(k)).collect();
    let n_free = free.len();

    let mut w_fixed = DVector::zeros(total);
    for i in 0..d {
        w_fixed[svec_index(i, i)] = 1.0;
    }

    if total == d * (d + 1) / 2 {
        // No sensors: the identity block is the only feasible point.
        return AdmmOutput {
            z: smat(&w_fixed, size),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
        };
    }

    // Measurement operator in svec coordinates.
    let mut a_full = DMatrix::zeros(m, total);
    for (k, meas) in data.measurements.iter().enumerate() {
        for &(i, j, v) in &meas.entries {
            let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            a_full[(k, svec_index(i, j))] += s * v;
        }
    }
    let g = DVector::from_iterator(m, data.measurements.iter().map(|meas| meas.target));
    let mut cost = DVector::zeros(total);
    for &(i, j, v) in &data.cost {
        let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
        cost[svec_index(i, j)] += s * v;
    }

    let a_free = DMatrix::from_fn(m, n_free, |r, c| a_full[(r, free[c])]);
    let a_fixed_w = &a_full * &w_fixed;
    let cost_free = DVector::from_fn(n_free, |r, _| cost[free[r]]);

    // (I + AᵀA) does not depend on rho, so one factorization serves the whole run.
    let mut kkt = a_free.transpose() * &a_free;
    for i in 0..n_free {
        kkt[(i, i)] += 1.0;
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(kkt).expect("I + AᵀA is positive definite");

    let mut rho = settings.rho;
    let mut z = w_fixed.clone();
    for i in d..size {
        z[svec_index(i, i)] = 1.0;
    }
    let mut w = z.clone();
    let mut u = DVector::zeros(total);
    let mut r: DVector<f64> = DVector::zeros(m);
    let mut v = DVector::zeros(m);

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut rho_updates = 0;

    for it in 0..settings.max_iters {
        // W-step: least squares over the free coordinates.
        let zu = &z - &u;
        let target = &g + &r - &v - &a_fixed_w;
        let rhs = DVector::from_fn(n_free, |k, _| zu[free[k]]) + a_free.transpose() * target
            - &cost_free / rho;
        let w_free = chol.solve(&rhs);
        w.copy_from(&w_fixed);
        for (k, &idx) in free.iter().enumerate() {
            w[idx] = w_free[k];
        }
        let aw_g = &a_free * &w_free + &a_fixed_w - &g;

        // Over-relaxed copies of the two constraint images.
        let w_hat = &w * RELAXATION + &z * (1.0 - RELAXATION);
        let q_hat = &aw_g * RELAXATION + &r * (1.0 - RELAXATION);

        let z_old = z.clone();
        let r_old = r.clone();

        z = svec(&project_psd(smat(&(&w_hat + &u), size)));
        let q = &q_hat + &v;
        r = q.map(|x| soft_threshold(x, 1.0 / rho));

        u += &w_hat - &z;
        v += &q_hat - &r;

        iterations = it + 1;
        primal = (&w - &z).lp_norm(1) + (&aw_g - &r).lp_norm(1);
        let dz = &z - &z_old;
        let dz_free = DVector::from_fn(n_free, |k, _| dz[free[k]]);
        dual = rho * (dz_free + a_free.transpose() * (&r - &r_old)).lp_norm(1);

        if primal <= settings.tol && dual <= settings.tol {
            converged = true;
            break;
        }

        // Rho is frozen after a bounded number of changes; ADMM with a rho that
        // keeps flipping need not converge.
        if iterations % RHO_UPDATE_EVERY == 0 && rho_updates < MAX_RHO_UPDATES {
            if primal > RHO_BALANCE * dual {
                rho *= 2.0;
                u /= 2.0;
                v /= 2.0;
                rho_updates += 1;
            } else if dual > RHO_BALANCE * primal {
                rho /= 2.0;
                u *= 2.0;
                v *= 2.0;
                rho_updates += 1;
            }
        }
    }

    AdmmOutput { z: smat(&z, size), iterations, primal_residual: primal, dual_residual: dual, converged }
}
