//! The `(b, c)` loss family
//!
//! ```text
//! loss(x) = Σ_{i~j} | ‖x_i − x_j‖^b − d_ij^b |^c + Σ_{a_i~s_j} | ‖a_i − x_j‖^b − d̃_ij^b |^c
//! ```
//!
//! evaluated in an ambient dimension `D ≥ d`. For `D > d` anchors are
//! zero-padded in the trailing coordinates, which gives the directly
//! dimension-augmented loss.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::model::SnlProblem;

/// Exponents and ambient dimension of a loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Inside degree `b`.
    pub inside_degree: f64,
    /// Outside degree `c`.
    pub outside_degree: f64,
    /// Dimension `D` the sensor coordinates live in.
    pub ambient_dim: usize,
}

impl LossSpec {
    pub fn new(inside_degree: f64, outside_degree: f64, ambient_dim: usize) -> Result<Self> {
        if !(inside_degree >= 1.0 && inside_degree.is_finite()) {
            return Err(SnlError::InvalidParameter(format!("inside degree {inside_degree} < 1")));
        }
        if !(outside_degree >= 1.0 && outside_degree.is_finite()) {
            return Err(SnlError::InvalidParameter(format!("outside degree {outside_degree} < 1")));
        }
        if ambient_dim == 0 {
            return Err(SnlError::InvalidParameter("ambient dimension must be positive".into()));
        }
        Ok(Self { inside_degree, outside_degree, ambient_dim })
    }

    /// `b = 2, c = 1`: the absolute-residual loss.
    pub fn absolute(dim: usize) -> Self {
        Self { inside_degree: 2.0, outside_degree: 1.0, ambient_dim: dim }
    }

    /// `b = c = 2`: the smooth quartic loss.
    pub fn smooth(dim: usize) -> Self {
        Self { inside_degree: 2.0, outside_degree: 2.0, ambient_dim: dim }
    }

    pub fn with_ambient_dim(self, ambient_dim: usize) -> Self {
        Self { ambient_dim, ..self }
    }

    pub fn is_smooth(&self) -> bool {
        self.inside_degree == 2.0 && self.outside_degree == 2.0
    }

    /// `|g|^c` where `g` is the inside residual.
    #[inline]
    fn outer(&self, g: f64) -> f64 {
        match self.outside_degree {
            1.0 => g.abs(),
            2.0 => g * g,
            c => g.abs().powf(c),
        }
    }

    /// `d/dg |g|^c`, with the kink at `g = 0` mapped to 0.
    #[inline]
    fn outer_slope(&self, g: f64) -> f64 {
        if g == 0.0 {
            return 0.0;
        }
        match self.outside_degree {
            1.0 => g.signum(),
            2.0 => 2.0 * g,
            c => c * g.abs().powf(c - 1.0) * g.signum(),
        }
    }

    /// Inside residual from a squared distance and a target length.
    #[inline]
    fn inner(&self, sq_dist: f64, target: f64) -> f64 {
        if self.inside_degree == 2.0 {
            sq_dist - target * target
        } else {
            sq_dist.sqrt().powf(self.inside_degree) - target.powf(self.inside_degree)
        }
    }

    /// Factor `s` such that `∇_δ ‖δ‖^b = s·δ`.
    #[inline]
    fn inner_scale(&self, sq_dist: f64) -> f64 {
        let b = self.inside_degree;
        if b == 2.0 {
            2.0
        } else if sq_dist == 0.0 {
            0.0
        } else {
            b * sq_dist.sqrt().powf(b - 2.0)
        }
    }

    /// One edge term `| ‖δ‖^b − target^b |^c` from `‖δ‖²`.
    #[inline]
    pub fn term(&self, sq_dist: f64, target: f64) -> f64 {
        self.outer(self.inner(sq_dist, target))
    }
}

/// Stacked sensor coordinates `(x_1, …, x_n)`, each block of length `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    dim: usize,
    coords: Vec<f64>,
}

impl SensorConfig {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(SnlError::DimensionMismatch {
                expected: dim.max(1) * (coords.len() / dim.max(1) + 1),
                found: coords.len(),
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn zeros(dim: usize, n_sensors: usize) -> Self {
        Self { dim, coords: vec![0.0; dim * n_sensors] }
    }

    /// Stacks one point per sensor. All points must share a dimension.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(SnlError::DimensionMismatch { expected: dim, found: p.len() });
        }
        Ok(Self { dim, coords: points.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Zero-pads every block to `dim`.
    pub fn padded(&self, dim: usize) -> Self {
        assert!(dim >= self.dim, "cannot pad {} down to {dim}", self.dim);
        let mut coords = Vec::with_capacity(dim * self.n_sensors());
        for p in self.coords.chunks(self.dim) {
            coords.extend_from_slice(p);
            coords.extend(std::iter::repeat_n(0.0, dim - self.dim));
        }
        Self { dim, coords }
    }

    /// Keeps the first `dim` coordinates of every block.
    pub fn truncated(&self, dim: usize) -> Self {
        assert!(dim <= self.dim && dim > 0);
        let coords = self.coords.chunks(self.dim).flat_map(|p| p[..dim].iter().copied()).collect();
        Self { dim, coords }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|x| x * s).collect() }
    }

    /// `self + t·(other − self)`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + t * (b - a)).collect();
        Self { dim: self.dim, coords }
    }

    /// Uniform random configuration of `n_sensors` points in `dim`
    /// dimensions. `bx` is either a box in the full space (dimension
    /// `dim · n_sensors`) or a box in `R^dim` used for every sensor.
    pub fn sample_in<R: rand::Rng + ?Sized>(
        bx: &crate::model::Rect,
        dim: usize,
        n_sensors: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let full = dim * n_sensors;
        let coords = if bx.dim() == full {
            bx.sample(rng)
        } else if bx.dim() == dim {
            (0..n_sensors).flat_map(|_| bx.sample(rng)).collect()
        } else {
            return Err(SnlError::DimensionMismatch { expected: full, found: bx.dim() });
        };
        Self::new(dim, coords)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

fn check_dims(p: &SnlProblem, spec: &LossSpec, x: &SensorConfig) -> Result<()> {
    if spec.ambient_dim < p.dim() {
        return Err(SnlError::DimensionMismatch { expected: p.dim(), found: spec.ambient_dim });
    }
    if x.dim() != spec.ambient_dim {
        return Err(SnlError::DimensionMismatch { expected: spec.ambient_dim, found: x.dim() });
    }
    if x.n_sensors() != p.n_sensors() {
        return Err(SnlError::DimensionMismatch {
            expected: spec.ambient_dim * p.n_sensors(),
            found: x.coords().len(),
        });
    }
    Ok(())
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `‖(a, 0) − x‖²` with the anchor zero-padded to `x.len()`.
#[inline]
fn anchor_sq_dist(anchor: &[f64], x: &[f64]) -> f64 {
    sq_dist(anchor, &x[..anchor.len()]) + x[anchor.len()..].iter().map(|v| v * v).sum::<f64>()
}

pub fn loss_eval(p: &SnlProblem, spec: &LossSpec, x: &SensorConfig) -> Result<f64> {
    check_dims(p, spec, x)?;
    Ok(loss_unchecked(p, spec, x))
}

pub(crate) fn loss_unchecked(p: &SnlProblem, spec: &LossSpec, x: &SensorConfig) -> f64 {
    let ss: f64 = p
        .edges_ss()
        .iter()
        .map(|e| spec.term(sq_dist(x.point(e.i), x.point(e.j)), e.dist))
        .sum();
    let r#as: f64 = p
        .edges_as()
        .iter()
        .map(|e| spec.term(anchor_sq_dist(&p.anchors()[e.anchor], x.point(e.sensor)), e.dist))
        .sum();
    ss + r#as
}

/// Gradient of the loss; for non-smooth specs a subgradient with the kink
/// selection `sign(0) = 0`.
pub fn loss_grad(p: &SnlProblem, spec: &LossSpec, x: &SensorConfig) -> Result<Vec<f64>> {
    check_dims(p, spec, x)?;
    Ok(grad_unchecked(p, spec, x))
}

pub(crate) fn grad_unchecked(p: &SnlProblem, spec: &LossSpec, x: &SensorConfig) -> Vec<f64> {
    let dim = x.dim();
    let mut g = vec![0.0; x.coords().len()];
    for e in p.edges_ss() {
        let (xi, xj) = (x.point(e.i), x.point(e.j));
        let sq = sq_dist(xi, xj);
        let w = spec.outer_slope(spec.inner(sq, e.dist)) * spec.inner_scale(sq);
        if w == 0.0 {
            continue;
        }
        for k in 0..dim {
            let delta = w * (xi[k] - xj[k]);
            g[e.i * dim + k] += delta;
            g[e.j * dim + k] -= delta;
        }
    }
    for e in p.edges_as() {
        let a = &p.anchors()[e.anchor];
        let xj = x.point(e.sensor);
        let sq = anchor_sq_dist(a, xj);
        let w = spec.outer_slope(spec.inner(sq, e.dist)) * spec.inner_scale(sq);
        if w == 0.0 {
            continue;
        }
        for k in 0..dim {
            let ak = a.get(k).copied().unwrap_or(0.0);
            g[e.sensor * dim + k] += w * (xj[k] - ak);
        }
    }
    g
}

/// Loss sampled at `samples` evenly spaced points of the segment `x0 → x1`.
pub fn loss_along_segment(
    p: &SnlProblem,
    spec: &LossSpec,
    x0: &SensorConfig,
    x1: &SensorConfig,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(SnlError::InvalidParameter(format!("need at least 2 samples, got {samples}")));
    }
    check_dims(p, spec, x0)?;
    check_dims(p, spec, x1)?;
    Ok((0..samples)
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            (t, loss_unchecked(p, spec, &x0.lerp(x1, t)))
        })
        .collect())
}
