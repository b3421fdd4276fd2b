//! Loss evaluated on a 2-D grid while one sensor moves.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::loss::{self, LossSpec, SensorConfig};
use crate::model::{Rect, SnlProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[iy][ix]` is the loss with the sensor at `(xs[ix], ys[iy])`.
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy][ix]
    }

    pub fn cell_size(&self) -> (f64, f64) {
        let step = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 0.0 };
        (step(&self.xs), step(&self.ys))
    }

    /// Grid points no larger than any of their (up to eight) neighbours and
    /// strictly smaller than at least one, as `(x, y, loss)`.
    ///
    /// Plateaus of equal values therefore all count as minima.
    pub fn local_minima(&self) -> Vec<(f64, f64, f64)> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut out = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let v = self.value(ix, iy);
                let mut is_min = true;
                let mut strict = false;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                        if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                            continue;
                        }
                        let w = self.value(jx as usize, jy as usize);
                        if w < v {
                            is_min = false;
                        } else if w > v {
                            strict = true;
                        }
                    }
                }
                if is_min && strict {
                    out.push((self.xs[ix], self.ys[iy], v));
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,loss\n");
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{}", self.value(ix, iy));
            }
        }
        out
    }
}

/// Sweeps `sensor_index` over `region` at `resolution = (nx, ny)` points,
/// holding the other sensors at `fixed_others`.
pub fn landscape_grid(
    p: &SnlProblem,
    spec: &LossSpec,
    sensor_index: usize,
    region: &Rect,
    resolution: (usize, usize),
    fixed_others: &SensorConfig,
) -> Result<LandscapeGrid> {
    if p.dim() != 2 || region.dim() != 2 || spec.ambient_dim != 2 {
        return Err(SnlError::InvalidParameter("landscapes are only defined for 2-D problems".into()));
    }
    if sensor_index >= p.n_sensors() {
        return Err(SnlError::InvalidParameter(format!("sensor {sensor_index} out of range")));
    }
    if fixed_others.dim() != 2 || fixed_others.n_sensors() != p.n_sensors() {
        return Err(SnlError::DimensionMismatch { expected: 2 * p.n_sensors(), found: fixed_others.coords().len() });
    }
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(SnlError::InvalidParameter("grid needs at least two points per axis".into()));
    }
    let axis = |k: usize, n: usize| {
        (0..n).map(|i| region.lo()[k] + (region.hi()[k] - region.lo()[k]) * i as f64 / (n - 1) as f64).collect::<Vec<_>>()
    };
    let xs = axis(0, nx);
    let ys = axis(1, ny);
    let values = ys
        .par_iter()
        .map(|&y| {
            let mut x = fixed_others.clone();
            xs.iter()
                .map(|&xv| {
                    x.coords_mut()[2 * sensor_index] = xv;
                    x.coords_mut()[2 * sensor_index + 1] = y;
                    loss::loss_unchecked(p, spec, &x)
                })
                .collect()
        })
        .collect();
    Ok(LandscapeGrid { xs, ys, values })
}
