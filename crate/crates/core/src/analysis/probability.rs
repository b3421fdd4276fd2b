//! Annulus-hit probability, the high-probability bound and Wilson intervals.

use crate::error::{Result, SnlError};
use crate::model::Rect;
use crate::seeded_rng;

pub const DEFAULT_EPSILON: f64 = 0.5;

/// Position grid resolution (per axis) for the 2-D minimization.
const POSITION_GRID: usize = 200;
/// Fallback for d ≠ 2 when the closed form does not apply.
const MC_POSITION_GRID: usize = 12;
const MC_SAMPLES: usize = 100_000;

/// `p_r = min_{x ∈ U} P(‖s′ − x‖ ∈ [εr, r])` for `s′` uniform on the box.
///
/// When `r` is at most half the shortest side, every point has a full
/// orthant of the shell `[εr, r]` inside the box and the minimum sits at a
/// corner, which gives the closed form `V_d(r)(1 − ε^d) / (2^d vol)`. For
/// larger `r` (up to the shortest side) the minimum is searched on a
/// position grid, using exact disc/rectangle areas in 2-D.
pub fn p_r_for_rectangle(region: &Rect, r: f64, epsilon: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(SnlError::InvalidParameter(format!("radius {r} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(SnlError::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1]")));
    }
    let min_side = region.min_side();
    if r > min_side {
        return Err(SnlError::RadiusTooLarge { r, min_side });
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let d = region.dim();
    if r <= 0.5 * min_side {
        let shell = unit_ball_volume(d) * r.powi(d as i32) * (1.0 - epsilon.powi(d as i32));
        return Ok(shell / 2f64.powi(d as i32) / region.volume());
    }
    if d == 2 {
        Ok(grid_minimum_2d(region, r, epsilon))
    } else {
        Ok(grid_minimum_mc(region, r, epsilon))
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

fn grid_minimum_2d(region: &Rect, r: f64, epsilon: f64) -> f64 {
    let (lo, hi) = (region.lo(), region.hi());
    let area = region.volume();
    let at = |k: usize, axis: usize| lo[axis] + (hi[axis] - lo[axis]) * k as f64 / (POSITION_GRID - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..POSITION_GRID {
        for j in 0..POSITION_GRID {
            let (cx, cy) = (at(i, 0), at(j, 1));
            let outer = disc_rect_area(cx, cy, r, lo, hi);
            let inner = disc_rect_area(cx, cy, epsilon * r, lo, hi);
            best = best.min((outer - inner) / area);
        }
    }
    best
}

fn grid_minimum_mc(region: &Rect, r: f64, epsilon: f64) -> f64 {
    let d = region.dim();
    let mut rng = seeded_rng(0x5eed, 0);
    let draws: Vec<Vec<f64>> = (0..MC_SAMPLES).map(|_| region.sample(&mut rng)).collect();
    let mut best = f64::INFINITY;
    let total = MC_POSITION_GRID.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        let x: Vec<f64> = (0..d)
            .map(|axis| {
                let k = rem % MC_POSITION_GRID;
                rem /= MC_POSITION_GRID;
                region.lo()[axis] + (region.hi()[axis] - region.lo()[axis]) * k as f64 / (MC_POSITION_GRID - 1) as f64
            })
            .collect();
        let hits = draws
            .iter()
            .filter(|s| {
                let dist = crate::model::distance(s, &x);
                dist >= epsilon * r && dist <= r
            })
            .count();
        best = best.min(hits as f64 / MC_SAMPLES as f64);
    }
    best
}

/// Exact area of the disc `‖(x, y) − c‖ ≤ radius` intersected with the box.
pub fn disc_rect_area(cx: f64, cy: f64, radius: f64, lo: &[f64], hi: &[f64]) -> f64 {
    // Work relative to the centre.
    let (x0, x1) = ((lo[0] - cx).max(-radius), (hi[0] - cx).min(radius));
    let (y0, y1) = (lo[1] - cy, hi[1] - cy);
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    let half = |x: f64| (radius * radius - x * x).max(0.0).sqrt();
    // Antiderivative of half(x).
    let prim = |x: f64| 0.5 * (x * half(x) + radius * radius * (x / radius).clamp(-1.0, 1.0).asin());

    let mut cuts = vec![x0, x1];
    for y in [y0, y1] {
        if y.abs() < radius {
            let c = half(y);
            cuts.extend([-c, c]);
        }
    }
    cuts.retain(|&c| c >= x0 && c <= x1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let hm = half(m);
        let upper_is_circle = hm < y1;
        let lower_is_circle = -hm > y0;
        let top = if upper_is_circle { hm } else { y1 };
        let bottom = if lower_is_circle { -hm } else { y0 };
        if top <= bottom {
            continue;
        }
        let hint = prim(b) - prim(a);
        let len = b - a;
        area += match (upper_is_circle, lower_is_circle) {
            (true, true) => 2.0 * hint,
            (true, false) => hint - y0 * len,
            (false, true) => y1 * len + hint,
            (false, false) => (y1 - y0) * len,
        };
    }
    area
}

/// `1 − n·v·C(n−1, v−1)·(1 − p_r)^{n−v}` with `v = ⌊√n⌋`, evaluated in log
/// space. Returned raw: it is negative (vacuous) for small `n`.
pub fn theoretical_bound(n: usize, p_r: f64) -> f64 {
    assert!(n >= 1, "bound needs at least one sensor");
    let v = n.isqrt();
    let ln_binom: f64 = (0..v - 1).map(|k| ((n - 1 - k) as f64 / (k + 1) as f64).ln()).sum();
    let ln_tail = if n == v { 0.0 } else { (n - v) as f64 * (-p_r).ln_1p() };
    let ln_term = (n as f64).ln() + (v as f64).ln() + ln_binom + ln_tail;
    1.0 - ln_term.exp()
}

/// Whether `(n − 1)·p_r ≥ ⌊√n⌋ − 1`, the monotonicity requirement the bound
/// relies on.
pub fn lemma_gate(n: usize, p_r: f64) -> bool {
    (n as f64 - 1.0) * p_r >= n.isqrt() as f64 - 1.0
}

/// Two-sided 95% Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
