//! A curve of constant edge lengths joining two solutions in twice the dimension.

use std::f64::consts::PI;

use crate::error::{Result, SnlError};
use crate::loss::SensorConfig;
use crate::model::SnlProblem;

/// Solutions must reproduce every edge length to within this.
pub const SOLUTION_TOLERANCE: f64 = 1e-9;

/// `p_i(t) = ((p_i + q_i)/2 + cos(πt)(p_i − q_i)/2, sin(πt)(p_i − q_i)/2)`.
pub fn lift_path(p: &SensorConfig, q: &SensorConfig, t: f64) -> Result<SensorConfig> {
    if p.dim() != q.dim() {
        return Err(SnlError::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    if p.n_sensors() != q.n_sensors() {
        return Err(SnlError::DimensionMismatch { expected: p.n_sensors(), found: q.n_sensors() });
    }
    let d = p.dim();
    let (c, s) = if t == 0.0 {
        (1.0, 0.0)
    } else if t == 1.0 {
        (-1.0, 0.0)
    } else {
        ((PI * t).cos(), (PI * t).sin())
    };
    let mut coords = Vec::with_capacity(2 * d * p.n_sensors());
    for i in 0..p.n_sensors() {
        let (pi, qi) = (p.point(i), q.point(i));
        coords.extend(pi.iter().zip(qi).map(|(a, b)| 0.5 * (a + b) + c * 0.5 * (a - b)));
        coords.extend(pi.iter().zip(qi).map(|(a, b)| s * 0.5 * (a - b)));
    }
    SensorConfig::new(2 * d, coords)
}

/// Largest edge-length error along `samples` evenly spaced points of the
/// path, with anchors zero-padded to `2d`.
pub fn verify_path_isometry(problem: &SnlProblem, p: &SensorConfig, q: &SensorConfig, samples: usize) -> Result<f64> {
    for (which, cfg) in [("p", p), ("q", q)] {
        if cfg.dim() != problem.dim() {
            return Err(SnlError::DimensionMismatch { expected: problem.dim(), found: cfg.dim() });
        }
        if cfg.n_sensors() != problem.n_sensors() {
            return Err(SnlError::DimensionMismatch { expected: problem.n_sensors(), found: cfg.n_sensors() });
        }
        let deviation = problem.max_edge_deviation(&cfg.points());
        if deviation > SOLUTION_TOLERANCE {
            return Err(SnlError::NotASolution { which, deviation });
        }
    }
    if samples < 2 {
        return Err(SnlError::InvalidParameter("need at least two path samples".into()));
    }
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let x = lift_path(p, q, t)?;
        worst = worst.max(problem.max_edge_deviation(&x.points()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_trilateration, Rect};
    use proptest::prelude::*;

    fn mirror_pair() -> (SnlProblem, SensorConfig, SensorConfig) {
        // Anchors on the x-axis; reflecting the sensors across it keeps every distance.
        let anchors = vec![vec![0.0, 0.0], vec![3.0, 0.0]];
        let s = vec![vec![1.0, 2.0], vec![2.5, 1.5]];
        let m: Vec<Vec<f64>> = s.iter().map(|p| vec![p[0], -p[1]]).collect();
        let fw = crate::model::framework_by_radius(2, anchors, s.clone(), 10.0).unwrap();
        (fw.problem(), SensorConfig::from_points(&s).unwrap(), SensorConfig::from_points(&m).unwrap())
    }

    #[test]
    fn endpoints_and_midpoint() {
        let p = SensorConfig::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = SensorConfig::new(2, vec![-1.0, 0.5, 2.0, 2.0]).unwrap();
        assert_eq!(lift_path(&p, &q, 0.0).unwrap(), p.padded(4));
        assert_eq!(lift_path(&p, &q, 1.0).unwrap(), q.padded(4));
        let mid = lift_path(&p, &q, 0.5).unwrap();
        assert!((mid.point(0)[0] - 0.0).abs() < 1e-15);
        assert!((mid.point(0)[1] - 1.25).abs() < 1e-15);
        assert!((mid.point(0)[2] - 1.0).abs() < 1e-15);
        assert!((mid.point(0)[3] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mirror_pair_is_isometric() {
        let (prob, s, m) = mirror_pair();
        assert!(verify_path_isometry(&prob, &s, &m, 101).unwrap() <= 1e-10);
    }

    #[test]
    fn fixed_point_path() {
        let (prob, s, _) = mirror_pair();
        assert_eq!(verify_path_isometry(&prob, &s, &s, 11).unwrap(), 0.0);
        let fw = gen_trilateration(2, 6, &Rect::cube(2, 1.0).unwrap(), 4).unwrap();
        let truth = SensorConfig::from_points(fw.sensors()).unwrap();
        assert!(verify_path_isometry(&fw.problem(), &truth, &truth, 11).unwrap() < 1e-12);
    }

    #[test]
    fn non_solution_is_rejected() {
        let (prob, s, _) = mirror_pair();
        let bad = s.scaled(1.1);
        assert!(matches!(
            verify_path_isometry(&prob, &s, &bad, 11),
            Err(SnlError::NotASolution { which: "q", .. })
        ));
    }

    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    proptest! {
        #[test]
        fn equal_lengths_stay_constant(
            p0 in prop::array::uniform2(-3.0f64..3.0),
            q0 in prop::array::uniform2(-3.0f64..3.0),
            angle in 0.0f64..std::f64::consts::TAU,
            t in 0.0f64..1.0,
        ) {
            // q is p rotated about the origin (an anchor): both the sensor pair
            // distance and the anchor distances are preserved.
            let (c, s) = (angle.cos(), angle.sin());
            let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let p = SensorConfig::new(2, [p0, q0].concat()).unwrap();
            let q = SensorConfig::new(2, [rot(p0), rot(q0)].concat()).unwrap();
            let x0 = lift_path(&p, &q, 0.0).unwrap();
            let xt = lift_path(&p, &q, t).unwrap();
            let ss0 = sq_dist(x0.point(0), x0.point(1)).sqrt();
            let sst = sq_dist(xt.point(0), xt.point(1)).sqrt();
            prop_assert!((ss0 - sst).abs() <= 1e-12 * (1.0 + ss0));
            let origin = [0.0; 4];
            for i in 0..2 {
                let a0 = sq_dist(&origin, x0.point(i)).sqrt();
                let at = sq_dist(&origin, xt.point(i)).sqrt();
                prop_assert!((a0 - at).abs() <= 1e-12 * (1.0 + a0));
            }
        }
    }
}
