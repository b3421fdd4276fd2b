//! Certificates of non-convexity.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::loss::{self, LossSpec, SensorConfig};
use crate::model::{Framework, Rect, SnlProblem};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    /// `2 Σ_{N_x} d_ij^{bc}  >  Σ_{N_a} |‖a_i + s_j‖^b − d̃_ij^b|^c`.
    SufficientCondition,
    /// `2·loss(mid) > loss(x0) + loss(x1)`.
    MidpointViolation,
    /// `loss(x_t) > (1 − t)·loss(x0) + t·loss(x1)`.
    SegmentViolation,
}

/// Points whose losses break the convexity inequality at `x0 + t(x1 − x0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x0: SensorConfig,
    pub x1: SensorConfig,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub lhs: f64,
    pub rhs: f64,
    pub witness: Option<Witness>,
    /// Result of re-checking the witness directly with the loss; `None`
    /// when there is no witness.
    pub witness_verified: Option<bool>,
}

impl Certificate {
    pub fn is_valid(&self) -> bool {
        self.lhs > self.rhs
    }
}

/// Evaluates the three-point condition at `s`, `0` and `−s` where `s` are
/// the framework's true sensor positions, in `spec.ambient_dim` dimensions.
///
/// Along `−s` every sensor–sensor term vanishes while at `0` each costs
/// `d_ij^{bc}`; the anchor terms at `0` only help, so dropping them gives a
/// condition depending on `s` alone.
pub fn check_sufficient_condition(fw: &Framework, spec: &LossSpec) -> Result<Certificate> {
    if spec.ambient_dim < fw.dim() {
        return Err(SnlError::DimensionMismatch { expected: fw.dim(), found: spec.ambient_dim });
    }
    let p = fw.problem();
    let lhs = 2.0 * p.edges_ss().iter().map(|e| spec.term(0.0, e.dist)).sum::<f64>();
    let rhs: f64 = p
        .edges_as()
        .iter()
        .map(|e| {
            let a = &p.anchors()[e.anchor];
            let s = &fw.sensors()[e.sensor];
            let sq: f64 = a.iter().zip(s).map(|(x, y)| (x + y) * (x + y)).sum();
            spec.term(sq, e.dist)
        })
        .sum();

    let mut cert = Certificate { kind: CertificateKind::SufficientCondition, lhs, rhs, witness: None, witness_verified: None };
    if cert.is_valid() {
        let s = SensorConfig::from_points(fw.sensors())?.padded(spec.ambient_dim);
        let witness = Witness { x1: s.scaled(-1.0), x0: s, t: 0.5 };
        cert.witness_verified = Some(witness_breaks_convexity(&p, spec, &witness)?);
        cert.witness = Some(witness);
    }
    Ok(cert)
}

/// The same condition for the directly augmented loss in dimension `n + d`.
pub fn augmented_nonconvexity(fw: &Framework, spec: &LossSpec) -> Result<Certificate> {
    let aug = fw.dim() + fw.topology().n_sensors();
    check_sufficient_condition(fw, &spec.with_ambient_dim(aug))
}

fn witness_breaks_convexity(p: &SnlProblem, spec: &LossSpec, w: &Witness) -> Result<bool> {
    let l0 = loss::loss_eval(p, spec, &w.x0)?;
    let l1 = loss::loss_eval(p, spec, &w.x1)?;
    let lt = loss::loss_eval(p, spec, &w.x0.lerp(&w.x1, w.t))?;
    Ok(lt > (1.0 - w.t) * l0 + w.t * l1)
}

/// Direct midpoint test for a given pair of points.
pub fn midpoint_certificate(p: &SnlProblem, spec: &LossSpec, x0: &SensorConfig, x1: &SensorConfig) -> Result<Certificate> {
    let l0 = loss::loss_eval(p, spec, x0)?;
    let l1 = loss::loss_eval(p, spec, x1)?;
    let mid = loss::loss_eval(p, spec, &x0.lerp(x1, 0.5))?;
    let mut cert = Certificate {
        kind: CertificateKind::MidpointViolation,
        lhs: 2.0 * mid,
        rhs: l0 + l1,
        witness: Some(Witness { x0: x0.clone(), x1: x1.clone(), t: 0.5 }),
        witness_verified: None,
    };
    cert.witness_verified = Some(cert.is_valid());
    Ok(cert)
}

/// Violations smaller than this are treated as rounding noise.
pub const SCAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScanOutcome {
    Violation(Certificate),
    ConvexSoFar { segments: usize },
}

/// Looks for a convexity violation along random segments of `bx`.
///
/// Each segment is probed at `samples_per_segment` interior points
/// `t = k / (samples + 1)`. `bx` follows [`SensorConfig::sample_in`].
pub fn segment_convexity_scan(
    p: &SnlProblem,
    spec: &LossSpec,
    bx: &Rect,
    n_segments: usize,
    samples_per_segment: usize,
    seed: u64,
) -> Result<ScanOutcome> {
    if n_segments == 0 || samples_per_segment == 0 {
        return Err(SnlError::InvalidParameter("segment and sample counts must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed, 0);
    let dim = spec.ambient_dim;
    for _ in 0..n_segments {
        let x0 = SensorConfig::sample_in(bx, dim, p.n_sensors(), &mut rng)?;
        let x1 = SensorConfig::sample_in(bx, dim, p.n_sensors(), &mut rng)?;
        let l0 = loss::loss_eval(p, spec, &x0)?;
        let l1 = loss::loss_eval(p, spec, &x1)?;
        for k in 1..=samples_per_segment {
            let t = k as f64 / (samples_per_segment + 1) as f64;
            let lt = loss::loss_unchecked(p, spec, &x0.lerp(&x1, t));
            let (kind, lhs, rhs) = if t == 0.5 {
                (CertificateKind::MidpointViolation, 2.0 * lt, l0 + l1)
            } else {
                (CertificateKind::SegmentViolation, lt, (1.0 - t) * l0 + t * l1)
            };
            if lhs > rhs + SCAN_TOLERANCE {
                return Ok(ScanOutcome::Violation(Certificate {
                    kind,
                    lhs,
                    rhs,
                    witness: Some(Witness { x0, x1, t }),
                    witness_verified: Some(true),
                }));
            }
        }
    }
    Ok(ScanOutcome::ConvexSoFar { segments: n_segments })
}
