//! JSON run reports. Vectors and matrices are stored as plain arrays
//! (matrices row by row) so every verdict can be recomputed from the file.

use polyfix::dynamics::{BoundAudit, FixedPointResult, Orbit, Status};
use polyfix::maps::LipschitzCertificate;
use polyfix::numerics::matrix_rows;
use polyfix::structure::{
    DiscoveryCoverage, FaceTranslationCheck, IsometryCheck, LockedSet, OracleResult,
    ProjectionCheck, SeparationCheck, StructureAnalysis, ValueCheck,
};
use polyfix::{DualFace, Matrix, Subspace, Vector};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const CERTIFICATE_FAIL: i32 = 2;
    pub const ALARM: i32 = 3;
    pub const PRECONDITION: i32 = 4;

    /// Most severe of two codes: config errors first, then certification,
    /// alarms, and unmet preconditions.
    pub fn worst(a: i32, b: i32) -> i32 {
        match (a, b) {
            (0, x) | (x, 0) => x,
            (x, y) => x.min(y),
        }
    }
}

pub fn vec_of(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    matrix_rows(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceReport {
    pub dim: usize,
    /// Orthonormal basis vectors.
    pub basis: Vec<Vec<f64>>,
}

impl From<&Subspace> for SubspaceReport {
    fn from(s: &Subspace) -> Self {
        Self {
            dim: s.dim(),
            basis: s.basis_vectors().iter().map(vec_of).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointEntry {
    pub start: Vec<f64>,
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub status: Status,
    /// The residual never increased along the iteration.
    pub residual_monotone: bool,
}

impl FixedPointEntry {
    pub fn new(start: &Vector, r: &FixedPointResult) -> Self {
        Self {
            start: vec_of(start),
            point: vec_of(&r.point),
            iterations: r.iterations,
            residual: r.residual,
            status: r.status,
            residual_monotone: r.residual_history.windows(2).all(|w| w[1] <= w[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixReport {
    pub converged: usize,
    pub not_converged: usize,
    pub entries: Vec<FixedPointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitEntry {
    pub start: Vec<f64>,
    pub minimal_period: usize,
    pub candidate_p: usize,
    pub detection_iterations: usize,
    pub points: Vec<Vec<f64>>,
}

impl OrbitEntry {
    pub fn new(start: &Vector, o: &Orbit) -> Self {
        Self {
            start: vec_of(start),
            minimal_period: o.minimal_period,
            candidate_p: o.candidate_p,
            detection_iterations: o.detection_iterations,
            points: o.points.iter().map(vec_of).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitFailure {
    pub start: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub p_max: usize,
    pub orbits: Vec<OrbitEntry>,
    pub failures: Vec<OrbitFailure>,
    /// `lcm` of the observed minimal periods.
    pub q: Option<u64>,
    pub audit: Option<BoundAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockedSetReport {
    pub face: DualFace,
    pub witness_v: Vec<f64>,
    pub witness_w: Vec<f64>,
}

impl From<&LockedSet> for LockedSetReport {
    fn from(l: &LockedSet) -> Self {
        Self {
            face: l.face.clone(),
            witness_v: vec_of(&l.witness_v),
            witness_w: vec_of(&l.witness_w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    #[serde(flatten)]
    pub coverage: DiscoveryCoverage,
    /// The minimal faces and `V` come from sampled fixed points; faces that no
    /// sample reached are missing, so `V` may be too large.
    pub upper_approximation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub u: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub a2_defect: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormProjectionReport {
    pub classes: Vec<Vec<usize>>,
    pub matrix: Vec<Vec<f64>>,
    pub idempotence_defect: f64,
    pub opnorm: f64,
    pub identity_on_v_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    pub in_basis: Vec<Vec<f64>>,
    pub ambient: Vec<Vec<f64>>,
    pub order: Option<usize>,
    pub superposition_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub matrix: Vec<Vec<f64>>,
    pub opnorm: f64,
    pub agreement_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    #[serde(flatten)]
    pub result: OracleResult,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub power: usize,
    /// Fixed point of `f` used as origin; faces, witnesses, `V`, `W` and the
    /// matrices below are relative to it.
    pub basepoint: Vec<f64>,
    pub fixed_points: Vec<Vec<f64>>,
    pub not_converged: usize,
    pub locked: Vec<LockedSetReport>,
    pub minimal: Vec<LockedSetReport>,
    pub coverage: CoverageReport,
    pub v: SubspaceReport,
    pub derivative: DerivativeReport,
    pub w: SubspaceReport,
    pub projection_check: ProjectionCheck,
    pub isometry_check: IsometryCheck,
    pub value_check: ValueCheck,
    pub value_defect: f64,
    pub separation: SeparationCheck,
    pub face_translation: FaceTranslationCheck,
    pub norm_projection: Option<Outcome<NormProjectionReport>>,
    pub linearization: Outcome<LinearizationReport>,
    pub extension: Option<ExtensionReport>,
    pub oracle: Option<Outcome<OracleComparison>>,
    pub alarms: Vec<String>,
}

impl StructureReport {
    pub fn new(s: &StructureAnalysis, check_tol: f64) -> Self {
        let norm_projection = s.norm_projection.as_ref().map(|p| match p {
            Ok(p) => Outcome::Ok(NormProjectionReport {
                classes: p.classes.clone(),
                matrix: rows_of(&p.matrix),
                idempotence_defect: p.idempotence_defect,
                opnorm: p.opnorm,
                identity_on_v_defect: p.identity_on_v_defect,
            }),
            Err(e) => Outcome::Error(e.to_string()),
        });
        let linearization = match &s.linearization {
            Ok(l) => Outcome::Ok(LinearizationReport {
                in_basis: rows_of(&l.in_basis),
                ambient: rows_of(&l.ambient),
                order: l.order,
                superposition_residual: l.superposition_residual,
            }),
            Err(e) => Outcome::Error(e.to_string()),
        };
        Self {
            power: s.power,
            basepoint: vec_of(&s.basepoint),
            fixed_points: s.fixed_points.iter().map(vec_of).collect(),
            not_converged: s.not_converged,
            locked: s.locked.iter().map(Into::into).collect(),
            minimal: s.minimal.iter().map(Into::into).collect(),
            coverage: CoverageReport {
                coverage: s.coverage.clone(),
                upper_approximation: true,
            },
            v: (&s.v).into(),
            derivative: DerivativeReport {
                u: vec_of(&s.derivative.u),
                a: rows_of(&s.derivative.a),
                a2_defect: s.derivative.a2_defect,
                attempts: s.derivative.attempts,
            },
            w: (&s.w).into(),
            projection_check: s.projection_check,
            isometry_check: s.isometry_check,
            value_check: s.value_check,
            value_defect: s.value_check.max_defect(),
            separation: s.separation,
            face_translation: s.face_translation,
            norm_projection,
            linearization,
            extension: s.extension.as_ref().map(|e| ExtensionReport {
                matrix: rows_of(&e.matrix),
                opnorm: e.opnorm,
                agreement_defect: e.agreement_defect,
            }),
            oracle: None,
            alarms: s.alarms(check_tol),
        }
    }

    pub fn minimal_faces(&self) -> Vec<DualFace> {
        self.minimal.iter().map(|m| m.face.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    ConfigError,
    CertificateFail,
    Alarm,
    PreconditionUnmet,
}

impl RunStatus {
    pub fn from_code(code: i32) -> Self {
        match code {
            exit::OK => Self::Ok,
            exit::CONFIG => Self::ConfigError,
            exit::CERTIFICATE_FAIL => Self::CertificateFail,
            exit::ALARM => Self::Alarm,
            _ => Self::PreconditionUnmet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub status: RunStatus,
    pub exit_code: i32,
    pub messages: Vec<String>,
}

impl Default for VerdictSummary {
    fn default() -> Self {
        Self {
            status: RunStatus::Ok,
            exit_code: exit::OK,
            messages: Vec::new(),
        }
    }
}

impl VerdictSummary {
    pub fn record(&mut self, code: i32, message: impl Into<String>) {
        self.exit_code = exit::worst(self.exit_code, code);
        self.status = RunStatus::from_code(self.exit_code);
        self.messages.push(message.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub commands: Vec<String>,
    pub config: ExperimentConfig,
    pub map: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<LipschitzCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_points: Option<FixReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<OrbitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureReport>,
    pub verdict: VerdictSummary,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Report JSON with the timing field removed, for reproducibility checks.
pub fn without_timing(mut value: serde_json::Value) -> serde_json::Value {
    match &mut value {
        serde_json::Value::Object(map) => {
            map.remove("wall_clock_seconds");
            for v in map.values_mut() {
                *v = without_timing(v.take());
            }
        }
        serde_json::Value::Array(items) => {
            for v in items.iter_mut() {
                *v = without_timing(v.take());
            }
        }
        _ => {}
    }
    value
}
