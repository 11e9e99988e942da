//! The experiment commands.

use std::time::Instant;

use polyfix::dynamics::{
    audit_period, find_orbit, krasnoselskii, lcm_of_observed_periods, OrbitOptions,
};
use polyfix::maps::{certify_nonexpansive, LipschitzCertificate, SamplingDomain};
use polyfix::sampling::{box_points, derive_seed};
use polyfix::structure::oracle::ORACLE_MAX_DIM;
use polyfix::structure::{analyze, oracle_for, StructureOptions};
use polyfix::{Error, NormKind};
use rayon::prelude::*;

use crate::config::{Command, Experiment};
use crate::report::{
    exit, FixReport, FixedPointEntry, OracleComparison, OrbitEntry, OrbitFailure, OrbitReport,
    Outcome, RunReport, StructureReport, VerdictSummary, REPORT_SCHEMA_VERSION,
};

/// Seed tags for the independent random streams of a run.
mod tags {
    pub const CERTIFY: u64 = 101;
    pub const FIX: u64 = 102;
    pub const ORBIT: u64 = 103;
    pub const STRUCTURE: u64 = 104;
}

/// Grid resolution of the oracle's witness pool, by dimension.
fn oracle_per_axis(n: usize) -> usize {
    match n {
        1 | 2 => 9,
        3 => 7,
        _ => 5,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Compare the structure run with the brute-force face oracle.
    pub oracle: bool,
}

pub fn certify(exp: &Experiment) -> polyfix::Result<LipschitzCertificate> {
    let c = &exp.config;
    let domain = SamplingDomain {
        radius: c.sampling.radius,
        centers: vec![exp.center()],
    };
    certify_nonexpansive(
        &exp.map,
        &exp.norm,
        c.sampling.certify_trials,
        derive_seed(c.seed, tags::CERTIFY),
        &domain,
    )
}

pub fn fix(exp: &Experiment) -> polyfix::Result<FixReport> {
    let c = &exp.config;
    let starts = box_points(
        &exp.center(),
        c.sampling.radius,
        c.starts,
        derive_seed(c.seed, tags::FIX),
    );
    let entries = starts
        .par_iter()
        .map(|x| {
            krasnoselskii(&exp.map, x, &exp.norm, c.tolerances.fp_tol, c.caps.max_iter)
                .map(|r| FixedPointEntry::new(x, &r))
        })
        .collect::<polyfix::Result<Vec<_>>>()?;
    let converged = entries
        .iter()
        .filter(|e| e.status == polyfix::dynamics::Status::Converged)
        .count();
    Ok(FixReport {
        converged,
        not_converged: entries.len() - converged,
        entries,
    })
}

pub fn orbit(exp: &Experiment) -> polyfix::Result<OrbitReport> {
    let c = &exp.config;
    let opts = OrbitOptions {
        orbit_tol: c.tolerances.orbit_tol,
        fp_tol: c.tolerances.fp_tol,
        max_iter: c.caps.max_iter,
        p_max: exp.p_max(),
    };
    let starts = box_points(
        &exp.center(),
        c.sampling.radius,
        c.starts,
        derive_seed(c.seed, tags::ORBIT),
    );
    let results: Vec<_> = starts
        .par_iter()
        .map(|x| find_orbit(&exp.map, x, &exp.norm, &opts))
        .collect();
    let mut found = Vec::new();
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (x, r) in starts.iter().zip(results) {
        match r {
            Ok(o) => {
                orbits.push(OrbitEntry::new(x, &o));
                found.push(o);
            }
            Err(e) => failures.push(OrbitFailure {
                start: crate::report::vec_of(x),
                error: e.to_string(),
            }),
        }
    }
    let q = lcm_of_observed_periods(&found);
    let observed: Vec<u64> = found.iter().map(|o| o.minimal_period as u64).collect();
    let audit = q
        .map(|q| audit_period(q, exp.dim(), exp.norm.kind(), &observed))
        .transpose()?;
    Ok(OrbitReport {
        p_max: opts.p_max,
        orbits,
        failures,
        q,
        audit,
    })
}

pub fn structure_options(exp: &Experiment) -> StructureOptions {
    let c = &exp.config;
    let mut o = StructureOptions::new(c.starts, derive_seed(c.seed, tags::STRUCTURE));
    o.power = c.power;
    o.center = c.sampling.center.as_ref().map(|_| exp.center());
    o.radius = c.sampling.radius;
    o.fp_tol = c.tolerances.fp_tol;
    o.face_tol = c.tolerances.face_tol;
    o.check_tol = c.tolerances.check_tol;
    o.max_iter = c.caps.max_iter;
    o.fd_step = c.fd_step;
    o.retry_budget = c.caps.retry_budget;
    o.samples = c.sampling.audit_samples;
    o
}

/// Structure run; the error carries the exit code and message when the
/// pipeline stops early.
pub fn structure(exp: &Experiment, run: RunOptions) -> Result<StructureReport, (i32, String)> {
    let opts = structure_options(exp);
    let analysis = analyze(&exp.map, &exp.norm, &opts).map_err(|e| match e {
        Error::NotConverged { .. } => (
            exit::PRECONDITION,
            format!("structure: no fixed point found ({e}); Fix may be empty"),
        ),
        Error::ContainmentViolation { .. } | Error::NoDifferentiablePoint { .. } => {
            (exit::ALARM, format!("structure: {e}"))
        }
        e => (exit::CONFIG, format!("structure: {e}")),
    })?;
    let mut report = StructureReport::new(&analysis, exp.config.tolerances.check_tol);
    let oracle_applies =
        matches!(exp.norm.kind(), NormKind::Linf | NormKind::L1) && exp.dim() <= ORACLE_MAX_DIM;
    if run.oracle && oracle_applies {
        let per_axis = oracle_per_axis(exp.dim());
        let radius = exp.config.sampling.radius;
        report.oracle = Some(
            match oracle_for(&exp.map, &exp.norm, &analysis, radius, per_axis, &opts) {
                Ok(result) => {
                    let agrees = result.minimal == report.minimal_faces();
                    Outcome::Ok(OracleComparison { result, agrees })
                }
                Err(e) => Outcome::Error(e.to_string()),
            },
        );
    }
    Ok(report)
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Certify => "certify",
        Command::Fix => "fix",
        Command::Orbit => "orbit",
        Command::Structure => "structure",
    }
}

/// Runs `commands` in order. Every command after `certify` needs a passing
/// certificate, so a failed certificate stops the run.
pub fn run_experiment(exp: &Experiment, commands: &[Command], run: RunOptions) -> RunReport {
    let started = Instant::now();
    let mut commands = commands.to_vec();
    commands.sort();
    commands.dedup();
    let mut report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        commands: commands
            .iter()
            .map(|c| command_name(*c).to_string())
            .collect(),
        config: exp.config.clone(),
        map: exp.map.variant_name(),
        certificate: None,
        fixed_points: None,
        orbits: None,
        structure: None,
        verdict: VerdictSummary::default(),
        wall_clock_seconds: 0.0,
    };
    let v = &mut report.verdict;

    match certify(exp) {
        Ok(cert) => {
            if !cert.passed() {
                v.record(
                    exit::CERTIFICATE_FAIL,
                    format!("certificate FAIL: Lipschitz bound {}", cert.bound),
                );
            }
            report.certificate = Some(cert);
        }
        Err(e) => v.record(exit::CONFIG, format!("certify: {e}")),
    }
    if v.exit_code != exit::OK {
        report.wall_clock_seconds = started.elapsed().as_secs_f64();
        return report;
    }

    for c in &commands {
        match c {
            Command::Certify => {}
            Command::Fix => match fix(exp) {
                Ok(r) => {
                    if r.converged == 0 {
                        v.record(
                            exit::PRECONDITION,
                            "fix: no start converged; Fix may be empty",
                        );
                    }
                    report.fixed_points = Some(r);
                }
                Err(e) => v.record(exit::CONFIG, format!("fix: {e}")),
            },
            Command::Orbit => match orbit(exp) {
                Ok(r) => {
                    match &r.audit {
                        None => v.record(
                            exit::PRECONDITION,
                            "orbit: no periodic orbit found from any start",
                        ),
                        Some(a) if a.alarm() => v.record(
                            exit::ALARM,
                            format!(
                                "orbit: period audit failed for q = {}: {:?}",
                                a.q, a.verdicts
                            ),
                        ),
                        Some(_) => {}
                    }
                    report.orbits = Some(r);
                }
                Err(e) => v.record(exit::CONFIG, format!("orbit: {e}")),
            },
            Command::Structure => match structure(exp, run) {
                Ok(s) => {
                    for a in &s.alarms {
                        v.record(exit::ALARM, format!("structure: {a}"));
                    }
                    match &s.oracle {
                        Some(Outcome::Ok(o)) if !o.agrees => v.record(
                            exit::ALARM,
                            "structure: minimal faces differ from the face oracle",
                        ),
                        Some(Outcome::Error(e)) => {
                            v.record(exit::ALARM, format!("structure: oracle failed: {e}"))
                        }
                        _ => {}
                    }
                    report.structure = Some(s);
                }
                Err((code, msg)) => v.record(code, msg),
            },
        }
    }
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    report
}
