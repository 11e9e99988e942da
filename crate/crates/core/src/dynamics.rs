//! Fixed points by averaged iteration, the retract onto the fixed-point set,
//! periodic-orbit detection and the audit of observed periods.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Iterated, SelfMap};
use crate::numerics::{
    best_known_period_bound, lcm, min_letters_for_order, partitions_lcm_set, pow2, Vector,
    MAX_PARTITION_N,
};
use crate::polynorm::{NormKind, PolyhedralNorm};

pub const DEFAULT_FP_TOL: f64 = 1e-10;
pub const DEFAULT_ORBIT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Upper cap applied to the default period search range.
pub const DEFAULT_P_CAP: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub point: Vector,
    pub iterations: usize,
    /// `|f(point) - point|` in the ambient norm.
    pub residual: f64,
    pub status: Status,
    /// Residual before each step, ending with the residual of `point`.
    pub residual_history: Vec<f64>,
}

impl FixedPointResult {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Iterates `x ← (f(x) + x) / 2` until `|f(x) - x| <= fp_tol` or `max_iter`
/// steps have been taken. Exhaustion is reported through `status`, with the
/// iterate of smallest residual.
pub fn krasnoselskii<F: SelfMap + ?Sized>(
    f: &F,
    x0: &Vector,
    norm: &PolyhedralNorm,
    fp_tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: x0.len(),
        });
    }
    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, x.clone(), 0);
    for k in 0..=max_iter {
        let fx = f.apply(&x)?;
        let residual = norm.norm(&(&fx - &x));
        history.push(residual);
        if residual < best.0 {
            best = (residual, x.clone(), k);
        }
        if residual <= fp_tol {
            return Ok(FixedPointResult {
                point: x,
                iterations: k,
                residual,
                status: Status::Converged,
                residual_history: history,
            });
        }
        if k == max_iter {
            break;
        }
        x = (fx + &x) * 0.5;
    }
    Ok(FixedPointResult {
        point: best.1,
        iterations: max_iter,
        residual: best.0,
        status: Status::NotConverged,
        residual_history: history,
    })
}

/// `R(x)`, the limit of the averaged iteration started at `x`.
pub fn retract<F: SelfMap + ?Sized>(
    f: &F,
    x: &Vector,
    norm: &PolyhedralNorm,
    fp_tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    let r = krasnoselskii(f, x, norm, fp_tol, max_iter)?;
    if r.converged() {
        Ok(r.point)
    } else {
        Err(Error::NotConverged {
            iterations: r.iterations,
            residual: r.residual,
        })
    }
}

/// `R(x)` resolved to roughly machine precision: iterates until the residual
/// reaches a few ulps of `|x|` or stops improving, and returns the best
/// iterate. Used where `R` is differenced.
pub fn retract_precise<F: SelfMap + ?Sized>(
    f: &F,
    x: &Vector,
    norm: &PolyhedralNorm,
    max_iter: usize,
) -> Result<Vector> {
    let floor = 8.0 * f64::EPSILON * norm.norm(x).max(1.0);
    let mut cur = x.clone();
    let mut best = (f64::INFINITY, cur.clone());
    let mut stale = 0;
    for _ in 0..=max_iter {
        let fx = f.apply(&cur)?;
        let residual = norm.norm(&(&fx - &cur));
        if residual < best.0 {
            best = (residual, cur.clone());
            stale = 0;
        } else {
            stale += 1;
        }
        if residual <= floor || stale > 8 {
            break;
        }
        cur = (fx + &cur) * 0.5;
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub orbit_tol: f64,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub p_max: usize,
}

impl OrbitOptions {
    /// Defaults with the period search range `min(2^n max_k C(n,k), cap)`.
    pub fn for_dim(n: usize) -> Self {
        Self {
            orbit_tol: DEFAULT_ORBIT_TOL,
            fp_tol: DEFAULT_FP_TOL,
            max_iter: DEFAULT_MAX_ITER,
            p_max: default_p_max(n, DEFAULT_P_CAP),
        }
    }
}

pub fn default_p_max(n: usize, cap: usize) -> usize {
    best_known_period_bound(n).min(cap as u64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub representative: Vector,
    /// `ξ, f(ξ), ..., f^{q-1}(ξ)`.
    pub points: Vec<Vector>,
    pub minimal_period: usize,
    /// Recurrence period detected along the trajectory; a multiple of `minimal_period`.
    pub candidate_p: usize,
    /// Trajectory length at which the recurrence was seen.
    pub detection_iterations: usize,
}

/// Follows the trajectory of `x0` until `|f^k(x0) - f^{k-p}(x0)| < orbit_tol`
/// for some `p <= p_max`, refines a periodic point `ξ ∈ Fix(f^p)` by the
/// averaged iteration of `f^p`, and returns the orbit of `ξ`.
pub fn find_orbit<F: SelfMap + ?Sized>(
    f: &F,
    x0: &Vector,
    norm: &PolyhedralNorm,
    opts: &OrbitOptions,
) -> Result<Orbit> {
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: x0.len(),
        });
    }
    let p_max = opts.p_max.max(1);
    // window[0] is the newest iterate.
    let mut window: VecDeque<Vector> = VecDeque::with_capacity(p_max + 1);
    window.push_front(x0.clone());
    for k in 1..=opts.max_iter {
        let next = f.apply(&window[0])?;
        window.push_front(next);
        if window.len() > p_max + 1 {
            window.pop_back();
        }
        let found =
            (1..window.len()).find(|&p| norm.distance(&window[0], &window[p]) < opts.orbit_tol);
        if let Some(p) = found {
            let fp = Iterated { map: f, times: p };
            let refined = krasnoselskii(&fp, &window[0], norm, opts.fp_tol, opts.max_iter)?;
            if !refined.converged() {
                return Err(Error::NotConverged {
                    iterations: refined.iterations,
                    residual: refined.residual,
                });
            }
            let xi = refined.point;
            let q = minimal_period(f, &xi, p, norm, opts.orbit_tol)?;
            let mut points = Vec::with_capacity(q);
            let mut y = xi.clone();
            for _ in 0..q {
                let next = f.apply(&y)?;
                points.push(y);
                y = next;
            }
            return Ok(Orbit {
                representative: xi,
                points,
                minimal_period: q,
                candidate_p: p,
                detection_iterations: k,
            });
        }
    }
    Err(Error::NoOrbitFound {
        iterations: opts.max_iter,
    })
}

/// Smallest divisor `d` of `p` with `|f^d(ξ) - ξ| < orbit_tol`. Distances
/// falling in `[orbit_tol, 10 orbit_tol)` are rejected as ambiguous, both for
/// the divisor test and between the resulting orbit points.
pub fn minimal_period<F: SelfMap + ?Sized>(
    f: &F,
    xi: &Vector,
    p: usize,
    norm: &PolyhedralNorm,
    orbit_tol: f64,
) -> Result<usize> {
    if p == 0 {
        return Err(Error::NotPeriodic {
            period: 0,
            defect: f64::INFINITY,
        });
    }
    let mut orbit = Vec::with_capacity(p + 1);
    orbit.push(xi.clone());
    for _ in 0..p {
        let next = f.apply(orbit.last().expect("nonempty"))?;
        orbit.push(next);
    }
    let defect = norm.distance(&orbit[p], xi);
    if defect >= orbit_tol {
        return Err(Error::NotPeriodic { period: p, defect });
    }
    let ambiguous = |d: f64| d >= orbit_tol && d < 10.0 * orbit_tol;
    let mut q = p;
    for d in (1..p).filter(|d| p.is_multiple_of(*d)) {
        let dist = norm.distance(&orbit[d], xi);
        if dist < orbit_tol {
            q = d;
            break;
        }
        if ambiguous(dist) {
            return Err(Error::AmbiguousPeriod {
                distance: dist,
                orbit_tol,
            });
        }
    }
    for i in 0..q {
        for j in (i + 1)..q {
            let dist = norm.distance(&orbit[i], &orbit[j]);
            if dist < 10.0 * orbit_tol {
                return Err(Error::AmbiguousPeriod {
                    distance: dist,
                    orbit_tol,
                });
            }
        }
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodVerdicts {
    /// Every observed minimal period divides `q`.
    pub divides_q: bool,
    /// `q` is the order, or twice the order, of a permutation on `n` letters.
    pub permutation_order_form: bool,
    pub below_2n: bool,
    /// `q <= 2^n max_k C(n, k)`.
    pub below_best_known: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    pub q: u64,
    pub n: usize,
    pub norm: NormKind,
    /// True for the ℓ1 and ℓ∞ norms, where every verdict is guaranteed for
    /// real-analytic maps.
    pub guaranteed: bool,
    pub verdicts: PeriodVerdicts,
}

impl BoundAudit {
    /// A guaranteed verdict failed.
    pub fn alarm(&self) -> bool {
        let v = &self.verdicts;
        self.guaranteed
            && !(v.divides_q && v.permutation_order_form && v.below_2n && v.below_best_known)
    }
}

/// Is `q` in `S ∪ 2S`, where `S` is the set of permutation orders on `n` letters?
pub fn is_permutation_order_form(q: u64, n: usize) -> Result<bool> {
    if n <= MAX_PARTITION_N {
        let s = partitions_lcm_set(n)?;
        Ok(s.contains(&q) || (q.is_multiple_of(2) && s.contains(&(q / 2))))
    } else {
        let fits = |m: u64| min_letters_for_order(m) <= n as u64;
        Ok(fits(q) || (q.is_multiple_of(2) && fits(q / 2)))
    }
}

pub fn audit_period(q: u64, n: usize, norm: NormKind, observed: &[u64]) -> Result<BoundAudit> {
    if q == 0 {
        return Err(Error::OutOfRange {
            what: "q",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "n",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let verdicts = PeriodVerdicts {
        divides_q: observed.iter().all(|&p| p != 0 && q.is_multiple_of(p)),
        permutation_order_form: is_permutation_order_form(q, n)?,
        below_2n: q <= pow2(n),
        below_best_known: q <= best_known_period_bound(n),
    };
    Ok(BoundAudit {
        q,
        n,
        norm,
        guaranteed: matches!(norm, NormKind::Linf | NormKind::L1),
        verdicts,
    })
}

/// `lcm` of the minimal periods, or `None` for an empty list.
pub fn lcm_of_observed_periods(orbits: &[Orbit]) -> Option<u64> {
    if orbits.is_empty() {
        return None;
    }
    Some(
        orbits
            .iter()
            .fold(1, |acc, o| lcm(acc, o.minimal_period as u64)),
    )
}
