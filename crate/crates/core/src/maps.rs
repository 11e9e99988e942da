//! Families of real-analytic nonexpansive maps and their Lipschitz certificates.
//!
//! Four variants are supported:
//!
//! - `Affine`: `x ↦ M x + b`.
//! - `AnalyticLayers`: `x ↦ σ_L(W_L(... σ_1(W_1 x + b_1) ...) + b_L)` with
//!   componentwise activations drawn from `{identity, tanh, sin, sigmoid}`.
//!   The sigmoid is the 1-Lipschitz rescaling `4 / (1 + e^{-t})`.
//! - `TensorH`: the log-coordinate form of the homogeneous map attached to a
//!   nonnegative tensor `A` of order `m`,
//!   `f(y)_i = (1/(m-1)) log Σ A[i, j_2, ..., j_m] exp(y_{j_2} + ... + y_{j_m}) - shift`.
//!   Positive eigenvectors `A x^{m-1} = λ x^{[m-1]}` correspond to fixed points
//!   when `shift = log(λ)/(m-1)`. The map is monotone and commutes with adding
//!   constants, hence ∞-norm nonexpansive; its certificate is sampled unless an
//!   exact bound is configured.
//! - `Composite`: maps applied in list order (first entry first).
//!
//! All iterated maps (`f^p`) are evaluated by repeated application.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::polynorm::{NormKind, PolyhedralNorm};

/// Slack above 1 still accepted as nonexpansive.
pub const CERT_TOL: f64 = 1e-9;

/// A map `R^n → R^n` that can be evaluated pointwise.
pub trait SelfMap: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &Vector) -> Result<Vector>;

    /// `f^times(x)` by repeated application.
    fn apply_n(&self, x: &Vector, times: usize) -> Result<Vector> {
        let mut y = x.clone();
        for _ in 0..times {
            y = self.apply(&y)?;
        }
        Ok(y)
    }
}

impl<T: SelfMap + ?Sized> SelfMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        (**self).apply(x)
    }
}

/// `x ↦ f^times(x)`.
#[derive(Debug, Clone, Copy)]
pub struct Iterated<F> {
    pub map: F,
    pub times: usize,
}

impl<F: SelfMap> SelfMap for Iterated<F> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        self.map.apply_n(x, self.times)
    }
}

/// `x ↦ f(x + base) - base`, which moves a fixed point `base` of `f` to the origin.
#[derive(Debug, Clone)]
pub struct Translated<F> {
    pub map: F,
    pub base: Vector,
}

impl<F: SelfMap> SelfMap for Translated<F> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        Ok(self.map.apply(&(x + &self.base))? - &self.base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sin,
    /// `4 / (1 + e^{-t})`, the logistic sigmoid scaled to be 1-Lipschitz.
    Sigmoid,
}

impl Activation {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Activation::Identity => t,
            Activation::Tanh => t.tanh(),
            Activation::Sin => t.sin(),
            Activation::Sigmoid => 4.0 / (1.0 + (-t).exp()),
        }
    }

    /// Global Lipschitz constant; every stock activation is 1-Lipschitz.
    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

/// One layer `x ↦ σ(W x + b)` with one activation per output coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vector,
    pub activations: Vec<Activation>,
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vector, activations: Vec<Activation>) -> Result<Self> {
        let rows = weight.nrows();
        if bias.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bias.len(),
            });
        }
        if activations.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: activations.len(),
            });
        }
        Ok(Self {
            weight,
            bias,
            activations,
        })
    }

    /// Same activation on every output coordinate.
    pub fn uniform(weight: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        let rows = weight.nrows();
        Self::new(weight, bias, vec![activation; rows])
    }

    fn eval(&self, x: &Vector) -> Vector {
        let mut z = &self.weight * x + &self.bias;
        for (zi, act) in z.iter_mut().zip(&self.activations) {
            *zi = act.eval(*zi);
        }
        z
    }
}

/// A nonnegative tensor of order `m` on `R^n`, stored row-major with the
/// output index first.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorH {
    pub order: usize,
    pub dim: usize,
    pub coefficients: Vec<f64>,
    pub shift: f64,
    /// Exact Lipschitz bound supplied by the caller, if any.
    pub exact_bound: Option<f64>,
}

impl TensorH {
    pub fn new(order: usize, dim: usize, coefficients: Vec<f64>, shift: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidMap("tensor order must be at least 2".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidMap(
                "tensor dimension must be at least 1".into(),
            ));
        }
        let expected = dim
            .checked_pow(order as u32)
            .ok_or_else(|| Error::InvalidMap("tensor too large".into()))?;
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidMap(
                "tensor coefficients must be finite and nonnegative".into(),
            ));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidMap("tensor shift must be finite".into()));
        }
        Ok(Self {
            order,
            dim,
            coefficients,
            shift,
            exact_bound: None,
        })
    }

    pub fn with_exact_bound(mut self, bound: f64) -> Self {
        self.exact_bound = Some(bound);
        self
    }

    fn eval(&self, y: &Vector) -> Result<Vector> {
        let n = self.dim;
        let degree = self.order - 1;
        // Factor out exp(max y) so the row polynomials stay in range.
        let top = y.max();
        let z: Vec<f64> = y.iter().map(|v| (v - top).exp()).collect();
        let block = n.pow(degree as u32);
        let mut out = Vector::zeros(n);
        for i in 0..n {
            let row = &self.coefficients[i * block..(i + 1) * block];
            let mut sum = 0.0;
            for (flat, coeff) in row.iter().enumerate() {
                if *coeff == 0.0 {
                    continue;
                }
                let mut rest = flat;
                let mut prod = *coeff;
                for _ in 0..degree {
                    prod *= z[rest % n];
                    rest /= n;
                }
                sum += prod;
            }
            if sum <= 0.0 || !sum.is_finite() {
                return Err(Error::SingularTensor { row: i, value: sum });
            }
            out[i] = sum.ln() / degree as f64 + top - self.shift;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Affine { matrix: Matrix, offset: Vector },
    AnalyticLayers { layers: Vec<Layer> },
    TensorH(TensorH),
    Composite { maps: Vec<MapSpec> },
}

impl MapSpec {
    pub fn affine(matrix: Matrix, offset: Vector) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidMap("affine matrix must be square".into()));
        }
        if offset.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: offset.len(),
            });
        }
        Ok(MapSpec::Affine { matrix, offset })
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        Self::affine(matrix, Vector::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        MapSpec::Affine {
            matrix: Matrix::identity(n, n),
            offset: Vector::zeros(n),
        }
    }

    pub fn layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidMap("no layers".into()))?;
        let n = first.weight.ncols();
        let mut width = n;
        for layer in &layers {
            if layer.weight.ncols() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    found: layer.weight.ncols(),
                });
            }
            width = layer.weight.nrows();
        }
        if width != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: width,
            });
        }
        Ok(MapSpec::AnalyticLayers { layers })
    }

    pub fn composite(maps: Vec<MapSpec>) -> Result<Self> {
        let n = maps
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::InvalidMap("empty composite".into()))?;
        if let Some(bad) = maps.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dim(),
            });
        }
        Ok(MapSpec::Composite { maps })
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            MapSpec::Affine { .. } => "affine",
            MapSpec::AnalyticLayers { .. } => "analytic_layers",
            MapSpec::TensorH(_) => "tensor_h",
            MapSpec::Composite { .. } => "composite",
        }
    }
}

impl SelfMap for MapSpec {
    fn dim(&self) -> usize {
        match self {
            MapSpec::Affine { matrix, .. } => matrix.nrows(),
            MapSpec::AnalyticLayers { layers } => layers[0].weight.ncols(),
            MapSpec::TensorH(t) => t.dim,
            MapSpec::Composite { maps } => maps[0].dim(),
        }
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        match self {
            MapSpec::Affine { matrix, offset } => Ok(matrix * x + offset),
            MapSpec::AnalyticLayers { layers } => {
                Ok(layers.iter().fold(x.clone(), |acc, layer| layer.eval(&acc)))
            }
            MapSpec::TensorH(t) => t.eval(x),
            MapSpec::Composite { maps } => {
                let mut y = x.clone();
                for m in maps {
                    y = m.apply(&y)?;
                }
                Ok(y)
            }
        }
    }
}

/// Operator norm of a matrix, exact or a sampled lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub exact: bool,
}

/// `sup |M x| / |x|`. Exact for ℓ∞ (max absolute row sum) and ℓ1 (max
/// absolute column sum); otherwise a sampled lower bound.
pub fn operator_norm(m: &Matrix, norm: &PolyhedralNorm) -> OperatorNorm {
    match norm.kind() {
        NormKind::Linf => OperatorNorm {
            value: max_row_sum(m),
            exact: true,
        },
        NormKind::L1 => OperatorNorm {
            value: max_col_sum(m),
            exact: true,
        },
        NormKind::Custom => OperatorNorm {
            value: sampled_operator_norm(m, norm, 4096, 0),
            exact: false,
        },
    }
}

pub fn max_row_sum(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_col_sum(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn sampled_operator_norm(m: &Matrix, norm: &PolyhedralNorm, samples: usize, seed: u64) -> f64 {
    let n = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let probes = (0..n)
        .map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
        .chain(norm.dual_extremes().iter().cloned());
    let random = (0..samples).map(|_| Vector::from_fn(n, |_, _| rng.sample(StandardNormal)));
    for x in probes.collect::<Vec<_>>().into_iter().chain(random) {
        let nx = norm.norm(&x);
        if nx > 0.0 {
            best = best.max(norm.norm(&(m * &x)) / nx);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    ExactOperatorNorm,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzCertificate {
    pub method: CertificateMethod,
    pub bound: f64,
    pub trials: usize,
    /// Pair attaining the sampled bound; absent for exact certificates.
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub verdict: Verdict,
}

impl LipschitzCertificate {
    fn from_bound(method: CertificateMethod, bound: f64, trials: usize) -> Self {
        Self {
            method,
            bound,
            trials,
            worst_pair: None,
            verdict: verdict_for(bound),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn verdict_for(bound: f64) -> Verdict {
    if bound <= 1.0 + CERT_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Where sampled certification draws its pairs: boxes of half-width `radius`
/// around each center, cycled through in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDomain {
    pub radius: f64,
    pub centers: Vec<Vector>,
}

impl SamplingDomain {
    pub fn around_origin(n: usize, radius: f64) -> Self {
        Self {
            radius,
            centers: vec![Vector::zeros(n)],
        }
    }
}

/// Exact Lipschitz bound, when the variant and norm admit one.
pub fn exact_bound(f: &MapSpec, norm: &PolyhedralNorm) -> Option<f64> {
    let absolute = matches!(norm.kind(), NormKind::Linf | NormKind::L1);
    match f {
        MapSpec::Affine { matrix, .. } => {
            let op = operator_norm(matrix, norm);
            op.exact.then_some(op.value)
        }
        // Componentwise 1-Lipschitz activations preserve the bound only for
        // absolute norms.
        MapSpec::AnalyticLayers { layers } if absolute => Some(
            layers
                .iter()
                .map(|l| {
                    let lip = l
                        .activations
                        .iter()
                        .map(|a| a.lipschitz())
                        .fold(0.0, f64::max);
                    operator_norm(&l.weight, norm).value * lip
                })
                .product(),
        ),
        MapSpec::AnalyticLayers { .. } => None,
        MapSpec::TensorH(t) => t.exact_bound,
        MapSpec::Composite { maps } => maps
            .iter()
            .map(|m| exact_bound(m, norm))
            .try_fold(1.0, |acc, b| b.map(|b| acc * b)),
    }
}

/// Certifies `|f(x) - f(y)| <= |x - y|`: exactly when possible, otherwise by
/// the largest ratio over `trials` random pairs. Pass iff the bound is at
/// most `1 + CERT_TOL`.
pub fn certify_nonexpansive(
    f: &MapSpec,
    norm: &PolyhedralNorm,
    trials: usize,
    seed: u64,
    domain: &SamplingDomain,
) -> Result<LipschitzCertificate> {
    if f.dim() != norm.dim() {
        return Err(Error::DimensionMismatch {
            expected: norm.dim(),
            found: f.dim(),
        });
    }
    if let Some(bound) = exact_bound(f, norm) {
        return Ok(LipschitzCertificate::from_bound(
            CertificateMethod::ExactOperatorNorm,
            bound,
            0,
        ));
    }
    let sample = sample_lipschitz(f, norm, trials.max(1), seed, domain)?;
    Ok(LipschitzCertificate {
        method: CertificateMethod::Sampled,
        bound: sample.ratio,
        trials: trials.max(1),
        worst_pair: Some((
            sample.x.iter().cloned().collect(),
            sample.y.iter().cloned().collect(),
        )),
        verdict: verdict_for(sample.ratio),
    })
}

/// Largest observed ratio `|f(x) - f(y)| / |x - y|` and the pair attaining it.
#[derive(Debug, Clone)]
pub struct LipschitzSample {
    pub ratio: f64,
    pub x: Vector,
    pub y: Vector,
}

/// Random-pair Lipschitz estimate. Trial `t` uses its own ChaCha stream, so
/// the result does not depend on how trials are scheduled across threads.
pub fn sample_lipschitz<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    trials: usize,
    seed: u64,
    domain: &SamplingDomain,
) -> Result<LipschitzSample> {
    let n = norm.dim();
    let results: Vec<Result<(f64, Vector, Vector)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let center = if domain.centers.is_empty() {
                Vector::zeros(n)
            } else {
                domain.centers[t % domain.centers.len()].clone()
            };
            let x = center + Vector::from_fn(n, |_, _| domain.radius * rng.random_range(-1.0..1.0));
            // Separations from radius down to radius * 1e-4, log-uniform.
            let scale = domain.radius * 10f64.powf(-rng.random_range(0.0..4.0));
            let dir = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let y = &x + dir * scale;
            let den = norm.norm(&(&x - &y));
            if den == 0.0 {
                return Ok((0.0, x, y));
            }
            let num = norm.norm(&(f.apply(&x)? - f.apply(&y)?));
            Ok((num / den, x, y))
        })
        .collect();
    let mut best = LipschitzSample {
        ratio: 0.0,
        x: Vector::zeros(n),
        y: Vector::zeros(n),
    };
    for r in results {
        let (ratio, x, y) = r?;
        if ratio > best.ratio {
            best = LipschitzSample { ratio, x, y };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix_from_rows;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sin_curve() -> MapSpec {
        MapSpec::layers(vec![Layer::new(
            m(&[&[1.0, 0.0], &[1.0, 0.0]]),
            v(&[0.0, 0.0]),
            vec![Activation::Identity, Activation::Sin],
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let rot = MapSpec::linear(m(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(rot.apply(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, 1.0]));

        let y = sin_curve().apply(&v(&[PI, 7.0])).unwrap();
        assert!((y[0] - PI).abs() < 1e-12 && y[1].abs() < 1e-12);

        let half = MapSpec::affine(Matrix::identity(2, 2) * 0.5, v(&[1.0, 1.0])).unwrap();
        assert_eq!(half.apply(&v(&[0.0, 0.0])).unwrap(), v(&[1.0, 1.0]));
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let f = MapSpec::identity(2);
        assert!(matches!(
            f.apply(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let l1 = PolyhedralNorm::l1(2).unwrap();
        let rot = m(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert_eq!(operator_norm(&rot, &linf).value, 1.0);
        let a = m(&[&[0.5, 0.5], &[0.0, 1.0]]);
        assert_eq!(operator_norm(&a, &linf).value, 1.0);
        let op = operator_norm(&a, &l1);
        assert!(op.exact);
        assert_eq!(op.value, 1.5);
    }

    #[test]
    fn sampled_operator_norm_is_a_lower_bound() {
        // For the hexagon norm, compare against the exact value computed from
        // the primal vertices (±(1,0), ±(0,1), ±(1,-1)).
        let hex = PolyhedralNorm::custom(
            vec![
                v(&[1.0, 0.0]),
                v(&[-1.0, 0.0]),
                v(&[0.0, 1.0]),
                v(&[0.0, -1.0]),
                v(&[1.0, 1.0]),
                v(&[-1.0, -1.0]),
            ],
            1e-9,
        )
        .unwrap();
        let a = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let exact = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, -1.0])]
            .iter()
            .map(|x| hex.norm(&(&a * x)) / hex.norm(x))
            .fold(0.0, f64::max);
        let op = operator_norm(&a, &hex);
        assert!(!op.exact);
        assert!(op.value <= exact + 1e-12);
        assert!(op.value >= 0.95 * exact);
    }

    #[test]
    fn certificate_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let dom = SamplingDomain::around_origin(2, 4.0);
        let rot = MapSpec::linear(m(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
        let c = certify_nonexpansive(&rot, &linf, 100, 1, &dom).unwrap();
        assert_eq!(c.method, CertificateMethod::ExactOperatorNorm);
        assert_eq!(c.bound, 1.0);
        assert!(c.passed());

        let c = certify_nonexpansive(&sin_curve(), &linf, 100, 1, &dom).unwrap();
        assert_eq!(c.method, CertificateMethod::ExactOperatorNorm);
        assert_eq!(c.bound, 1.0);
        assert!(c.passed());

        let double = MapSpec::linear(Matrix::identity(2, 2) * 2.0).unwrap();
        let c = certify_nonexpansive(&double, &linf, 100, 1, &dom).unwrap();
        assert_eq!(c.bound, 2.0);
        assert_eq!(c.verdict, Verdict::Fail);
    }

    #[test]
    fn sampled_certificate_reports_witness_on_failure() {
        let hex = PolyhedralNorm::custom(
            vec![
                v(&[1.0, 0.0]),
                v(&[-1.0, 0.0]),
                v(&[0.0, 1.0]),
                v(&[0.0, -1.0]),
                v(&[1.0, 1.0]),
                v(&[-1.0, -1.0]),
            ],
            1e-9,
        )
        .unwrap();
        let tanh2 = MapSpec::layers(vec![Layer::uniform(
            Matrix::identity(2, 2) * 2.0,
            v(&[0.0, 0.0]),
            Activation::Tanh,
        )
        .unwrap()])
        .unwrap();
        let c = certify_nonexpansive(&tanh2, &hex, 500, 3, &SamplingDomain::around_origin(2, 1.0))
            .unwrap();
        assert_eq!(c.method, CertificateMethod::Sampled);
        assert_eq!(c.verdict, Verdict::Fail);
        let (x, y) = c.worst_pair.clone().unwrap();
        let (x, y) = (v(&x), v(&y));
        let ratio =
            hex.norm(&(tanh2.apply(&x).unwrap() - tanh2.apply(&y).unwrap())) / hex.norm(&(&x - &y));
        assert!((ratio - c.bound).abs() < 1e-12);
    }

    #[test]
    fn tensor_uniform_is_log_mean_exp() {
        let t = TensorH::new(3, 3, vec![1.0 / 9.0; 27], 0.0).unwrap();
        let f = MapSpec::TensorH(t);
        let y = v(&[0.3, -1.0, 2.0]);
        let out = f.apply(&y).unwrap();
        // Σ_jk e^{y_j + y_k} / 9 = (mean e^y)^2, so each row is log(mean e^y).
        let expected = (y.iter().map(|t| t.exp()).sum::<f64>() / 3.0).ln();
        for i in 0..3 {
            assert!((out[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_singular_row_is_reported() {
        let mut coeffs = vec![0.25; 8];
        coeffs[4..].iter_mut().for_each(|c| *c = 0.0);
        let f = MapSpec::TensorH(TensorH::new(3, 2, coeffs, 0.0).unwrap());
        assert!(matches!(
            f.apply(&v(&[0.0, 0.0])),
            Err(Error::SingularTensor { row: 1, .. })
        ));
        assert!(TensorH::new(3, 2, vec![-1.0; 8], 0.0).is_err());
    }

    #[test]
    fn tensor_certificate_is_sampled_unless_configured() {
        let linf = PolyhedralNorm::linf(3).unwrap();
        let t = TensorH::new(2, 3, vec![0.2, 0.3, 0.5, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2], 0.0).unwrap();
        let dom = SamplingDomain::around_origin(3, 3.0);
        let c = certify_nonexpansive(&MapSpec::TensorH(t.clone()), &linf, 500, 5, &dom).unwrap();
        assert_eq!(c.method, CertificateMethod::Sampled);
        assert!(c.passed(), "bound {}", c.bound);
        let c = certify_nonexpansive(
            &MapSpec::TensorH(t.with_exact_bound(1.0)),
            &linf,
            10,
            5,
            &dom,
        )
        .unwrap();
        assert_eq!(c.method, CertificateMethod::ExactOperatorNorm);
    }

    #[test]
    fn composite_applies_in_order_and_multiplies_bounds() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let shift = MapSpec::affine(Matrix::identity(2, 2), v(&[1.0, 0.0])).unwrap();
        let half = MapSpec::linear(Matrix::identity(2, 2) * 0.5).unwrap();
        let c = MapSpec::composite(vec![shift.clone(), half.clone()]).unwrap();
        assert_eq!(c.apply(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 1.0]));
        assert_eq!(exact_bound(&c, &linf), Some(0.5));
        let rev = MapSpec::composite(vec![half, shift]).unwrap();
        assert_eq!(rev.apply(&v(&[1.0, 2.0])).unwrap(), v(&[1.5, 1.0]));
    }

    #[test]
    fn iterated_and_translated_wrappers() {
        let rot = MapSpec::linear(m(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
        let four = Iterated {
            map: &rot,
            times: 4,
        };
        assert_eq!(four.apply(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        let f = MapSpec::affine(Matrix::identity(2, 2) * 0.5, v(&[1.0, 1.0])).unwrap();
        let g = Translated {
            map: &f,
            base: v(&[2.0, 2.0]),
        };
        assert_eq!(g.apply(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }
}
