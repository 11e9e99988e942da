//! Serializable records for norms and maps, mirroring the variant fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Activation, Layer, MapSpec, TensorH};
use crate::numerics::{matrix_from_rows, vector_from_slice, Vector};
use crate::polynorm::{NormKind, PolyhedralNorm, FACE_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormRecord {
    pub kind: NormKind,
    /// Dimension for `linf` and `l1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Extreme points of the dual ball for `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_extremes: Option<Vec<Vec<f64>>>,
}

impl TryFrom<&NormRecord> for PolyhedralNorm {
    type Error = Error;

    fn try_from(r: &NormRecord) -> Result<Self> {
        let need_n = || {
            r.n.ok_or_else(|| Error::InvalidNorm(format!("norm kind {} needs `n`", r.kind)))
        };
        match r.kind {
            NormKind::Linf => PolyhedralNorm::linf(need_n()?),
            NormKind::L1 => PolyhedralNorm::l1(need_n()?),
            NormKind::Custom => {
                let rows = r.dual_extremes.as_ref().ok_or_else(|| {
                    Error::InvalidNorm("custom norm needs `dual_extremes`".into())
                })?;
                let norm = PolyhedralNorm::custom(
                    rows.iter().map(|v| vector_from_slice(v)).collect(),
                    FACE_TOL,
                )?;
                if let Some(n) = r.n {
                    if n != norm.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: norm.dim(),
                        });
                    }
                }
                Ok(norm)
            }
        }
    }
}

/// One activation for every output coordinate, or one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivationRecord {
    Uniform(Activation),
    PerCoordinate(Vec<Activation>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub weight: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
    pub activation: ActivationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapRecord {
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
    },
    AnalyticLayers {
        layers: Vec<LayerRecord>,
    },
    TensorH {
        order: usize,
        dim: usize,
        /// Row-major, output index first: entry `[i, j_2, ..., j_m]` sits at
        /// `i n^{m-1} + j_2 + j_3 n + ... + j_m n^{m-2}`.
        coefficients: Vec<f64>,
        #[serde(default)]
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exact_bound: Option<f64>,
    },
    Composite {
        maps: Vec<MapRecord>,
    },
}

fn optional_vector(v: &Option<Vec<f64>>, n: usize) -> Vector {
    v.as_deref()
        .map(vector_from_slice)
        .unwrap_or_else(|| Vector::zeros(n))
}

impl TryFrom<&MapRecord> for MapSpec {
    type Error = Error;

    fn try_from(r: &MapRecord) -> Result<Self> {
        match r {
            MapRecord::Affine { matrix, offset } => {
                let m = matrix_from_rows(matrix)?;
                let b = optional_vector(offset, m.nrows());
                MapSpec::affine(m, b)
            }
            MapRecord::AnalyticLayers { layers } => {
                let layers = layers
                    .iter()
                    .map(|l| {
                        let w = matrix_from_rows(&l.weight)?;
                        let b = optional_vector(&l.bias, w.nrows());
                        match &l.activation {
                            ActivationRecord::Uniform(a) => Layer::uniform(w, b, *a),
                            ActivationRecord::PerCoordinate(a) => Layer::new(w, b, a.clone()),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                MapSpec::layers(layers)
            }
            MapRecord::TensorH {
                order,
                dim,
                coefficients,
                shift,
                exact_bound,
            } => {
                let t = TensorH::new(*order, *dim, coefficients.clone(), *shift)?;
                Ok(MapSpec::TensorH(match exact_bound {
                    Some(b) => t.with_exact_bound(*b),
                    None => t,
                }))
            }
            MapRecord::Composite { maps } => MapSpec::composite(
                maps.iter()
                    .map(MapSpec::try_from)
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}
