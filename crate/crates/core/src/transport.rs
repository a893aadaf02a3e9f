//! Simulated wire formats for model updates and the per-update cost model.
//!
//! Updates cross the network either densely (every coordinate) or as a
//! top-magnitude sparse encoding of a delta. Both carry values at 32-bit
//! precision behind a fixed-size header, so payload accounting is exact:
//! `header + 4 * dim` bytes dense, `header + 8 * count` bytes sparse.

use crate::error::{Error, Result};
use crate::numerics::RealVector;
use crate::Scalar;

/// Default envelope size in bytes (node id, round, anomaly score, tag).
pub const DEFAULT_HEADER_BYTES: u32 = 16;

/// An update payload as it crosses the simulated network.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateEncoding {
    /// Every coordinate in order, 4 bytes each.
    Dense { values: Vec<f32>, header_bytes: u32 },
    /// Selected coordinates of a delta as (index, value) pairs, 8 bytes
    /// each, sorted by ascending index.
    Sparse {
        entries: Vec<(u32, f32)>,
        header_bytes: u32,
    },
}

impl UpdateEncoding {
    /// Total simulated size on the wire, header included.
    pub fn payload_bytes(&self) -> u64 {
        self.header_bytes() as u64 + self.body_bytes()
    }

    /// Value bytes only, excluding the fixed header.
    pub fn body_bytes(&self) -> u64 {
        match self {
            UpdateEncoding::Dense { values, .. } => 4 * values.len() as u64,
            UpdateEncoding::Sparse { entries, .. } => 8 * entries.len() as u64,
        }
    }

    pub fn header_bytes(&self) -> u32 {
        match self {
            UpdateEncoding::Dense { header_bytes, .. }
            | UpdateEncoding::Sparse { header_bytes, .. } => *header_bytes,
        }
    }

    /// Number of transmitted values.
    pub fn value_count(&self) -> usize {
        match self {
            UpdateEncoding::Dense { values, .. } => values.len(),
            UpdateEncoding::Sparse { entries, .. } => entries.len(),
        }
    }
}

/// Encodes a full vector at wire precision.
pub fn dense_encode<S: Scalar>(v: &RealVector<S>, header_bytes: u32) -> UpdateEncoding {
    UpdateEncoding::Dense {
        values: v.iter().map(|x| x.as_f64() as f32).collect(),
        header_bytes,
    }
}

/// Keeps the `ceil(rho * dim)` largest-magnitude coordinates of `delta`,
/// breaking magnitude ties in favor of the lower index. Requires
/// `0 < rho <= 1`.
pub fn sparsify_topk<S: Scalar>(
    delta: &RealVector<S>,
    rho: f64,
    header_bytes: u32,
) -> Result<UpdateEncoding> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sparsity rho must be in (0, 1], got {rho}"
        )));
    }
    let dim = delta.dim();
    let keep = (rho * dim as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let ma = delta[a].abs();
        let mb = delta[b].abs();
        mb.partial_cmp(&ma)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    Ok(UpdateEncoding::Sparse {
        entries: kept
            .into_iter()
            .map(|i| (i as u32, delta[i].as_f64() as f32))
            .collect(),
        header_bytes,
    })
}

/// Expands an encoding back to a vector of dimension `dim`. Dropped sparse
/// coordinates become zero; an out-of-range index or a dense length other
/// than `dim` is an error.
pub fn densify<S: Scalar>(encoding: &UpdateEncoding, dim: usize) -> Result<RealVector<S>> {
    match encoding {
        UpdateEncoding::Dense { values, .. } => {
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: values.len(),
                });
            }
            Ok(RealVector::new(
                values.iter().map(|v| S::from_f64_lossy(*v as f64)).collect(),
            ))
        }
        UpdateEncoding::Sparse { entries, .. } => {
            let mut out = vec![S::zero(); dim];
            for (index, value) in entries {
                let at = *index as usize;
                if at >= dim {
                    return Err(Error::SparseIndex { index: *index, dim });
                }
                out[at] = S::from_f64_lossy(*value as f64);
            }
            Ok(RealVector::new(out))
        }
    }
}

/// Linear transmission cost: `alpha` per byte plus `beta` per unit latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub alpha: f64,
    pub beta: f64,
}

impl CostParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost coefficients must be finite and nonnegative, got alpha {alpha}, beta {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

/// Cost of shipping one update of `size_bytes` over a link with `latency`.
pub fn update_cost(size_bytes: u64, latency: f64, params: &CostParams) -> f64 {
    params.alpha * size_bytes as f64 + params.beta * latency
}
