//! Aggregation of accepted local models into the shared global model.
//!
//! Two modes: sample-count weighted averaging, and a trust-weighted variant
//! where each contribution's weight is its node's trust share times its
//! sample count, renormalized over the accepted set. Contributions are
//! summed in ascending node id order regardless of input order, so the
//! result is byte-stable under permutation.

use crate::error::{Error, Result};
use crate::model::ModelWeights;
use crate::numerics::RealVector;
use crate::Scalar;

/// One accepted local model with the sample count backing it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedContribution<S> {
    pub node_id: u32,
    pub weights: ModelWeights<S>,
    pub sample_count: u64,
}

/// Per-node trust shares; nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustVector {
    shares: Vec<(u32, f64)>,
}

impl TrustVector {
    pub fn share(&self, node_id: u32) -> Option<f64> {
        self.shares
            .iter()
            .find(|(id, _)| *id == node_id)
            .map(|(_, t)| *t)
    }

    pub fn shares(&self) -> &[(u32, f64)] {
        &self.shares
    }
}

/// Normalizes reputations into trust shares: `T_i = R_i / sum_j R_j`.
/// Requires every reputation nonnegative and at least one positive.
pub fn trust_weights(reputations: &[(u32, f64)]) -> Result<TrustVector> {
    if reputations.is_empty() {
        return Err(Error::EmptyInput("reputation list"));
    }
    for (id, r) in reputations {
        if !(*r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reputation of node {id} must be finite and nonnegative, got {r}"
            )));
        }
    }
    let total: f64 = reputations.iter().map(|(_, r)| r).sum();
    if total == 0.0 {
        return Err(Error::ZeroTrust);
    }
    let mut shares: Vec<(u32, f64)> = reputations
        .iter()
        .map(|(id, r)| (*id, r / total))
        .collect();
    shares.sort_by_key(|(id, _)| *id);
    Ok(TrustVector { shares })
}

/// Sample-count weighted mean of the contributions (the classic federated
/// average). Fails on an empty set, a zero total sample count, duplicate
/// node ids, or mismatched dimensions.
pub fn fed_avg<S: Scalar>(contributions: &[WeightedContribution<S>]) -> Result<ModelWeights<S>> {
    let weights: Vec<(u32, f64)> = contributions
        .iter()
        .map(|c| (c.node_id, c.sample_count as f64))
        .collect();
    weighted_mean(contributions, &weights)
}

/// Trust-weighted mean: contribution `i` weighs `T_i * n_i`, renormalized
/// over the accepted set. Fails as [`fed_avg`], when a contribution has no
/// trust entry, or when every accepted contribution has zero trust.
pub fn trust_weighted_avg<S: Scalar>(
    contributions: &[WeightedContribution<S>],
    trust: &TrustVector,
) -> Result<ModelWeights<S>> {
    let mut weights = Vec::with_capacity(contributions.len());
    for c in contributions {
        let share = trust
            .share(c.node_id)
            .ok_or(Error::UnknownNode(c.node_id))?;
        weights.push((c.node_id, share * c.sample_count as f64));
    }
    weighted_mean(contributions, &weights)
}

/// Euclidean distance between a local model and the shared reference.
pub fn divergence<S: Scalar>(local: &ModelWeights<S>, global: &ModelWeights<S>) -> Result<S> {
    Ok(local.vector().sub(global.vector())?.l2_norm())
}

fn weighted_mean<S: Scalar>(
    contributions: &[WeightedContribution<S>],
    weights: &[(u32, f64)],
) -> Result<ModelWeights<S>> {
    if contributions.is_empty() {
        return Err(Error::EmptyInput("contribution list"));
    }
    let dim = contributions[0].weights.dim();
    for c in contributions {
        if c.weights.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.weights.dim(),
            });
        }
    }
    let total: f64 = weights.iter().map(|(_, w)| *w).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "total aggregation weight must be positive, got {total}"
        )));
    }

    // Fixed ascending-id summation order makes the mean permutation
    // invariant at the byte level.
    let mut order: Vec<usize> = (0..contributions.len()).collect();
    order.sort_by_key(|&i| contributions[i].node_id);
    for pair in order.windows(2) {
        if contributions[pair[0]].node_id == contributions[pair[1]].node_id {
            return Err(Error::DuplicateNode(contributions[pair[0]].node_id));
        }
    }

    let mut acc = RealVector::<S>::zeros(dim);
    for &i in &order {
        let coeff = S::from_f64_lossy(weights[i].1 / total);
        acc = acc.add(&contributions[i].weights.vector().scale(coeff))?;
    }
    ModelWeights::from_vector(acc)
}
