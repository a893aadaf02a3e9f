//! Update validation rules and the append-only reputation record.
//!
//! Validation mirrors what an on-chain contract could check from the
//! submitted artifact alone: structural well-formedness, divergence from
//! the current shared model, and the self-reported anomaly score. A
//! malformed update yields a rejecting verdict, never an error, so one bad
//! submission cannot stall the round.

use std::collections::BTreeMap;

use crate::aggregation::divergence;
use crate::error::{Error, Result};
use crate::model::{LocalUpdate, ModelWeights};
use crate::Scalar;

/// Validation thresholds and the per-round reputation increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractPolicy {
    max_divergence: f64,
    max_anomaly: f64,
    reputation_step: f64,
}

impl ContractPolicy {
    pub fn new(max_divergence: f64, max_anomaly: f64, reputation_step: f64) -> Result<Self> {
        if !(max_divergence > 0.0 && max_divergence.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "divergence bound must be positive, got {max_divergence}"
            )));
        }
        if !(max_anomaly > 0.0 && max_anomaly <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "anomaly bound must lie in (0, 1], got {max_anomaly}"
            )));
        }
        if !(reputation_step > 0.0 && reputation_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reputation step must be positive, got {reputation_step}"
            )));
        }
        Ok(Self {
            max_divergence,
            max_anomaly,
            reputation_step,
        })
    }

    pub fn max_divergence(&self) -> f64 {
        self.max_divergence
    }

    pub fn max_anomaly(&self) -> f64 {
        self.max_anomaly
    }

    pub fn reputation_step(&self) -> f64 {
        self.reputation_step
    }
}

impl Default for ContractPolicy {
    fn default() -> Self {
        Self {
            max_divergence: 5.0,
            max_anomaly: 0.5,
            reputation_step: 1.0,
        }
    }
}

/// Why an update was rejected, or `Ok` if it was not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictReason {
    Ok,
    DivergenceExceeded,
    AnomalyExceeded,
    Malformed,
}

/// Accept/reject outcome. Constructed so that the decision bit and the
/// reason can never disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    reason: VerdictReason,
}

impl Verdict {
    pub fn accept() -> Self {
        Self {
            reason: VerdictReason::Ok,
        }
    }

    /// Rejecting verdict; `reason` must not be `Ok`.
    pub fn reject(reason: VerdictReason) -> Self {
        assert!(
            reason != VerdictReason::Ok,
            "rejection requires a failure reason"
        );
        Self { reason }
    }

    pub fn accepted(&self) -> bool {
        self.reason == VerdictReason::Ok
    }

    pub fn reason(&self) -> VerdictReason {
        self.reason
    }

    /// 1 for accepted, 0 for rejected; the wire form of the decision.
    pub fn decision_byte(&self) -> u8 {
        u8::from(self.accepted())
    }

    pub fn reason_byte(&self) -> u8 {
        match self.reason {
            VerdictReason::Ok => 0,
            VerdictReason::DivergenceExceeded => 1,
            VerdictReason::AnomalyExceeded => 2,
            VerdictReason::Malformed => 3,
        }
    }

    /// Rebuilds a verdict from its wire bytes, rejecting inconsistent
    /// decision/reason pairs.
    pub fn from_bytes(decision: u8, reason: u8) -> Result<Self> {
        let reason = match reason {
            0 => VerdictReason::Ok,
            1 => VerdictReason::DivergenceExceeded,
            2 => VerdictReason::AnomalyExceeded,
            3 => VerdictReason::Malformed,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown verdict reason byte {other}"
                )))
            }
        };
        let consistent = (decision == 1 && reason == VerdictReason::Ok)
            || (decision == 0 && reason != VerdictReason::Ok);
        if !consistent {
            return Err(Error::InvalidParameter(format!(
                "verdict decision {decision} conflicts with reason {reason:?}"
            )));
        }
        Ok(Self { reason })
    }
}

/// Checks one update against the shared reference model. Checks run in a
/// fixed order: structural well-formedness (finite weights of the right
/// dimension, anomaly score a real in [0, 1]), then the divergence bound,
/// then the anomaly bound. Both bounds are inclusive.
pub fn validate_update<S: Scalar>(
    update: &LocalUpdate<S>,
    reference: &ModelWeights<S>,
    policy: &ContractPolicy,
) -> Verdict {
    let anomaly = update.anomaly_score.as_f64();
    if !update.weights.is_finite()
        || update.weights.dim() != reference.dim()
        || !anomaly.is_finite()
        || !(0.0..=1.0).contains(&anomaly)
    {
        return Verdict::reject(VerdictReason::Malformed);
    }
    let gap = divergence(&update.weights, reference)
        .expect("dimensions checked above")
        .as_f64();
    if gap > policy.max_divergence {
        return Verdict::reject(VerdictReason::DivergenceExceeded);
    }
    if anomaly > policy.max_anomaly {
        return Verdict::reject(VerdictReason::AnomalyExceeded);
    }
    Verdict::accept()
}

/// Append-only per-node reputation with a verdict history for audits.
/// Reputation never decreases: accepted rounds add the policy step,
/// rejected rounds add nothing.
#[derive(Debug, Clone, Default)]
pub struct ReputationLedger {
    reputations: BTreeMap<u32, f64>,
    history: Vec<Vec<(u32, Verdict)>>,
}

impl ReputationLedger {
    /// Registers the fixed node population, all starting at zero.
    pub fn new(node_ids: impl IntoIterator<Item = u32>) -> Self {
        Self {
            reputations: node_ids.into_iter().map(|id| (id, 0.0)).collect(),
            history: Vec::new(),
        }
    }

    /// Opens a new round bucket in the verdict history.
    pub fn start_round(&mut self) {
        self.history.push(Vec::new());
    }

    /// Applies one verdict: adds `step` to the node's reputation when
    /// accepted, records the verdict either way. Unknown nodes are an
    /// error.
    pub fn update_reputation(&mut self, node_id: u32, verdict: Verdict, step: f64) -> Result<()> {
        let entry = self
            .reputations
            .get_mut(&node_id)
            .ok_or(Error::UnknownNode(node_id))?;
        if verdict.accepted() {
            *entry += step;
        }
        if self.history.is_empty() {
            self.history.push(Vec::new());
        }
        self.history
            .last_mut()
            .expect("bucket just ensured")
            .push((node_id, verdict));
        Ok(())
    }

    pub fn reputation(&self, node_id: u32) -> Option<f64> {
        self.reputations.get(&node_id).copied()
    }

    /// Snapshot in ascending node id order.
    pub fn snapshot(&self) -> Vec<(u32, f64)> {
        self.reputations.iter().map(|(id, r)| (*id, *r)).collect()
    }

    pub fn history(&self) -> &[Vec<(u32, Verdict)>] {
        &self.history
    }
}
