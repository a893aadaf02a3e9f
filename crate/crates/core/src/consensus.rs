//! Single-round block endorsement by a fixed validator committee.
//!
//! After each training round the coordinator announces the hash of the
//! block it intends to commit, and every validator votes once: approve,
//! reject, or abstain. The block commits when approvals form a strict
//! majority of the whole committee, so abstentions weigh against
//! commitment. Validators are deterministic personas: honest ones check
//! the announced hash against the block they actually received, silent
//! ones never vote, and adversarial ones invert the honest vote.

use crate::error::{Error, Result};
use crate::ledger::{block_hash, Block};
use crate::numerics::StreamRng;

/// Fixed per-validator persona for a whole simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidatorBehavior {
    /// Approves exactly the blocks that match the announcement and pass
    /// internal integrity checks.
    Honest,
    /// Crashed or partitioned: always abstains.
    Silent,
    /// Endorses tampered blocks and votes down correct ones.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validator {
    pub id: u32,
    pub behavior: ValidatorBehavior,
}

/// The committee, stored in id order.
#[derive(Debug, Clone)]
pub struct ValidatorSet {
    validators: Vec<Validator>,
}

impl ValidatorSet {
    /// Builds a committee of `count` validators with `floor(fraction *
    /// count)` adversarial and silent members, assigned to ids by a
    /// seeded shuffle so the faulty members land in random positions.
    pub fn assign(
        count: u32,
        adversarial_fraction: f64,
        silent_fraction: f64,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter(
                "validator count must be at least 1".into(),
            ));
        }
        for (name, f) in [
            ("adversarial fraction", adversarial_fraction),
            ("silent fraction", silent_fraction),
        ] {
            if !(f.is_finite() && (0.0..=1.0).contains(&f)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {f}"
                )));
            }
        }
        if adversarial_fraction + silent_fraction > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "faulty fractions sum to {} > 1",
                adversarial_fraction + silent_fraction
            )));
        }
        let adversarial = (adversarial_fraction * count as f64).floor() as usize;
        let silent = (silent_fraction * count as f64).floor() as usize;

        let mut ids: Vec<u32> = (0..count).collect();
        rng.shuffle(&mut ids);
        let mut validators: Vec<Validator> = ids
            .iter()
            .enumerate()
            .map(|(position, &id)| {
                let behavior = if position < adversarial {
                    ValidatorBehavior::Adversarial
                } else if position < adversarial + silent {
                    ValidatorBehavior::Silent
                } else {
                    ValidatorBehavior::Honest
                };
                Validator { id, behavior }
            })
            .collect();
        validators.sort_by_key(|v| v.id);
        Ok(Self { validators })
    }

    /// A committee with explicit members, for hand-built scenarios.
    pub fn from_validators(mut validators: Vec<Validator>) -> Result<Self> {
        if validators.is_empty() {
            return Err(Error::EmptyInput("validator set"));
        }
        validators.sort_by_key(|v| v.id);
        for pair in validators.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateNode(pair[0].id));
            }
        }
        Ok(Self { validators })
    }

    pub fn validators(&self) -> &[Validator] {
        &self.validators
    }

    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn count_of(&self, behavior: ValidatorBehavior) -> usize {
        self.validators
            .iter()
            .filter(|v| v.behavior == behavior)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Approve,
    Reject,
    Abstain,
}

/// One validator's vote on a received block, given the hash the
/// coordinator announced for it.
pub fn validator_vote(validator: &Validator, block: &Block, expected_hash: &[u8; 32]) -> Vote {
    let sound = block_hash(block) == *expected_hash && block.integrity_violation().is_none();
    match validator.behavior {
        ValidatorBehavior::Honest => {
            if sound {
                Vote::Approve
            } else {
                Vote::Reject
            }
        }
        ValidatorBehavior::Silent => Vote::Abstain,
        ValidatorBehavior::Adversarial => {
            if sound {
                Vote::Reject
            } else {
                Vote::Approve
            }
        }
    }
}

/// Tally of one endorsement round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusResult {
    pub approvals: usize,
    pub rejections: usize,
    pub abstentions: usize,
    /// Committee size; abstentions stay in this denominator.
    pub total: usize,
    pub committed: bool,
    /// Individual votes in validator id order.
    pub votes: Vec<(u32, Vote)>,
}

/// Collects one vote per validator and commits when approvals are a
/// strict majority of the committee: `2 * approvals > total`.
pub fn run_consensus_round(
    validators: &ValidatorSet,
    block: &Block,
    expected_hash: &[u8; 32],
) -> ConsensusResult {
    let mut approvals = 0;
    let mut rejections = 0;
    let mut abstentions = 0;
    let mut votes = Vec::with_capacity(validators.len());
    for v in validators.validators() {
        let vote = validator_vote(v, block, expected_hash);
        match vote {
            Vote::Approve => approvals += 1,
            Vote::Reject => rejections += 1,
            Vote::Abstain => abstentions += 1,
        }
        votes.push((v.id, vote));
    }
    let total = validators.len();
    ConsensusResult {
        approvals,
        rejections,
        abstentions,
        total,
        committed: 2 * approvals > total,
        votes,
    }
}
