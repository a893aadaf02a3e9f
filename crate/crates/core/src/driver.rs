//! End-to-end round loop: local training, transport, contract checks,
//! aggregation, consensus, and the ledger, in one deterministic pass.
//!
//! Each round every node trains locally with clipped, noised gradient
//! steps. On transmit rounds nodes encode their model (or a sparse delta
//! against the last broadcast), the coordinator reconstructs the wire
//! payloads, validates them against the current shared model, averages
//! the accepted ones, and asks the validator committee to endorse the
//! round's block. Training advances whether or not the block commits;
//! a dropped block is an audit gap, not a training stall. Hold rounds
//! (between transmissions) still produce empty blocks so the chain
//! records liveness. All randomness flows from one seed through fixed
//! stream ids, so reruns are bit-identical and node order never matters.

use rayon::prelude::*;

use crate::aggregation::{divergence, fed_avg, trust_weighted_avg, trust_weights, WeightedContribution};
use crate::config::{AggregationMode, DataSource, SimulationConfig};
use crate::consensus::{run_consensus_round, ValidatorSet};
use crate::contract::{validate_update, ReputationLedger, Verdict};
use crate::data::{generate_synthetic, load_csv, partition, split_test};
use crate::error::Result;
use crate::ledger::{
    block_hash, gas_cost, weights_digest, Block, Chain, LedgerRecord, UpdateArchive,
};
use crate::model::{anomaly_score, local_loss, local_training_round, predict, LocalUpdate};
use crate::numerics::{seeded_rng, StreamRng};
use crate::transport::{dense_encode, densify, sparsify_topk, update_cost};
use crate::{Dataset, Real, Scalar, Weights};

/// Stream ids carve the seed space so each concern draws independently.
const STREAM_DATA: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_CONSENSUS: u64 = 2;
/// Node `i` trains on stream `STREAM_NODE_BASE + i`.
const STREAM_NODE_BASE: u64 = 16;

/// Confusion-matrix metrics over a dataset. Every ratio with an empty
/// denominator reports zero, including all four on an empty dataset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores `weights` on `data` with the given decision threshold; a
/// probability at or above the threshold classifies positive.
pub fn evaluate(weights: &Weights, data: &Dataset, threshold: Real) -> Result<EvalMetrics> {
    if data.is_empty() {
        return Ok(EvalMetrics::default());
    }
    let (mut tp, mut fp, mut tn, mut fnn) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..data.len() {
        let (x, y) = data.row(i);
        let positive = predict(weights, x)? >= threshold;
        match (positive, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnn += 1,
        }
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fnn);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EvalMetrics {
        accuracy: ratio(tp + tn, tp + fp + tn + fnn),
        precision,
        recall,
        f1,
    })
}

/// Everything measured about one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    /// 1-based round index.
    pub round: u32,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean post-training loss over nodes, on their own training rows.
    pub mean_local_loss: f64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    /// Chain growth this round; zero when consensus dropped the block.
    pub ledger_bytes: u64,
    pub gas: f64,
    /// Total transmission cost over this round's updates.
    pub update_cost: f64,
    pub transmitted: u32,
    pub accepted: u32,
    pub rejected: u32,
    pub approvals: u32,
    pub validators: u32,
    pub committed: bool,
    pub mean_divergence: f64,
    pub max_divergence: f64,
}

/// Result of a full simulation run.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    /// Test-split metrics of the untrained (all-zero) model.
    pub initial_metrics: EvalMetrics,
    pub rounds: Vec<RoundMetrics>,
    pub chain: Chain,
    pub archive: UpdateArchive,
    pub final_weights: Weights,
    /// First round opening three consecutive rounds at or above the
    /// target accuracy, if the run ever sustains it.
    pub rounds_to_target: Option<u32>,
    pub reputations: Vec<(u32, f64)>,
    /// Final normalized trust shares; empty until any reputation accrues.
    pub trust: Vec<(u32, f64)>,
    /// Notable departures from the happy path, one line per event.
    pub events: Vec<String>,
    /// Per node: id, training rows, holdout rows.
    pub node_sizes: Vec<(u32, usize, usize)>,
    pub test_rows: usize,
    pub test_positive_fraction: f64,
}

struct NodeState {
    id: u32,
    train: Dataset,
    holdout: Dataset,
    model: Weights,
    rng: StreamRng,
    poisoned: bool,
}

struct TrainedNode {
    id: u32,
    weights: Weights,
    anomaly: Real,
    loss: Real,
    sample_count: u64,
}

/// First index (as a 1-based round) where `accuracies` stays at or above
/// `target` for three consecutive rounds. Runs that end fewer than three
/// rounds after first reaching the target report `None`.
pub fn sustained_target_round(accuracies: &[f64], target: f64) -> Option<u32> {
    accuracies
        .windows(3)
        .position(|w| w.iter().all(|a| *a >= target))
        .map(|i| i as u32 + 1)
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    cfg.validate()?;

    let full: Dataset = match &cfg.data_source {
        DataSource::Synthetic => {
            let mut rng = seeded_rng(cfg.seed, STREAM_DATA);
            generate_synthetic(&cfg.synthetic, &mut rng)?
        }
        DataSource::Csv(path) => load_csv(path, &cfg.label_column, &cfg.positive_labels, true)?,
    };
    let mut split_rng = seeded_rng(cfg.seed, STREAM_SPLIT);
    let (test_split, train_pool) = split_test(&full, cfg.test_fraction, &mut split_rng)?;
    let parts = partition(&train_pool, &cfg.partition_spec()?, &mut split_rng)?;

    let mut consensus_rng = seeded_rng(cfg.seed, STREAM_CONSENSUS);
    let validator_set = ValidatorSet::assign(
        cfg.validators,
        cfg.adversarial_fraction,
        cfg.silent_fraction,
        &mut consensus_rng,
    )?;

    let threshold = cfg.model_threshold;
    let mut global = Weights::zeros(full.feature_dim());
    let weight_dim = global.dim();
    let mut chain = Chain::genesis(cfg.ledger_epoch, weights_digest(&global));
    let mut archive = UpdateArchive::new();
    let mut reputations = ReputationLedger::new(0..cfg.nodes);
    let mut events: Vec<String> = Vec::new();

    let mut nodes: Vec<NodeState> = parts
        .into_iter()
        .enumerate()
        .map(|(i, part)| NodeState {
            id: i as u32,
            model: global.clone(),
            rng: seeded_rng(cfg.seed, STREAM_NODE_BASE + i as u64),
            poisoned: cfg.poisoned_nodes.contains(&(i as u32)),
            train: part.train,
            holdout: part.holdout,
        })
        .collect();
    for node in &nodes {
        if node.train.is_empty() {
            events.push(format!(
                "node {} received no training rows and sits out every round",
                node.id
            ));
        }
    }

    let initial_metrics = evaluate(&global, &test_split, threshold)?;
    // Every broadcast sends the dense model to every node.
    let broadcast_bytes = cfg.nodes as u64 * (cfg.header_bytes as u64 + 4 * weight_dim as u64);
    let mut metrics: Vec<RoundMetrics> = Vec::with_capacity(cfg.rounds as usize);

    for round in 1..=cfg.rounds {
        let transmit = round % cfg.update_every == 0;

        // Local training happens every round, transmissions or not.
        let step = |node: &mut NodeState| -> Result<Option<TrainedNode>> {
            if node.train.is_empty() {
                return Ok(None);
            }
            let eval = if node.holdout.is_empty() {
                &node.train
            } else {
                &node.holdout
            };
            let start = node.model.clone();
            let outcome = local_training_round(
                &node.train,
                eval,
                &start,
                &cfg.train,
                &cfg.dp,
                threshold,
                &mut node.rng,
            )?;
            node.model = outcome.weights.clone();
            Ok(Some(TrainedNode {
                id: node.id,
                loss: local_loss(&outcome.weights, &node.train)?,
                sample_count: node.train.len() as u64,
                weights: outcome.weights,
                anomaly: outcome.anomaly_score,
            }))
        };
        let trained: Vec<Option<TrainedNode>> = if cfg.parallel {
            nodes.par_iter_mut().map(step).collect::<Result<_>>()?
        } else {
            nodes.iter_mut().map(step).collect::<Result<_>>()?
        };

        let losses: Vec<f64> = trained
            .iter()
            .flatten()
            .map(|t| t.loss.as_f64())
            .collect();
        let mean_local_loss = if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };

        let mut uplink_bytes = 0u64;
        let mut round_cost = 0.0;
        let mut divergences: Vec<f64> = Vec::new();
        let mut records: Vec<LedgerRecord> = Vec::new();
        let mut accepted: Vec<WeightedContribution<Real>> = Vec::new();
        let mut new_global = global.clone();

        if transmit {
            for (i, t) in trained.iter().enumerate() {
                let Some(t) = t else { continue };
                let node = &mut nodes[i];

                // A poisoned node scales its true delta away from the
                // shared model; its anomaly score is re-measured on what
                // it actually submits.
                let (submitted, anomaly) = if node.poisoned {
                    let delta = t.weights.vector().sub(global.vector())?;
                    let skewed = global.vector().add(&delta.scale(cfg.poison_scale))?;
                    let w = Weights::from_vector(skewed)?;
                    let eval = if node.holdout.is_empty() {
                        &node.train
                    } else {
                        &node.holdout
                    };
                    let a = anomaly_score(&w, eval, threshold)?;
                    (w, a)
                } else {
                    (t.weights.clone(), t.anomaly)
                };

                // Encode for the wire, then reconstruct exactly as the
                // coordinator would: the reconstruction is what gets
                // validated, archived, and averaged.
                let payload = if cfg.sparsity_rho >= 1.0 {
                    dense_encode(submitted.vector(), cfg.header_bytes)
                } else {
                    let delta = submitted.vector().sub(global.vector())?;
                    sparsify_topk(&delta, cfg.sparsity_rho, cfg.header_bytes)?
                };
                let reconstructed = if cfg.sparsity_rho >= 1.0 {
                    Weights::from_vector(densify(&payload, weight_dim)?)?
                } else {
                    Weights::from_vector(global.vector().add(&densify(&payload, weight_dim)?)?)?
                };

                let update = LocalUpdate {
                    node_id: t.id,
                    weights: reconstructed,
                    anomaly_score: anomaly,
                    round_index: round,
                    payload,
                };
                let verdict = if cfg.contract_enabled {
                    validate_update(&update, &global, &cfg.contract)
                } else {
                    Verdict::accept()
                };

                let payload_bytes = update.payload.payload_bytes();
                uplink_bytes += payload_bytes;
                let latency = cfg.latencies.get(&t.id).copied().unwrap_or(0.0);
                round_cost += update_cost(payload_bytes, latency, &cfg.cost);
                divergences.push(divergence(&update.weights, &global)?.as_f64());

                records.push(LedgerRecord {
                    node_id: t.id,
                    weights_digest: archive.insert(&update),
                    anomaly_score: update.anomaly_score.as_f64(),
                    verdict,
                    payload_bytes,
                });
                if verdict.accepted() {
                    accepted.push(WeightedContribution {
                        node_id: t.id,
                        weights: update.weights,
                        sample_count: t.sample_count,
                    });
                }
            }

            if accepted.is_empty() {
                events.push(format!(
                    "round {round}: every update was rejected, shared model carried forward"
                ));
            } else {
                new_global = match cfg.aggregation_mode {
                    AggregationMode::Plain => fed_avg(&accepted)?,
                    AggregationMode::TrustWeighted => {
                        let snapshot = reputations.snapshot();
                        let accepted_trust: f64 = snapshot
                            .iter()
                            .filter(|(id, _)| accepted.iter().any(|c| c.node_id == *id))
                            .map(|(_, r)| *r)
                            .sum();
                        if accepted_trust > 0.0 {
                            let trust = trust_weights(&snapshot)?;
                            trust_weighted_avg(&accepted, &trust)?
                        } else {
                            // No reputation yet (always the first transmit
                            // round): fall back to the plain average.
                            events.push(format!(
                                "round {round}: no accrued trust, plain average used"
                            ));
                            fed_avg(&accepted)?
                        }
                    }
                };
            }

            // Reputation moves only after the round's aggregate is fixed,
            // so this round's trust weights came from prior rounds.
            reputations.start_round();
            for r in &records {
                reputations.update_reputation(r.node_id, r.verdict, cfg.contract.reputation_step())?;
            }
        }

        let block = Block::build(
            chain.tip().height() + 1,
            chain.tip_hash(),
            cfg.ledger_epoch + round as u64,
            records,
            weights_digest(&new_global),
            cfg.max_block_bytes,
        )?;
        let announced = block_hash(&block);
        let vote = run_consensus_round(&validator_set, &block, &announced);
        let (ledger_bytes, gas) = if vote.committed {
            let size = block.size_bytes();
            let gas = gas_cost(&block, cfg.gas_per_byte);
            chain.append_block(block)?;
            (size, gas)
        } else {
            events.push(format!(
                "round {round}: consensus failed ({} approvals of {}), block dropped",
                vote.approvals, vote.total
            ));
            (0, 0.0)
        };

        let (transmitted, accepted_count) = {
            let total = divergences.len() as u32;
            (total, accepted.len() as u32)
        };
        let downlink_bytes = if transmit {
            // Broadcast of the (possibly carried) aggregate to every node.
            global = new_global;
            for node in nodes.iter_mut() {
                node.model = global.clone();
            }
            broadcast_bytes
        } else {
            0
        };

        let eval = evaluate(&global, &test_split, threshold)?;
        let (mean_divergence, max_divergence) = if divergences.is_empty() {
            (0.0, 0.0)
        } else {
            (
                divergences.iter().sum::<f64>() / divergences.len() as f64,
                divergences.iter().cloned().fold(0.0, f64::max),
            )
        };
        metrics.push(RoundMetrics {
            round,
            accuracy: eval.accuracy,
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            mean_local_loss,
            uplink_bytes,
            downlink_bytes,
            ledger_bytes,
            gas,
            update_cost: round_cost,
            transmitted,
            accepted: accepted_count,
            rejected: transmitted - accepted_count,
            approvals: vote.approvals as u32,
            validators: vote.total as u32,
            committed: vote.committed,
            mean_divergence,
            max_divergence,
        });
    }

    let accuracies: Vec<f64> = metrics.iter().map(|m| m.accuracy).collect();
    let rounds_to_target = sustained_target_round(&accuracies, cfg.target_accuracy);
    let snapshot = reputations.snapshot();
    let trust = trust_weights(&snapshot)
        .map(|t| t.shares().to_vec())
        .unwrap_or_default();

    Ok(SimulationOutput {
        initial_metrics,
        rounds: metrics,
        chain,
        archive,
        final_weights: global,
        rounds_to_target,
        reputations: snapshot,
        trust,
        events,
        node_sizes: nodes
            .iter()
            .map(|n| (n.id, n.train.len(), n.holdout.len()))
            .collect(),
        test_rows: test_split.len(),
        test_positive_fraction: test_split.positive_fraction(),
    })
}
