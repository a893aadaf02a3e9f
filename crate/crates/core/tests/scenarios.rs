//! Mixed end-to-end scenarios beyond the acceptance gate: skewed data,
//! faulty committees, and full artifact round-trips.

use fedchain_core::config::{AggregationMode, SimulationConfig};
use fedchain_core::data::{PartitionMode, SyntheticSpec};
use fedchain_core::driver::run_simulation;
use fedchain_core::ledger::{export_chain, parse_export, verify_export, ChainVerdict};
use fedchain_core::model::{DpConfig, TrainConfig};

fn base_config() -> SimulationConfig {
    let mut cfg = SimulationConfig::default();
    cfg.nodes = 5;
    cfg.validators = 5;
    cfg.rounds = 12;
    cfg.synthetic = SyntheticSpec::new(1_000, 8, 0.5, 0.5, 0.0).unwrap();
    cfg.train = TrainConfig::new(0.2, 2, 32).unwrap();
    cfg.dp = DpConfig::new(1.0, 0.2).unwrap();
    cfg.seed = 21;
    cfg
}

#[test]
fn label_skewed_nodes_still_train_a_shared_model() {
    let mut cfg = base_config();
    cfg.partition_mode = PartitionMode::LabelSkew;
    cfg.partition_concentration = 0.3;
    let out = run_simulation(&cfg).unwrap();

    // Skewed shares are unequal in size, yet the aggregate still
    // learns the task.
    let sizes: Vec<usize> = out.node_sizes.iter().map(|(_, n, _)| *n).collect();
    assert!(sizes.iter().any(|&n| n != sizes[0]), "shares {sizes:?}");
    let last = out.rounds.last().unwrap();
    assert!(
        last.accuracy > 0.9,
        "skewed shares should still converge, got {}",
        last.accuracy
    );
    assert_eq!(out.chain.verify(Some(&out.archive)), ChainVerdict::Valid);
}

#[test]
fn an_adversarial_minority_cannot_stop_commitment() {
    let mut cfg = base_config();
    cfg.validators = 10;
    cfg.adversarial_fraction = 0.3;
    cfg.silent_fraction = 0.1;
    let out = run_simulation(&cfg).unwrap();
    for m in &out.rounds {
        assert!(m.committed, "round {} should commit", m.round);
        assert_eq!(m.approvals, 6, "six honest validators approve");
        assert_eq!(m.validators, 10);
    }
    assert_eq!(out.chain.blocks().len(), 13);
}

#[test]
fn exports_round_trip_through_text_and_reverify() {
    let cfg = base_config();
    let out = run_simulation(&cfg).unwrap();
    let text = export_chain(&out.chain);
    let (parsed, _) = parse_export(&text).unwrap();
    assert_eq!(parsed.blocks(), out.chain.blocks());
    assert_eq!(
        verify_export(&text, Some(&out.archive)).unwrap(),
        ChainVerdict::Valid
    );
}

#[test]
fn trust_weighting_shifts_weight_toward_reliable_nodes() {
    let mut cfg = base_config();
    cfg.rounds = 10;
    cfg.aggregation_mode = AggregationMode::TrustWeighted;
    cfg.poisoned_nodes = vec![4];
    cfg.poison_scale = -5.0;
    cfg.contract = fedchain_core::contract::ContractPolicy::new(1.2, 0.5, 1.0).unwrap();
    let out = run_simulation(&cfg).unwrap();

    let share = |id: u32| {
        out.trust
            .iter()
            .find(|(n, _)| *n == id)
            .map(|(_, s)| *s)
            .unwrap_or(0.0)
    };
    for honest in 0..4 {
        assert!(
            share(honest) > share(4),
            "node {honest} should out-rank the poisoner"
        );
    }
    let total: f64 = out.trust.iter().map(|(_, s)| s).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
