//! Flat `key = value` simulation configuration.
//!
//! One assignment per line, `#` comments, blank lines ignored. Every key
//! has a default, so the empty string parses to the stock ten-node setup;
//! unknown or repeated keys are errors so typos cannot silently fall back
//! to defaults. Values are validated both individually (types, ranges)
//! and jointly (poisoned ids must name existing nodes, a CSV source needs
//! a path).

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::contract::ContractPolicy;
use crate::data::{PartitionMode, PartitionSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::{DpConfig, TrainConfig};
use crate::transport::{CostParams, DEFAULT_HEADER_BYTES};
use crate::Real;

/// How accepted updates are combined each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Sample-count weighted mean over accepted updates.
    Plain,
    /// Sample counts scaled by normalized reputation shares.
    TrustWeighted,
}

/// Where training rows come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    Csv(PathBuf),
}

/// Fully resolved simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub nodes: u32,
    pub rounds: u32,
    pub seed: u64,
    /// Train nodes on worker threads; results are identical either way.
    pub parallel: bool,
    pub aggregation_mode: AggregationMode,
    pub train: TrainConfig<Real>,
    pub dp: DpConfig<Real>,
    /// Decision threshold for classifying a score as positive.
    pub model_threshold: f64,
    /// Accuracy the run is considered converged at.
    pub target_accuracy: f64,
    /// When false, every well-formed update is accepted unchecked.
    pub contract_enabled: bool,
    pub contract: ContractPolicy,
    pub validators: u32,
    pub adversarial_fraction: f64,
    pub silent_fraction: f64,
    pub gas_per_byte: f64,
    pub max_block_bytes: u64,
    /// Timestamp of the genesis block; later blocks tick up by one.
    pub ledger_epoch: u64,
    /// Fraction of delta coordinates transmitted; 1 sends dense weights.
    pub sparsity_rho: f64,
    /// Nodes transmit every this-many rounds and train locally between.
    pub update_every: u32,
    pub header_bytes: u32,
    pub cost: CostParams,
    /// Per-node link latency used in the update cost; missing ids get 0.
    pub latencies: BTreeMap<u32, f64>,
    pub data_source: DataSource,
    pub label_column: String,
    /// Label values mapped to the positive class when loading CSV rows;
    /// the first entry also names positive rows in generated CSVs.
    pub positive_labels: Vec<String>,
    /// Fraction of all rows held back as the shared evaluation split.
    pub test_fraction: f64,
    pub synthetic: SyntheticSpec,
    pub partition_mode: PartitionMode,
    pub partition_concentration: f64,
    pub holdout_fraction: f64,
    pub poisoned_nodes: Vec<u32>,
    /// Poisoned nodes submit `global + scale * (trained - global)`.
    pub poison_scale: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            nodes: 10,
            rounds: 50,
            seed: 7,
            parallel: true,
            aggregation_mode: AggregationMode::TrustWeighted,
            train: TrainConfig::new(0.01, 3, 64).expect("stock training parameters"),
            dp: DpConfig::new(1.0, 1.0).expect("stock privacy parameters"),
            model_threshold: 0.5,
            target_accuracy: 0.95,
            contract_enabled: true,
            contract: ContractPolicy::new(5.0, 0.5, 1.0).expect("stock policy"),
            validators: 10,
            adversarial_fraction: 0.0,
            silent_fraction: 0.0,
            gas_per_byte: 1.0,
            max_block_bytes: 2 * 1024 * 1024,
            ledger_epoch: 0,
            sparsity_rho: 1.0,
            update_every: 1,
            header_bytes: DEFAULT_HEADER_BYTES,
            cost: CostParams::default(),
            latencies: BTreeMap::new(),
            data_source: DataSource::Synthetic,
            label_column: "label".into(),
            positive_labels: vec!["attack".into()],
            test_fraction: 0.2,
            synthetic: SyntheticSpec::new(10_000, 20, 0.5, 0.5, 0.0)
                .expect("stock synthetic data parameters"),
            partition_mode: PartitionMode::Iid,
            partition_concentration: 0.5,
            holdout_fraction: 0.1,
            poisoned_nodes: Vec::new(),
            poison_scale: -5.0,
        }
    }
}

impl SimulationConfig {
    /// Per-node partition spec implied by the node and split settings.
    pub fn partition_spec(&self) -> Result<PartitionSpec> {
        PartitionSpec::new(
            self.nodes as usize,
            self.partition_mode,
            self.partition_concentration,
            self.holdout_fraction,
        )
    }

    /// Cross-field checks that individual setters cannot see.
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidParameter("node count must be at least 1".into()));
        }
        if self.validators == 0 {
            return Err(Error::InvalidParameter(
                "validator count must be at least 1".into(),
            ));
        }
        if self.update_every == 0 {
            return Err(Error::InvalidParameter(
                "transmit interval must be at least 1".into(),
            ));
        }
        if !(self.sparsity_rho > 0.0 && self.sparsity_rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity fraction must lie in (0, 1], got {}",
                self.sparsity_rho
            )));
        }
        if !(self.model_threshold > 0.0 && self.model_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decision threshold must lie in (0, 1), got {}",
                self.model_threshold
            )));
        }
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target accuracy must lie in (0, 1], got {}",
                self.target_accuracy
            )));
        }
        if !(self.gas_per_byte.is_finite() && self.gas_per_byte >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gas per byte must be non-negative, got {}",
                self.gas_per_byte
            )));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::InvalidParameter(format!(
                "test fraction must lie in [0, 1), got {}",
                self.test_fraction
            )));
        }
        if !(self.poison_scale.is_finite()) {
            return Err(Error::InvalidParameter(
                "poison scale must be finite".into(),
            ));
        }
        for (what, f) in [
            ("adversarial fraction", self.adversarial_fraction),
            ("silent fraction", self.silent_fraction),
        ] {
            if !(f.is_finite() && (0.0..=1.0).contains(&f)) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must lie in [0, 1], got {f}"
                )));
            }
        }
        if self.adversarial_fraction + self.silent_fraction > 1.0 {
            return Err(Error::InvalidParameter(
                "validator fault fractions sum past 1".into(),
            ));
        }
        for &id in &self.poisoned_nodes {
            if id >= self.nodes {
                return Err(Error::UnknownNode(id));
            }
        }
        for (&id, &latency) in &self.latencies {
            if id >= self.nodes {
                return Err(Error::UnknownNode(id));
            }
            if !(latency.is_finite() && latency >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "latency for node {id} must be non-negative, got {latency}"
                )));
            }
        }
        if let DataSource::Csv(path) = &self.data_source {
            if path.as_os_str().is_empty() {
                return Err(Error::InvalidParameter(
                    "csv data source needs data.csv_path".into(),
                ));
            }
        }
        if self.positive_labels.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one positive label value is required".into(),
            ));
        }
        self.partition_spec()?;
        Ok(())
    }
}

/// Parses configuration text over the defaults. `--seed`-style overrides
/// belong after this call, followed by [`SimulationConfig::validate`].
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::default();
    let mut validators_set = false;
    let mut csv_path: Option<PathBuf> = None;
    let mut source_kind: Option<String> = None;
    let mut seen = std::collections::BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail("expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(fail(format!("key `{key}` is set twice")));
        }

        let as_u32 = || -> Result<u32> {
            value
                .parse()
                .map_err(|e| fail(format!("`{key}` wants an unsigned integer: {e}")))
        };
        let as_u64 = || -> Result<u64> {
            value
                .parse()
                .map_err(|e| fail(format!("`{key}` wants an unsigned integer: {e}")))
        };
        let as_usize = || -> Result<usize> {
            value
                .parse()
                .map_err(|e| fail(format!("`{key}` wants an unsigned integer: {e}")))
        };
        let as_f64 = || -> Result<f64> {
            value
                .parse()
                .map_err(|e| fail(format!("`{key}` wants a number: {e}")))
        };
        let as_bool = || -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(fail(format!("`{key}` wants true or false, got `{other}`"))),
            }
        };
        let as_id_list = || -> Result<Vec<u32>> {
            if value.is_empty() {
                return Ok(Vec::new());
            }
            value
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse()
                        .map_err(|e| fail(format!("`{key}` wants node ids: {e}")))
                })
                .collect()
        };

        match key {
            "nodes" => cfg.nodes = as_u32()?,
            "rounds" => cfg.rounds = as_u32()?,
            "seed" => cfg.seed = as_u64()?,
            "parallel" => cfg.parallel = as_bool()?,
            "aggregation.mode" => {
                cfg.aggregation_mode = match value {
                    "plain" => AggregationMode::Plain,
                    "trust" => AggregationMode::TrustWeighted,
                    other => {
                        return Err(fail(format!(
                            "`{key}` wants plain or trust, got `{other}`"
                        )))
                    }
                }
            }
            "train.learning_rate" => cfg.train.learning_rate = as_f64()?,
            "train.epochs" => cfg.train.local_epochs = as_usize()?,
            "train.batch_size" => cfg.train.batch_size = as_usize()?,
            "dp.clip_norm" => {
                cfg.dp = DpConfig::new(as_f64()?, cfg.dp.noise_scale()).map_err(|e| fail(e.to_string()))?
            }
            "dp.noise_scale" => {
                cfg.dp = DpConfig::new(cfg.dp.clip_norm(), as_f64()?).map_err(|e| fail(e.to_string()))?
            }
            "model.threshold" => cfg.model_threshold = as_f64()?,
            "metrics.target_accuracy" => cfg.target_accuracy = as_f64()?,
            "contract.enabled" => cfg.contract_enabled = as_bool()?,
            "contract.max_divergence" => {
                cfg.contract = ContractPolicy::new(
                    as_f64()?,
                    cfg.contract.max_anomaly(),
                    cfg.contract.reputation_step(),
                )
                .map_err(|e| fail(e.to_string()))?
            }
            "contract.max_anomaly" => {
                cfg.contract = ContractPolicy::new(
                    cfg.contract.max_divergence(),
                    as_f64()?,
                    cfg.contract.reputation_step(),
                )
                .map_err(|e| fail(e.to_string()))?
            }
            "contract.reputation_step" => {
                cfg.contract = ContractPolicy::new(
                    cfg.contract.max_divergence(),
                    cfg.contract.max_anomaly(),
                    as_f64()?,
                )
                .map_err(|e| fail(e.to_string()))?
            }
            "consensus.validators" => {
                cfg.validators = as_u32()?;
                validators_set = true;
            }
            "consensus.adversarial_fraction" => cfg.adversarial_fraction = as_f64()?,
            "consensus.silent_fraction" => cfg.silent_fraction = as_f64()?,
            "ledger.gas_per_byte" => cfg.gas_per_byte = as_f64()?,
            "ledger.max_block_bytes" => cfg.max_block_bytes = as_u64()?,
            "ledger.epoch" => cfg.ledger_epoch = as_u64()?,
            "transport.sparsity_rho" => cfg.sparsity_rho = as_f64()?,
            "transport.update_every" => cfg.update_every = as_u32()?,
            "transport.header_bytes" => cfg.header_bytes = as_u32()?,
            "cost.alpha" => {
                cfg.cost = CostParams::new(as_f64()?, cfg.cost.beta).map_err(|e| fail(e.to_string()))?
            }
            "cost.beta" => {
                cfg.cost = CostParams::new(cfg.cost.alpha, as_f64()?).map_err(|e| fail(e.to_string()))?
            }
            "data.source" => source_kind = Some(value.to_string()),
            "data.csv_path" => csv_path = Some(PathBuf::from(value)),
            "data.label_column" => cfg.label_column = value.to_string(),
            "data.positive_labels" => {
                cfg.positive_labels = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "data.test_fraction" => cfg.test_fraction = as_f64()?,
            "synthetic.samples" => cfg.synthetic.samples = as_usize()?,
            "synthetic.features" => cfg.synthetic.features = as_usize()?,
            "synthetic.class_balance" => cfg.synthetic.class_balance = as_f64()?,
            "synthetic.margin" => cfg.synthetic.margin = as_f64()?,
            "synthetic.noise_std" => cfg.synthetic.noise_std = as_f64()?,
            "partition.mode" => {
                cfg.partition_mode = match value {
                    "iid" => PartitionMode::Iid,
                    "label_skew" => PartitionMode::LabelSkew,
                    other => {
                        return Err(fail(format!(
                            "`{key}` wants iid or label_skew, got `{other}`"
                        )))
                    }
                }
            }
            "partition.concentration" => cfg.partition_concentration = as_f64()?,
            "partition.holdout_fraction" => cfg.holdout_fraction = as_f64()?,
            "attack.poisoned_nodes" => cfg.poisoned_nodes = as_id_list()?,
            "attack.poison_scale" => cfg.poison_scale = as_f64()?,
            other if other.starts_with("cost.latency.") => {
                let id: u32 = other["cost.latency.".len()..]
                    .parse()
                    .map_err(|e| fail(format!("latency key wants a node id: {e}")))?;
                cfg.latencies.insert(id, as_f64()?);
            }
            other => return Err(fail(format!("unknown key `{other}`"))),
        }
    }

    match source_kind.as_deref() {
        None | Some("synthetic") => cfg.data_source = DataSource::Synthetic,
        Some("csv") => {
            cfg.data_source = DataSource::Csv(csv_path.clone().unwrap_or_default());
        }
        Some(other) => {
            return Err(Error::InvalidParameter(format!(
                "data.source wants synthetic or csv, got `{other}`"
            )))
        }
    }
    if source_kind.as_deref() != Some("csv") {
        if let Some(path) = csv_path {
            // A path with a synthetic source is almost certainly a mistake.
            return Err(Error::InvalidParameter(format!(
                "data.csv_path `{}` is set but data.source is not csv",
                path.display()
            )));
        }
    }
    if !validators_set {
        cfg.validators = cfg.nodes;
    }

    // Re-run constructors whose fields were assigned piecemeal.
    cfg.train = TrainConfig::new(
        cfg.train.learning_rate,
        cfg.train.local_epochs,
        cfg.train.batch_size,
    )?;
    cfg.synthetic = SyntheticSpec::new(
        cfg.synthetic.samples,
        cfg.synthetic.features,
        cfg.synthetic.class_balance,
        cfg.synthetic.margin,
        cfg.synthetic.noise_std,
    )?;
    cfg.validate()?;
    Ok(cfg)
}
