//! Dataset ingestion, synthetic traffic generation, and federated
//! partitioning.
//!
//! Feature schemas are generic: any CSV with numeric feature columns and a
//! designated label column loads into a [`LabeledDataset`], with labels
//! mapped to {0, 1} through a set of positive label values. The synthetic
//! generator produces a linearly separable binary problem (plus optional
//! label noise) so convergence behavior can be studied without external
//! captures.

use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::numerics::{gaussian_sample, RealVector, StreamRng};
use crate::Scalar;

/// Rows of numeric features with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<S> {
    features: Vec<RealVector<S>>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl<S: Scalar> LabeledDataset<S> {
    /// Validates shape consistency: one label per row, every row of the
    /// feature dimension, labels in {0, 1}, one name per feature column.
    pub fn new(
        features: Vec<RealVector<S>>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = feature_names.len();
        if let Some(bad) = features.iter().position(|row| row.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: features[bad].dim(),
            });
        }
        if let Some(bad) = labels.iter().position(|l| *l > 1) {
            return Err(Error::InvalidParameter(format!(
                "label at row {bad} is not binary"
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, index: usize) -> (&RealVector<S>, u8) {
        (&self.features[index], self.labels[index])
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|l| **l == 1).count() as f64 / self.labels.len() as f64
    }

    /// New dataset holding the given rows, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|i| self.features[*i].clone()).collect(),
            labels: indices.iter().map(|i| self.labels[*i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Parameters of the synthetic linearly separable problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub features: usize,
    /// Target fraction of positive rows, in (0, 1).
    pub class_balance: f64,
    /// Minimum distance of any row from the separating hyperplane.
    pub margin: f64,
    /// Standard deviation of the label noise added to the decision score;
    /// zero keeps the dataset exactly separable.
    pub noise_std: f64,
}

impl SyntheticSpec {
    pub fn new(
        samples: usize,
        features: usize,
        class_balance: f64,
        margin: f64,
        noise_std: f64,
    ) -> Result<Self> {
        if samples == 0 || features == 0 {
            return Err(Error::InvalidParameter(
                "synthetic dataset needs at least one sample and one feature".into(),
            ));
        }
        if !(class_balance > 0.0 && class_balance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "class balance must lie in (0, 1), got {class_balance}"
            )));
        }
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "margin must be positive, got {margin}"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "label noise std must be nonnegative, got {noise_std}"
            )));
        }
        Ok(Self {
            samples,
            features,
            class_balance,
            margin,
            noise_std,
        })
    }
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            samples: 10_000,
            features: 20,
            class_balance: 0.5,
            margin: 0.5,
            noise_std: 0.0,
        }
    }
}

/// Draws a hidden unit-norm direction, Gaussian feature rows, and labels
/// from the signed distance to a hyperplane chosen so that roughly
/// `class_balance` of the rows land positive. Rows inside the margin band
/// are pushed out along the hidden direction, so with zero label noise the
/// dataset is linearly separable with at least the requested margin.
///
/// Draw order from `rng`: hidden direction, then feature rows in row-major
/// order, then (only if `noise_std > 0`) one score noise draw per row.
pub fn generate_synthetic<S: Scalar>(
    spec: &SyntheticSpec,
    rng: &mut StreamRng,
) -> Result<LabeledDataset<S>> {
    let n = spec.samples;
    let d = spec.features;

    let direction_raw: RealVector<f64> = gaussian_sample(rng, 0.0, 1.0, d)?;
    let norm = direction_raw.l2_norm();
    let direction = if norm > 0.0 {
        direction_raw.scale(1.0 / norm)
    } else {
        // Astronomically unlikely; fall back to the first axis.
        let mut axis = vec![0.0; d];
        axis[0] = 1.0;
        RealVector::new(axis)
    };

    let flat: RealVector<f64> = gaussian_sample(rng, 0.0, 1.0, n * d)?;
    let mut rows: Vec<Vec<f64>> = flat
        .as_slice()
        .chunks(d)
        .map(|chunk| chunk.to_vec())
        .collect();

    let mut scores: Vec<f64> = rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(direction.as_slice())
                .map(|(x, w)| x * w)
                .sum()
        })
        .collect();

    // Bias search: place the hyperplane at the score quantile that yields
    // the requested positive fraction.
    let positives = ((spec.class_balance * n as f64).round() as usize).min(n);
    let bias = if positives == 0 {
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        -(max + 1.0)
    } else {
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        -sorted[n - positives]
    };

    // Push rows inside the margin band out along the hidden direction.
    for (row, score) in rows.iter_mut().zip(scores.iter_mut()) {
        let signed = *score + bias;
        let target = if signed >= 0.0 {
            spec.margin
        } else {
            -spec.margin
        };
        if signed.abs() < spec.margin {
            let shift = target - signed;
            for (x, w) in row.iter_mut().zip(direction.as_slice()) {
                *x += shift * w;
            }
            *score = target - bias;
        }
    }

    let noise: Option<RealVector<f64>> = if spec.noise_std > 0.0 {
        Some(gaussian_sample(rng, 0.0, spec.noise_std, n)?)
    } else {
        None
    };

    let labels: Vec<u8> = scores
        .iter()
        .enumerate()
        .map(|(i, score)| {
            let eps = noise.as_ref().map_or(0.0, |v| v[i]);
            u8::from(score + bias + eps >= 0.0)
        })
        .collect();

    let features: Vec<RealVector<S>> = rows
        .iter()
        .map(|row| RealVector::from_f64_slice(row))
        .collect();
    let names = (0..d).map(|j| format!("f{j}")).collect();
    LabeledDataset::new(features, labels, names)
}

/// How rows are spread across nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Seeded shuffle, near-equal contiguous shares (sizes differ by at
    /// most one row).
    Iid,
    /// Per-label Dirichlet allocation; lower concentration means stronger
    /// label skew across nodes.
    LabelSkew,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub node_count: usize,
    pub mode: PartitionMode,
    /// Dirichlet concentration for [`PartitionMode::LabelSkew`].
    pub concentration: f64,
    /// Fraction of each node's share held out for local evaluation.
    pub holdout_fraction: f64,
}

impl PartitionSpec {
    pub fn new(
        node_count: usize,
        mode: PartitionMode,
        concentration: f64,
        holdout_fraction: f64,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidParameter("node count must be positive".into()));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet concentration must be positive, got {concentration}"
            )));
        }
        if !(0.0..1.0).contains(&holdout_fraction) {
            return Err(Error::InvalidParameter(format!(
                "holdout fraction must lie in [0, 1), got {holdout_fraction}"
            )));
        }
        Ok(Self {
            node_count,
            mode,
            concentration,
            holdout_fraction,
        })
    }
}

/// One node's local data: a training share and a held-out evaluation share.
#[derive(Debug, Clone)]
pub struct NodeData<S> {
    pub train: LabeledDataset<S>,
    pub holdout: LabeledDataset<S>,
}

/// Splits `dataset` across `spec.node_count` nodes. Shares are disjoint and
/// jointly exhaustive; each node's holdout is carved from its own share
/// after a seeded shuffle, taking `floor(holdout_fraction * share)` rows.
pub fn partition<S: Scalar>(
    dataset: &LabeledDataset<S>,
    spec: &PartitionSpec,
    rng: &mut StreamRng,
) -> Result<Vec<NodeData<S>>> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyInput("dataset"));
    }
    if spec.node_count > n {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n} rows across {} nodes",
            spec.node_count
        )));
    }

    let shares: Vec<Vec<usize>> = match spec.mode {
        PartitionMode::Iid => iid_shares(n, spec.node_count, rng),
        PartitionMode::LabelSkew => {
            label_skew_shares(dataset.labels(), spec.node_count, spec.concentration, rng)
        }
    };

    let mut nodes = Vec::with_capacity(spec.node_count);
    for mut share in shares {
        rng.shuffle(&mut share);
        let holdout_len = (spec.holdout_fraction * share.len() as f64).floor() as usize;
        let split = share.len() - holdout_len;
        nodes.push(NodeData {
            train: dataset.subset(&share[..split]),
            holdout: dataset.subset(&share[split..]),
        });
    }
    Ok(nodes)
}

/// Carves a seeded global test split of `floor(fraction * n)` rows; returns
/// `(test, rest)`.
pub fn split_test<S: Scalar>(
    dataset: &LabeledDataset<S>,
    fraction: f64,
    rng: &mut StreamRng,
) -> Result<(LabeledDataset<S>, LabeledDataset<S>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n = dataset.len();
    let mut indices: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut indices);
    let test_len = (fraction * n as f64).floor() as usize;
    Ok((
        dataset.subset(&indices[..test_len]),
        dataset.subset(&indices[test_len..]),
    ))
}

fn iid_shares(n: usize, nodes: usize, rng: &mut StreamRng) -> Vec<Vec<usize>> {
    let mut indices: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut indices);
    let base = n / nodes;
    let remainder = n % nodes;
    let mut shares = Vec::with_capacity(nodes);
    let mut at = 0;
    for i in 0..nodes {
        let size = base + usize::from(i < remainder);
        shares.push(indices[at..at + size].to_vec());
        at += size;
    }
    shares
}

fn label_skew_shares(
    labels: &[u8],
    nodes: usize,
    concentration: f64,
    rng: &mut StreamRng,
) -> Vec<Vec<usize>> {
    let mut shares: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for label in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == label).collect();
        if rows.is_empty() {
            continue;
        }
        rng.shuffle(&mut rows);
        let proportions = dirichlet_proportions(nodes, concentration, rng);
        let counts = apportion(rows.len(), &proportions);
        let mut at = 0;
        for (node, count) in counts.into_iter().enumerate() {
            shares[node].extend_from_slice(&rows[at..at + count]);
            at += count;
        }
    }
    shares
}

/// Symmetric Dirichlet draw as normalized Gamma samples, one per node.
fn dirichlet_proportions(nodes: usize, concentration: f64, rng: &mut StreamRng) -> Vec<f64> {
    let gamma = rand_distr::Gamma::new(concentration, 1.0)
        .expect("concentration validated at spec construction");
    let draws: Vec<f64> = (0..nodes).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter().map(|g| g / total).collect()
    } else {
        // Extreme concentrations can underflow every draw; degrade to
        // an even split rather than dividing by zero.
        vec![1.0 / nodes as f64; nodes]
    }
}

/// Largest-remainder apportionment of `total` items by `proportions`;
/// deterministic, ties resolved toward lower indices.
fn apportion(total: usize, proportions: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(proportions.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(proportions.len());
    let mut assigned = 0;
    for (i, p) in proportions.iter().enumerate() {
        let exact = p * total as f64;
        let floor = exact.floor() as usize;
        counts.push(floor);
        assigned += floor;
        remainders.push((i, exact - floor as f64));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, _) in remainders.into_iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Loads a CSV with a header row into a dataset. Every column other than
/// `label_column` must parse as a finite number; parse failures name the
/// offending row (1-based, excluding the header) and column. Labels map to
/// 1 when the raw value is in `positive_labels`, 0 otherwise. When
/// `normalize` is set, each feature is min-max scaled to [0, 1] over the
/// whole file; constant columns collapse to zero.
pub fn load_csv<S: Scalar>(
    path: &std::path::Path,
    label_column: &str,
    positive_labels: &[String],
    normalize: bool,
) -> Result<LabeledDataset<S>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_at)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = row_index + 1;
        if record.len() != headers.len() {
            return Err(Error::BadCell {
                row: row_no,
                column: String::from("<record>"),
                message: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (col, raw) in record.iter().enumerate() {
            if col == label_at {
                labels.push(u8::from(positive_labels.iter().any(|p| p == raw)));
                continue;
            }
            let value: f64 = raw.parse().map_err(|_| Error::BadCell {
                row: row_no,
                column: headers[col].to_string(),
                message: format!("cannot parse {raw:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::BadCell {
                    row: row_no,
                    column: headers[col].to_string(),
                    message: format!("non-finite value {raw:?}"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv data rows"));
    }

    if normalize {
        min_max_normalize(&mut rows);
    }

    let features = rows
        .iter()
        .map(|row| RealVector::from_f64_slice(row))
        .collect();
    LabeledDataset::new(features, labels, feature_names)
}

/// Per-column min-max scaling to [0, 1]; constant columns map to zero.
fn min_max_normalize(rows: &mut [Vec<f64>]) {
    let dim = rows.first().map_or(0, Vec::len);
    for col in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in rows.iter() {
            lo = lo.min(row[col]);
            hi = hi.max(row[col]);
        }
        let span = hi - lo;
        for row in rows.iter_mut() {
            row[col] = if span > 0.0 { (row[col] - lo) / span } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file.flush().unwrap();
        file
    }

    #[test]
    fn csv_maps_labels_through_positive_set() {
        let file = write_csv("bytes,duration,label\n1.0,2.0,attack\n3.5,0.5,benign\n2.0,9.0,attack\n");
        let ds: LabeledDataset<f64> = load_csv(
            file.path(),
            "label",
            &["attack".to_string()],
            false,
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.feature_dim(), 2);
        assert_eq!(ds.labels(), &[1, 0, 1]);
        assert_eq!(ds.feature_names(), &["bytes".to_string(), "duration".to_string()]);
        assert_eq!(ds.row(1).0.as_slice(), &[3.5, 0.5]);
    }

    #[test]
    fn csv_missing_label_column_is_named() {
        let file = write_csv("a,b\n1,2\n");
        let res: Result<LabeledDataset<f64>> =
            load_csv(file.path(), "label", &["x".into()], false);
        match res {
            Err(Error::MissingColumn(name)) => assert_eq!(name, "label"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn csv_unparsable_cell_reports_row_and_column() {
        let file = write_csv("a,b,label\n1,2,benign\n1,oops,attack\n");
        let res: Result<LabeledDataset<f64>> =
            load_csv(file.path(), "label", &["attack".into()], false);
        match res {
            Err(Error::BadCell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("expected bad cell, got {other:?}"),
        }
    }

    #[test]
    fn csv_normalization_bounds_features_and_zeroes_constants() {
        let file = write_csv("a,c,label\n0.0,7.0,x\n5.0,7.0,x\n10.0,7.0,y\n");
        let ds: LabeledDataset<f64> =
            load_csv(file.path(), "label", &["x".into()], true).unwrap();
        assert_eq!(ds.row(0).0.as_slice(), &[0.0, 0.0]);
        assert_eq!(ds.row(1).0.as_slice(), &[0.5, 0.0]);
        assert_eq!(ds.row(2).0.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn csv_with_no_data_rows_is_an_error() {
        let file = write_csv("a,label\n");
        let res: Result<LabeledDataset<f64>> =
            load_csv(file.path(), "label", &["x".into()], false);
        assert!(matches!(res, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn synthetic_respects_shape_and_balance() {
        let spec = SyntheticSpec::new(10_000, 8, 0.5, 0.5, 0.0).unwrap();
        let mut rng = seeded_rng(42, 0);
        let ds: LabeledDataset<f64> = generate_synthetic(&spec, &mut rng).unwrap();
        assert_eq!(ds.len(), 10_000);
        assert_eq!(ds.feature_dim(), 8);
        let pos = ds.positive_fraction();
        assert!((0.47..=0.53).contains(&pos), "positive fraction {pos}");
    }

    #[test]
    fn synthetic_zero_noise_is_linearly_separable() {
        // Oracle: independent full-batch gradient descent on the logistic
        // loss must reach 100% training accuracy on a separable problem.
        let spec = SyntheticSpec::new(2_000, 10, 0.5, 0.5, 0.0).unwrap();
        let mut rng = seeded_rng(7, 0);
        let ds: LabeledDataset<f64> = generate_synthetic(&spec, &mut rng).unwrap();

        let d = ds.feature_dim();
        let mut w = vec![0.0f64; d + 1];
        for _ in 0..500 {
            let mut grad = vec![0.0f64; d + 1];
            for i in 0..ds.len() {
                let (x, y) = ds.row(i);
                let z: f64 = x
                    .as_slice()
                    .iter()
                    .zip(&w[..d])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + w[d];
                let p = 1.0 / (1.0 + (-z).exp());
                let factor = p - f64::from(y);
                for j in 0..d {
                    grad[j] += factor * x[j];
                }
                grad[d] += factor;
            }
            for g in grad.iter_mut() {
                *g /= ds.len() as f64;
            }
            for j in 0..=d {
                w[j] -= 1.0 * grad[j];
            }
        }
        let correct = (0..ds.len())
            .filter(|&i| {
                let (x, y) = ds.row(i);
                let z: f64 = x
                    .as_slice()
                    .iter()
                    .zip(&w[..d])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + w[d];
                u8::from(z >= 0.0) == y
            })
            .count();
        assert_eq!(correct, ds.len(), "oracle fit left misclassified rows");
    }

    #[test]
    fn synthetic_generation_is_reproducible() {
        let spec = SyntheticSpec::new(500, 6, 0.4, 0.5, 0.1).unwrap();
        let a: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(11, 0)).unwrap();
        let b: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(11, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iid_partition_splits_evenly() {
        let spec = SyntheticSpec::new(100, 3, 0.5, 0.5, 0.0).unwrap();
        let ds: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(5, 0)).unwrap();
        let pspec = PartitionSpec::new(2, PartitionMode::Iid, 1.0, 0.0).unwrap();
        let nodes = partition(&ds, &pspec, &mut seeded_rng(5, 1)).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].train.len(), 50);
        assert_eq!(nodes[1].train.len(), 50);
        assert!(nodes[0].holdout.is_empty());
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        // Unique single-feature rows let the union be checked as a multiset.
        let n = 103;
        let features: Vec<RealVector<f64>> =
            (0..n).map(|i| RealVector::new(vec![i as f64])).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let ds = LabeledDataset::new(features, labels, vec!["f0".into()]).unwrap();

        for mode in [PartitionMode::Iid, PartitionMode::LabelSkew] {
            let pspec = PartitionSpec::new(5, mode, 0.5, 0.25).unwrap();
            let nodes = partition(&ds, &pspec, &mut seeded_rng(17, 0)).unwrap();
            let mut seen: Vec<i64> = Vec::new();
            for node in &nodes {
                for part in [&node.train, &node.holdout] {
                    for i in 0..part.len() {
                        seen.push(part.row(i).0[0] as i64);
                    }
                }
            }
            seen.sort_unstable();
            assert_eq!(seen, (0..n as i64).collect::<Vec<_>>(), "mode {mode:?}");
        }
    }

    #[test]
    fn holdout_fraction_carves_from_each_share() {
        let spec = SyntheticSpec::new(1_000, 4, 0.5, 0.5, 0.0).unwrap();
        let ds: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(3, 0)).unwrap();
        let pspec = PartitionSpec::new(4, PartitionMode::Iid, 1.0, 0.2).unwrap();
        let nodes = partition(&ds, &pspec, &mut seeded_rng(3, 1)).unwrap();
        for node in &nodes {
            assert_eq!(node.train.len(), 200);
            assert_eq!(node.holdout.len(), 50);
        }
    }

    #[test]
    fn high_concentration_label_skew_approximates_iid_mixtures() {
        // At concentration 100 the per-node rate spread is ~0.023 absolute
        // for this fixed seed; the 0.05 bound is roughly 1.5 sigma of the
        // Dirichlet rate distribution, so the seed is part of the check.
        let check = |seed: u64, concentration: f64, bound: f64| {
            let spec = SyntheticSpec::new(10_000, 4, 0.5, 0.5, 0.0).unwrap();
            let ds: LabeledDataset<f64> =
                generate_synthetic(&spec, &mut seeded_rng(seed, 0)).unwrap();
            let global = ds.positive_fraction();
            let pspec =
                PartitionSpec::new(10, PartitionMode::LabelSkew, concentration, 0.0).unwrap();
            let nodes = partition(&ds, &pspec, &mut seeded_rng(seed, 1)).unwrap();
            for (i, node) in nodes.iter().enumerate() {
                let local = node.train.positive_fraction();
                assert!(
                    (local - global).abs() <= bound,
                    "node {i} at concentration {concentration}: \
                     positive rate {local} vs global {global}"
                );
            }
        };
        check(12, 100.0, 0.05);
        // Far into the concentration limit the bound is ~6 sigma and holds
        // for generic seeds, so a misrouted concentration parameter fails.
        for seed in [1, 2, 3] {
            check(seed, 10_000.0, 0.02);
        }
    }

    #[test]
    fn low_concentration_label_skew_is_actually_skewed() {
        let spec = SyntheticSpec::new(10_000, 4, 0.5, 0.5, 0.0).unwrap();
        let ds: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(29, 0)).unwrap();
        let pspec = PartitionSpec::new(10, PartitionMode::LabelSkew, 0.1, 0.0).unwrap();
        let nodes = partition(&ds, &pspec, &mut seeded_rng(29, 1)).unwrap();
        let spread = nodes
            .iter()
            .filter(|n| !n.train.is_empty())
            .map(|n| n.train.positive_fraction());
        let max = spread.clone().fold(0.0f64, f64::max);
        let min = spread.fold(1.0f64, f64::min);
        assert!(
            max - min > 0.2,
            "expected visible skew, got positive rates in [{min}, {max}]"
        );
    }

    #[test]
    fn partition_rejects_more_nodes_than_rows() {
        let features = vec![RealVector::new(vec![1.0f64]); 3];
        let ds = LabeledDataset::new(features, vec![0, 1, 0], vec!["f0".into()]).unwrap();
        let pspec = PartitionSpec::new(4, PartitionMode::Iid, 1.0, 0.0).unwrap();
        assert!(partition(&ds, &pspec, &mut seeded_rng(0, 0)).is_err());
    }

    #[test]
    fn partition_is_reproducible() {
        let spec = SyntheticSpec::new(400, 3, 0.5, 0.5, 0.0).unwrap();
        let ds: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(31, 0)).unwrap();
        let pspec = PartitionSpec::new(7, PartitionMode::LabelSkew, 0.7, 0.1).unwrap();
        let a = partition(&ds, &pspec, &mut seeded_rng(31, 1)).unwrap();
        let b = partition(&ds, &pspec, &mut seeded_rng(31, 1)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.train, y.train);
            assert_eq!(x.holdout, y.holdout);
        }
    }

    #[test]
    fn test_split_carves_requested_fraction() {
        let spec = SyntheticSpec::new(1_000, 3, 0.5, 0.5, 0.0).unwrap();
        let ds: LabeledDataset<f64> =
            generate_synthetic(&spec, &mut seeded_rng(37, 0)).unwrap();
        let (test, rest) = split_test(&ds, 0.2, &mut seeded_rng(37, 1)).unwrap();
        assert_eq!(test.len(), 200);
        assert_eq!(rest.len(), 800);
    }
}
