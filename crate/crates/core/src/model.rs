//! Local classifier: logistic regression with norm-clipped, noise-treated
//! gradient steps and a misclassification-based anomaly score.
//!
//! The bias term is folded into the weight vector as the last coordinate,
//! so a model over `d` features carries `d + 1` weights. Each local
//! training round applies, per minibatch step, clipping to a norm budget
//! followed by Gaussian perturbation scaled by that budget; with the noise
//! multiplier at zero the round degenerates to plain minibatch SGD.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{gaussian_sample, RealVector, StreamRng};
use crate::transport::UpdateEncoding;
use crate::Scalar;

/// Classifier weights; `dim() == feature_dim + 1` with the bias last.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights<S> {
    w: RealVector<S>,
}

impl<S: Scalar> ModelWeights<S> {
    /// Zero model over `feature_dim` features (allocates `feature_dim + 1`
    /// weights).
    pub fn zeros(feature_dim: usize) -> Self {
        Self {
            w: RealVector::zeros(feature_dim + 1),
        }
    }

    /// Wraps a full weight vector, bias included as the last coordinate.
    pub fn from_vector(w: RealVector<S>) -> Result<Self> {
        if w.dim() == 0 {
            return Err(Error::EmptyInput("weight vector"));
        }
        Ok(Self { w })
    }

    pub fn vector(&self) -> &RealVector<S> {
        &self.w
    }

    pub fn into_vector(self) -> RealVector<S> {
        self.w
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.w.dim() - 1
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite()
    }
}

/// Privacy treatment of each gradient step: clip to `clip_norm`, then add
/// N(0, (noise_scale * clip_norm)^2) per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig<S> {
    clip_norm: S,
    noise_scale: S,
}

impl<S: Scalar> DpConfig<S> {
    pub fn new(clip_norm: S, noise_scale: S) -> Result<Self> {
        if !(clip_norm > S::zero() && clip_norm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "clip norm must be positive, got {clip_norm}"
            )));
        }
        if !(noise_scale >= S::zero() && noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be nonnegative, got {noise_scale}"
            )));
        }
        Ok(Self {
            clip_norm,
            noise_scale,
        })
    }

    pub fn clip_norm(&self) -> S {
        self.clip_norm
    }

    pub fn noise_scale(&self) -> S {
        self.noise_scale
    }
}

/// Local optimizer settings for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<S> {
    pub learning_rate: S,
    pub local_epochs: usize,
    pub batch_size: usize,
}

impl<S: Scalar> TrainConfig<S> {
    pub fn new(learning_rate: S, local_epochs: usize, batch_size: usize) -> Result<Self> {
        if !(learning_rate > S::zero() && learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if local_epochs == 0 || batch_size == 0 {
            return Err(Error::InvalidParameter(
                "local epochs and batch size must be positive".into(),
            ));
        }
        Ok(Self {
            learning_rate,
            local_epochs,
            batch_size,
        })
    }
}

/// A node's contribution for one round, as received by the aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate<S> {
    pub node_id: u32,
    pub weights: ModelWeights<S>,
    pub anomaly_score: S,
    pub round_index: u32,
    pub payload: UpdateEncoding,
}

/// Result of one local training round, before any wire encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTrainOutcome<S> {
    pub weights: ModelWeights<S>,
    pub anomaly_score: S,
}

/// P(y = 1 | x): sigmoid of the affine score. The returned probability is
/// kept strictly inside (0, 1) even at saturating scores.
pub fn predict<S: Scalar>(weights: &ModelWeights<S>, features: &RealVector<S>) -> Result<S> {
    Ok(sigmoid(logit(weights, features)?))
}

fn logit<S: Scalar>(weights: &ModelWeights<S>, features: &RealVector<S>) -> Result<S> {
    let d = weights.feature_dim();
    if features.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: features.dim(),
        });
    }
    let w = weights.vector().as_slice();
    let mut z = w[d];
    for (wj, xj) in w[..d].iter().zip(features.as_slice()) {
        z = z + *wj * *xj;
    }
    Ok(z)
}

fn sigmoid<S: Scalar>(z: S) -> S {
    let one = S::one();
    let p = if z >= S::zero() {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    };
    let two = one + one;
    p.max(S::min_positive_value()).min(one - S::epsilon() / two)
}

/// Mean binary cross-entropy over `data`, evaluated in the numerically
/// stable logit form.
pub fn local_loss<S: Scalar>(weights: &ModelWeights<S>, data: &LabeledDataset<S>) -> Result<S> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut total = S::zero();
    for i in 0..data.len() {
        let (x, y) = data.row(i);
        let z = logit(weights, x)?;
        let y = S::from_u8(y).expect("binary label");
        // max(z, 0) - y*z + ln(1 + exp(-|z|))
        total = total + z.max(S::zero()) - y * z + (-z.abs()).exp().ln_1p();
    }
    Ok(total / S::from_usize(data.len()).expect("dataset length fits scalar"))
}

/// Mean gradient of the cross-entropy over a batch: `(p - y) * [x, 1]`
/// averaged across rows. Dimension equals the weight dimension.
pub fn loss_gradient<S: Scalar>(
    weights: &ModelWeights<S>,
    batch: &LabeledDataset<S>,
) -> Result<RealVector<S>> {
    let all: Vec<usize> = (0..batch.len()).collect();
    gradient_on(weights, batch, &all)
}

fn gradient_on<S: Scalar>(
    weights: &ModelWeights<S>,
    data: &LabeledDataset<S>,
    rows: &[usize],
) -> Result<RealVector<S>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("gradient batch"));
    }
    let d = weights.feature_dim();
    let mut grad = vec![S::zero(); d + 1];
    for &i in rows {
        let (x, y) = data.row(i);
        let p = predict(weights, x)?;
        let factor = p - S::from_u8(y).expect("binary label");
        for (g, xj) in grad[..d].iter_mut().zip(x.as_slice()) {
            *g = *g + factor * *xj;
        }
        grad[d] = grad[d] + factor;
    }
    let inv = S::one() / S::from_usize(rows.len()).expect("batch length fits scalar");
    for g in grad.iter_mut() {
        *g = *g * inv;
    }
    Ok(RealVector::new(grad))
}

/// Scales `gradient` by `1 / max(1, ||g|| / clip_norm)`. A gradient already
/// within the budget passes through unchanged, bit for bit.
pub fn clip_gradient<S: Scalar>(gradient: &RealVector<S>, clip_norm: S) -> RealVector<S> {
    debug_assert!(clip_norm > S::zero());
    let norm = gradient.l2_norm();
    if norm <= clip_norm {
        gradient.clone()
    } else {
        gradient.scale(clip_norm / norm)
    }
}

/// Adds N(0, (noise_scale * clip_norm)^2) noise per coordinate. A zero
/// noise scale returns the input untouched and consumes no randomness.
pub fn add_dp_noise<S: Scalar>(
    gradient: &RealVector<S>,
    dp: &DpConfig<S>,
    rng: &mut StreamRng,
) -> Result<RealVector<S>> {
    if dp.noise_scale == S::zero() {
        return Ok(gradient.clone());
    }
    let std = dp.noise_scale * dp.clip_norm;
    let noise = gaussian_sample(rng, S::zero(), std, gradient.dim())?;
    gradient.add(&noise)
}

/// Runs `local_epochs` of minibatch SGD from the shared model: each epoch
/// visits a fresh seeded shuffle of the training rows in batches of
/// `batch_size` (the last batch may be short), and every step applies
/// clip-then-noise before the update. Returns the trained weights together
/// with the anomaly score measured on `eval`.
pub fn local_training_round<S: Scalar>(
    train: &LabeledDataset<S>,
    eval: &LabeledDataset<S>,
    global: &ModelWeights<S>,
    train_cfg: &TrainConfig<S>,
    dp: &DpConfig<S>,
    threshold: S,
    rng: &mut StreamRng,
) -> Result<LocalTrainOutcome<S>> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    if global.feature_dim() != train.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: train.feature_dim() + 1,
            actual: global.dim(),
        });
    }
    let mut w = global.clone();
    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..train_cfg.local_epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(train_cfg.batch_size) {
            let grad = gradient_on(&w, train, batch)?;
            let clipped = clip_gradient(&grad, dp.clip_norm);
            let noised = add_dp_noise(&clipped, dp, rng)?;
            let next = w.vector().sub(&noised.scale(train_cfg.learning_rate))?;
            w = ModelWeights::from_vector(next)?;
        }
    }
    let anomaly_score = anomaly_score(&w, eval, threshold)?;
    Ok(LocalTrainOutcome {
        weights: w,
        anomaly_score,
    })
}

/// One minus classification accuracy on `eval` at the given probability
/// threshold; a score equal to the threshold classifies positive.
pub fn anomaly_score<S: Scalar>(
    weights: &ModelWeights<S>,
    eval: &LabeledDataset<S>,
    threshold: S,
) -> Result<S> {
    if eval.is_empty() {
        return Err(Error::EmptyInput("evaluation split"));
    }
    if !(threshold > S::zero() && threshold < S::one()) {
        return Err(Error::InvalidParameter(format!(
            "classification threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let mut correct = 0usize;
    for i in 0..eval.len() {
        let (x, y) = eval.row(i);
        let predicted = u8::from(predict(weights, x)? >= threshold);
        if predicted == y {
            correct += 1;
        }
    }
    let accuracy = S::from_usize(correct).expect("count fits scalar")
        / S::from_usize(eval.len()).expect("count fits scalar");
    Ok(S::one() - accuracy)
}
