//! Deterministic numeric primitives: dense real vectors and seeded,
//! splittable random streams. Every stochastic component in the simulator
//! draws from a [`StreamRng`] keyed by `(seed, stream_id)`, so runs are
//! bit-reproducible regardless of scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::Scalar;

/// Dense vector of scalars. Arithmetic validates dimensions and reports
/// mismatches as errors; no public operation introduces NaN or infinity
/// from finite inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> RealVector<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![S::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.values.iter()
    }

    /// True when every entry is a finite real.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Self) -> Result<S> {
        self.check_dim(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (a, b)| acc + *a * *b))
    }

    /// Euclidean norm; zero exactly when the vector is zero. Scaled by the
    /// largest magnitude so squaring cannot underflow tiny entries to zero
    /// or overflow large ones.
    pub fn l2_norm(&self) -> S {
        let max = self
            .values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()));
        if max == S::zero() {
            return S::zero();
        }
        let sum = self.values.iter().fold(S::zero(), |acc, v| {
            let scaled = *v / max;
            acc + scaled * scaled
        });
        max * sum.sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a + *b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a - *b)
                .collect(),
        ))
    }

    pub fn scale(&self, factor: S) -> Self {
        Self::new(self.values.iter().map(|v| *v * factor).collect())
    }

    /// Widened copy for canonical encoding and accounting.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.as_f64()).collect()
    }

    pub fn from_f64_slice(values: &[f64]) -> Self {
        Self::new(values.iter().map(|v| S::from_f64_lossy(*v)).collect())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }
}

impl<S: Scalar> std::ops::Index<usize> for RealVector<S> {
    type Output = S;
    fn index(&self, index: usize) -> &S {
        &self.values[index]
    }
}

/// Deterministic random stream. Distinct `(seed, stream_id)` pairs yield
/// independent sequences; the same pair always replays the same sequence.
///
/// Backed by the ChaCha12 block cipher in counter mode, which is a
/// splittable counter-based generator with platform-independent output.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha12Rng,
}

/// Opens the stream identified by `(seed, stream_id)`.
pub fn seeded_rng(seed: u64, stream_id: u64) -> StreamRng {
    let mut inner = ChaCha12Rng::seed_from_u64(seed);
    inner.set_stream(stream_id);
    StreamRng { inner }
}

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform draw in `[0, n)` via Lemire's multiply-reject method.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires a positive bound");
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}

// Interop with distribution crates used for partition plumbing.
impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// Draws `dim` independent N(mean, std^2) samples.
///
/// Uses the Marsaglia polar transform (an exact rejection method, not a
/// table-driven approximation). A zero std returns the constant mean vector
/// without consuming any draws; a negative std is an error.
pub fn gaussian_sample<S: Scalar>(
    rng: &mut StreamRng,
    mean: S,
    std: S,
    dim: usize,
) -> Result<RealVector<S>> {
    if std < S::zero() {
        return Err(Error::InvalidParameter(format!(
            "gaussian std must be nonnegative, got {std}"
        )));
    }
    if std == S::zero() {
        return Ok(RealVector::new(vec![mean; dim]));
    }
    let mut values = Vec::with_capacity(dim);
    while values.len() < dim {
        let (z0, z1) = polar_pair(rng);
        values.push(mean + std * S::from_f64_lossy(z0));
        if values.len() < dim {
            values.push(mean + std * S::from_f64_lossy(z1));
        }
    }
    Ok(RealVector::new(values))
}

/// One accepted polar-method pair of independent standard normals.
fn polar_pair(rng: &mut StreamRng) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.next_f64() - 1.0;
        let v = 2.0 * rng.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let m = (-2.0 * s.ln() / s).sqrt();
            return (u * m, v * m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_replays_identically() {
        let mut a = seeded_rng(42, 7);
        let mut b = seeded_rng(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_diverge_quickly() {
        let mut a = seeded_rng(42, 0);
        let mut b = seeded_rng(42, 1);
        let differs = (0..16).any(|_| a.next_u64() != b.next_u64());
        assert!(differs, "streams 0 and 1 of seed 42 agree on 16 draws");
    }

    #[test]
    fn zero_seed_is_a_valid_distinct_stream() {
        let mut z = seeded_rng(0, 0);
        let mut one = seeded_rng(1, 0);
        let z_draws: Vec<u64> = (0..16).map(|_| z.next_u64()).collect();
        let one_draws: Vec<u64> = (0..16).map(|_| one.next_u64()).collect();
        assert_ne!(z_draws, one_draws);
    }

    #[test]
    fn uniform_draws_stay_in_unit_interval() {
        let mut rng = seeded_rng(3, 3);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn bounded_draws_respect_bound() {
        let mut rng = seeded_rng(5, 0);
        for n in [1u64, 2, 3, 7, 100] {
            for _ in 0..200 {
                assert!(rng.next_below(n) < n);
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = seeded_rng(9, 0);
        let mut items: Vec<u32> = (0..100).collect();
        rng.shuffle(&mut items);
        let mut sorted = items.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<u32>>());
    }

    #[test]
    fn gaussian_zero_std_returns_constant_mean() {
        let mut rng = seeded_rng(42, 0);
        let before = rng.clone().next_u64();
        let v: RealVector<f64> = gaussian_sample(&mut rng, 1.5, 0.0, 3).unwrap();
        assert_eq!(v.as_slice(), &[1.5, 1.5, 1.5]);
        // No draws consumed.
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn gaussian_negative_std_is_an_error() {
        let mut rng = seeded_rng(42, 0);
        let res: Result<RealVector<f64>> = gaussian_sample(&mut rng, 0.0, -1.0, 4);
        assert!(matches!(res, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn gaussian_moments_match_target_distribution() {
        // Statistical oracle at fixed seed; bounds hold for any correct
        // sampler at n = 1e5 (|mean| bound is ~6 standard errors, the
        // variance window is ~11). An independent ziggurat-based sampler
        // cross-checks that the bounds themselves are attainable.
        let n = 100_000;
        let check = |samples: &[f64], label: &str| {
            let mean: f64 = samples.iter().sum::<f64>() / n as f64;
            let var: f64 =
                samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 0.02, "{label}: sample mean {mean} off 0");
            assert!(
                (0.95..1.05).contains(&var),
                "{label}: sample variance {var} off 1"
            );
        };

        let mut rng = seeded_rng(1234, 0);
        let ours: RealVector<f64> = gaussian_sample(&mut rng, 0.0, 1.0, n).unwrap();
        check(ours.as_slice(), "polar sampler");

        use rand_distr::Distribution;
        let reference = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let mut ref_rng = seeded_rng(1234, 1);
        let ref_samples: Vec<f64> = (0..n).map(|_| reference.sample(&mut ref_rng)).collect();
        check(&ref_samples, "reference sampler");
    }

    #[test]
    fn gaussian_streams_are_reproducible() {
        let mut a = seeded_rng(7, 11);
        let mut b = seeded_rng(7, 11);
        let va: RealVector<f64> = gaussian_sample(&mut a, 0.0, 2.0, 33).unwrap();
        let vb: RealVector<f64> = gaussian_sample(&mut b, 0.0, 2.0, 33).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn l2_norm_of_three_four_is_five() {
        let v = RealVector::new(vec![3.0f64, 4.0]);
        assert_eq!(v.l2_norm(), 5.0);
    }

    #[test]
    fn l2_norm_zero_iff_zero_vector() {
        let z: RealVector<f64> = RealVector::zeros(8);
        assert_eq!(z.l2_norm(), 0.0);
        let v = RealVector::new(vec![0.0, 1e-300, 0.0]);
        assert!(v.l2_norm() > 0.0);
    }

    #[test]
    fn l2_norm_matches_naive_loop() {
        let mut rng = seeded_rng(21, 0);
        for _ in 0..50 {
            let dim = 1 + rng.next_below(64) as usize;
            let values: Vec<f64> = (0..dim).map(|_| 20.0 * rng.next_f64() - 10.0).collect();
            let mut acc = 0.0;
            for v in &values {
                acc += v * v;
            }
            let expected = acc.sqrt();
            let got = RealVector::new(values).l2_norm();
            let rel = (got - expected).abs() / expected.max(1e-300);
            assert!(rel <= 1e-12, "rel error {rel}");
        }
    }

    #[test]
    fn l2_norm_scales_homogeneously() {
        let mut rng = seeded_rng(22, 0);
        for _ in 0..200 {
            let dim = 1 + rng.next_below(32) as usize;
            let values: Vec<f64> = (0..dim).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
            let alpha = 200.0 * rng.next_f64() - 100.0;
            let v = RealVector::new(values);
            let lhs = v.scale(alpha).l2_norm();
            let rhs = alpha.abs() * v.l2_norm();
            let rel = (lhs - rhs).abs() / rhs.abs().max(1e-300);
            assert!(rel <= 1e-12, "alpha {alpha}: rel error {rel}");
        }
    }

    #[test]
    fn vector_arithmetic_validates_dimensions() {
        let a: RealVector<f64> = RealVector::zeros(3);
        let b: RealVector<f64> = RealVector::zeros(4);
        assert!(matches!(
            a.dot(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.add(&b).is_err());
        assert!(a.sub(&b).is_err());
    }

    #[test]
    fn generic_core_accepts_single_precision() {
        let v: RealVector<f32> = RealVector::new(vec![3.0, 4.0]);
        assert_eq!(v.l2_norm(), 5.0f32);
        let mut rng = seeded_rng(2, 2);
        let g: RealVector<f32> = gaussian_sample(&mut rng, 0.0, 1.0, 5).unwrap();
        assert!(g.is_finite());
    }
}
