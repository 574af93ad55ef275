//! Seeded randomness, Laplace sampling and tail bounds for sums of Laplace
//! variables.

use rand::distributions::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Errors raised by the noise primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    /// A Laplace scale was zero, negative or not finite.
    #[error("Laplace scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    /// A tail bound was requested for no variables.
    #[error("tail bound needs at least one scale")]
    EmptyList,
    /// A failure probability outside `(0, 1)`.
    #[error("failure probability must lie in (0, 1), got {0}")]
    BadDelta(f64),
}

/// Seeded random stream. Children with distinct labels get independent,
/// reproducible streams derived from the parent seed.
///
/// A source can be switched to noise-off mode, where every Laplace draw is
/// exactly zero. Outputs produced that way must be labelled as such; see
/// [`RandomSource::noise_is_off`].
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha12Rng,
    noise_off: bool,
}

impl RandomSource {
    /// Stream seeded with `seed`.
    pub fn from_seed(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
            noise_off: false,
        }
    }

    /// Stream seeded from operating-system entropy. The chosen seed is
    /// available through [`RandomSource::seed`] so runs can be replayed.
    pub fn from_entropy() -> Self {
        Self::from_seed(rand::rngs::OsRng.next_u64())
    }

    /// The seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for `label`, deterministic in
    /// `(seed, label)`. Children inherit noise-off mode.
    pub fn child(&self, label: &str) -> Self {
        let mut c = Self::from_seed(derive_seed(self.seed, label));
        c.noise_off = self.noise_off;
        c
    }

    /// Switches every subsequent Laplace draw to zero.
    pub fn with_noise_off(mut self) -> Self {
        self.noise_off = true;
        self
    }

    /// Whether Laplace draws are replaced by zero.
    pub fn noise_is_off(&self) -> bool {
        self.noise_off
    }

    /// Uniform draw from the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    /// One draw from `Lap(b)`, centred at zero.
    pub fn laplace(&mut self, b: f64) -> Result<f64, NoiseError> {
        sample_laplace(b, self)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Child seed for `(seed, label)`: FNV-1a over the label, mixed with the seed
/// through the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws from the Laplace distribution with density `exp(-|x|/b) / 2b` by
/// inverting the CDF at `u` uniform on `(-1/2, 1/2)`.
pub fn sample_laplace(b: f64, rng: &mut RandomSource) -> Result<f64, NoiseError> {
    if !(b.is_finite() && b > 0.0) {
        return Err(NoiseError::NonPositiveScale(b));
    }
    let u = rng.open01() - 0.5;
    if rng.noise_off {
        return Ok(0.0);
    }
    Ok(laplace_quantile(b, u))
}

/// Inverse CDF of `Lap(b)` written in terms of `u = p - 1/2`.
pub fn laplace_quantile(b: f64, u: f64) -> f64 {
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Tail bound for a sum of independent Laplace variables with the given
/// scales: with probability at least `1 - delta` the sum has absolute value
/// at most `nu * sqrt(8 ln(2/delta))`, where
/// `nu = sqrt(sum b_i^2) * sqrt(ln(2/delta))`.
pub fn concentration_bound(scales: &[f64], delta: f64) -> Result<f64, NoiseError> {
    if scales.is_empty() {
        return Err(NoiseError::EmptyList);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(NoiseError::BadDelta(delta));
    }
    if let Some(&b) = scales.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(NoiseError::NonPositiveScale(b));
    }
    let l = (2.0 / delta).ln();
    let nu = scales.iter().map(|b| b * b).sum::<f64>().sqrt() * l.sqrt();
    Ok(nu * (8.0 * l).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn concentration_bound_reference_values() {
        let d = 2.0 / std::f64::consts::E;
        assert_relative_eq!(concentration_bound(&[1.0], d).unwrap(), 8f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(
            concentration_bound(&[3.0, 4.0], d).unwrap(),
            5.0 * 8f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn concentration_bound_errors() {
        assert_eq!(concentration_bound(&[], 0.1), Err(NoiseError::EmptyList));
        assert_eq!(concentration_bound(&[1.0], 0.0), Err(NoiseError::BadDelta(0.0)));
        assert_eq!(concentration_bound(&[1.0], 1.0), Err(NoiseError::BadDelta(1.0)));
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut r = RandomSource::from_seed(1);
        assert_eq!(r.laplace(0.0), Err(NoiseError::NonPositiveScale(0.0)));
        assert!(r.laplace(-1.0).is_err());
        assert!(r.laplace(f64::NAN).is_err());
    }

    #[test]
    fn quantile_is_odd_and_matches_cdf() {
        for &u in &[0.1, 0.25, 0.4, 0.49] {
            let x = laplace_quantile(2.0, u);
            assert_relative_eq!(laplace_quantile(2.0, -u), -x, epsilon = 1e-12);
            let cdf = 1.0 - 0.5 * (-x / 2.0).exp();
            assert_relative_eq!(cdf, 0.5 + u, epsilon = 1e-12);
        }
    }

    #[test]
    fn children_are_deterministic_and_distinct() {
        let a = RandomSource::from_seed(7);
        assert_eq!(a.child("x").seed(), a.child("x").seed());
        assert_ne!(a.child("x").seed(), a.child("y").seed());
        assert_ne!(a.child("x").seed(), RandomSource::from_seed(8).child("x").seed());
    }

    #[test]
    fn noise_off_yields_zero() {
        let mut r = RandomSource::from_seed(3).with_noise_off();
        assert_eq!(r.laplace(5.0).unwrap(), 0.0);
        assert!(r.child("c").noise_is_off());
    }
}
