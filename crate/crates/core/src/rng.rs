//! Seeded random streams with reproducible, scheduler-independent draws.
//!
//! Every randomized operation derives its own [`RngStream`] from the pair
//! `(master_seed, stream_index)`. Work items own disjoint stream indices, so
//! a batch replays bit-identically no matter how many workers execute it or
//! in what order.
//!
//! Draw costs are fixed and documented: a uniform consumes one generator
//! step, a Gaussian consumes two uniforms (redrawing the first on an exact
//! zero), and a Beta sample consumes two uniforms per acceptance attempt.

use thiserror::Error;

/// Weyl increment shared by stream derivation and the splitmix64 expander.
const GOLDEN_GAMMA: u64 = 0x9E3779B97F4A7C15;

/// Errors raised by the distribution samplers.
#[derive(Debug, Error, PartialEq)]
pub enum RngError {
    #[error("sigma must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// A xoshiro256** generator seeded from `(master_seed, stream_index)`.
///
/// The four state words come from iterating splitmix64 over
/// `master_seed ^ stream_index * GOLDEN_GAMMA`, so distinct stream indices
/// yield statistically independent sequences from the same master seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    state: [u64; 4],
}

impl RngStream {
    /// Derives the stream for one work item.
    pub fn derive(master_seed: u64, stream_index: u64) -> Self {
        let mut expander = master_seed ^ stream_index.wrapping_mul(GOLDEN_GAMMA);
        let state = [
            splitmix64(&mut expander),
            splitmix64(&mut expander),
            splitmix64(&mut expander),
            splitmix64(&mut expander),
        ];
        Self { state }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Gaussian draw via the Box-Muller transform.
    ///
    /// Uses `mean + sigma * sqrt(-2 ln u1) * cos(2 pi u2)` with `u1` redrawn
    /// on an exact zero. `sigma == 0` returns `mean` exactly while still
    /// consuming both uniforms, keeping replay offsets fixed.
    pub fn sample_gaussian(&mut self, mean: f64, sigma: f64) -> Result<f64, RngError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(RngError::InvalidSigma(sigma));
        }
        let mut u1 = self.next_uniform();
        while u1 == 0.0 {
            u1 = self.next_uniform();
        }
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        Ok(mean + sigma * radius * (std::f64::consts::TAU * u2).cos())
    }

    /// Symmetric Beta(alpha, alpha) draw via Johnk's algorithm.
    ///
    /// Each attempt raises two uniforms to the power `1/alpha` and accepts
    /// when `x + y` lands in `(0, 1]`, returning `x / (x + y)`. Acceptance
    /// stays above one half for every `alpha` in `(0, 1]`.
    pub fn sample_beta(&mut self, alpha: f64) -> Result<f64, RngError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(RngError::InvalidAlpha(alpha));
        }
        let exponent = 1.0 / alpha;
        loop {
            let x = self.next_uniform().powf(exponent);
            let y = self.next_uniform().powf(exponent);
            let sum = x + y;
            if sum > 0.0 && sum <= 1.0 {
                return Ok(x / sum);
            }
        }
    }
}

/// Mixing configuration: Beta concentration plus an optional pinned lambda.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixupParams {
    alpha: f64,
    lambda: Option<f64>,
}

impl MixupParams {
    /// Validates `alpha` in `(0, 1]`.
    pub fn new(alpha: f64) -> Result<Self, RngError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(RngError::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha,
            lambda: None,
        })
    }

    /// Pins the blend weight instead of sampling it.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, RngError> {
        if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
            return Err(RngError::InvalidLambda(lambda));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// The pinned lambda if present, otherwise a fresh Beta draw.
    pub fn resolve_lambda(&self, stream: &mut RngStream) -> f64 {
        match self.lambda {
            Some(lambda) => lambda,
            None => stream
                .sample_beta(self.alpha)
                .expect("alpha validated at construction"),
        }
    }
}

impl Default for MixupParams {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            lambda: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_index_replays_exactly() {
        let mut a = RngStream::derive(42, 3);
        let mut b = RngStream::derive(42, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn adjacent_stream_indices_diverge() {
        let mut a = RngStream::derive(42, 0);
        let mut b = RngStream::derive(42, 1);
        let diverged = (0..1000).any(|_| a.next_uniform() != b.next_uniform());
        assert!(diverged);
    }

    #[test]
    fn uniforms_live_in_unit_interval_with_centered_mean() {
        let mut stream = RngStream::derive(42, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = stream.next_uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((0.498..=0.502).contains(&mean), "mean {mean}");
    }

    #[test]
    fn gaussian_with_zero_sigma_is_exactly_mean() {
        let mut stream = RngStream::derive(42, 0);
        for _ in 0..100 {
            assert_eq!(stream.sample_gaussian(12.25, 0.0).unwrap(), 12.25);
        }
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        let mut stream = RngStream::derive(42, 0);
        assert_eq!(
            stream.sample_gaussian(0.0, -1.0),
            Err(RngError::InvalidSigma(-1.0))
        );
        assert!(stream.sample_gaussian(0.0, f64::NAN).is_err());
    }

    #[test]
    fn gaussian_moments_match_parameters() {
        let mut stream = RngStream::derive(42, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| stream.sample_gaussian(0.0, 10.0).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        let skew = draws.iter().map(|d| ((d - mean) / std).powi(3)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.2, "mean {mean}");
        assert!((9.8..=10.2).contains(&std), "std {std}");
        assert!(skew.abs() < 0.05, "skew {skew}");
    }

    #[test]
    fn gaussian_consumes_two_uniforms() {
        let mut sampled = RngStream::derive(9, 1);
        let mut stepped = RngStream::derive(9, 1);
        sampled.sample_gaussian(0.0, 1.0).unwrap();
        stepped.next_uniform();
        stepped.next_uniform();
        assert_eq!(sampled, stepped);
    }

    #[test]
    fn beta_rejects_bad_alpha() {
        let mut stream = RngStream::derive(42, 0);
        assert_eq!(stream.sample_beta(0.0), Err(RngError::InvalidAlpha(0.0)));
        assert_eq!(stream.sample_beta(1.5), Err(RngError::InvalidAlpha(1.5)));
        assert!(stream.sample_beta(f64::NAN).is_err());
    }

    #[test]
    fn beta_draws_stay_in_unit_interval() {
        let mut stream = RngStream::derive(42, 0);
        for _ in 0..10_000 {
            let lambda = stream.sample_beta(0.4).unwrap();
            assert!((0.0..=1.0).contains(&lambda));
        }
    }

    #[test]
    fn beta_moments_match_symmetric_distribution() {
        // Beta(a, a) has mean 1/2 and variance a^2 / ((2a)^2 (2a + 1)),
        // which is 0.1388' at a = 0.4.
        let mut stream = RngStream::derive(42, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| stream.sample_beta(0.4).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
        assert!((var - 0.13889).abs() <= 0.01, "var {var}");
    }

    #[test]
    fn beta_rejection_rate_is_modest() {
        let mut probe = RngStream::derive(42, 5);
        let mut accepted = 0u64;
        let mut attempts = 0u64;
        let exponent = 1.0 / 0.4;
        while attempts < 1_000_000 {
            let x = probe.next_uniform().powf(exponent);
            let y = probe.next_uniform().powf(exponent);
            attempts += 1;
            let sum = x + y;
            if sum > 0.0 && sum <= 1.0 {
                accepted += 1;
            }
        }
        let mean_attempts = attempts as f64 / accepted as f64;
        assert!(mean_attempts < 3.0, "mean attempts {mean_attempts}");
    }

    #[test]
    fn mixup_params_validation() {
        assert!(MixupParams::new(0.4).is_ok());
        assert!(MixupParams::new(0.0).is_err());
        assert!(MixupParams::new(1.2).is_err());
        assert!(MixupParams::new(0.4).unwrap().with_lambda(0.5).is_ok());
        assert_eq!(
            MixupParams::new(0.4).unwrap().with_lambda(1.5).unwrap_err(),
            RngError::InvalidLambda(1.5)
        );
    }

    #[test]
    fn pinned_lambda_bypasses_sampling() {
        let params = MixupParams::new(0.4).unwrap().with_lambda(0.25).unwrap();
        let mut stream = RngStream::derive(1, 0);
        let untouched = stream.clone();
        assert_eq!(params.resolve_lambda(&mut stream), 0.25);
        assert_eq!(stream, untouched);
    }
}
