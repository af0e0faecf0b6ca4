//! Correlated Gaussian pair generation and the closed-form quadratic-Gaussian
//! rate-distortion baselines the learned compressors are judged against.

use crate::error::{Error, Result};
use crate::util::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Which variable is the sum in the additive-noise pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationDirection {
    /// `X = Y + N` with `Y ~ N(0, base_variance)`, `N ~ N(0, noise_variance)`.
    XEqualsYPlusN,
    /// `Y = X + N` with `X ~ N(0, base_variance)`, `N ~ N(0, noise_variance)`.
    YEqualsXPlusN,
}

/// Parametric description of the correlated pair `(X, Y)`.
///
/// `X` is the source to compress, `Y` the side information available
/// losslessly at the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub direction: CorrelationDirection,
    pub base_variance: f64,
    pub noise_variance: f64,
}

impl SourceModel {
    pub fn new(direction: CorrelationDirection, base_variance: f64, noise_variance: f64) -> Result<Self> {
        if base_variance <= 0.0 || noise_variance <= 0.0 {
            return Err(Error::Config(format!(
                "source variances must be positive (base {base_variance}, noise {noise_variance})"
            )));
        }
        Ok(SourceModel { direction, base_variance, noise_variance })
    }

    /// Conditional variance of `X` given `Y`.
    pub fn conditional_variance(&self) -> f64 {
        match self.direction {
            CorrelationDirection::XEqualsYPlusN => self.noise_variance,
            CorrelationDirection::YEqualsXPlusN => {
                self.base_variance * self.noise_variance
                    / (self.base_variance + self.noise_variance)
            }
        }
    }

    pub fn var_x(&self) -> f64 {
        match self.direction {
            CorrelationDirection::XEqualsYPlusN => self.base_variance + self.noise_variance,
            CorrelationDirection::YEqualsXPlusN => self.base_variance,
        }
    }

    pub fn var_y(&self) -> f64 {
        match self.direction {
            CorrelationDirection::XEqualsYPlusN => self.base_variance,
            CorrelationDirection::YEqualsXPlusN => self.base_variance + self.noise_variance,
        }
    }

    /// Mean of `Y` given `X = x`.
    pub fn cond_mean_y_given_x(&self, x: f64) -> f64 {
        match self.direction {
            CorrelationDirection::XEqualsYPlusN => {
                x * self.base_variance / (self.base_variance + self.noise_variance)
            }
            CorrelationDirection::YEqualsXPlusN => x,
        }
    }

    /// Variance of `Y` given `X = x`.
    pub fn cond_var_y_given_x(&self) -> f64 {
        match self.direction {
            CorrelationDirection::XEqualsYPlusN => {
                self.base_variance * self.noise_variance
                    / (self.base_variance + self.noise_variance)
            }
            CorrelationDirection::YEqualsXPlusN => self.noise_variance,
        }
    }
}

/// A batch of i.i.d. `(x, y)` pairs with the seed that produced it.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Anything that can produce seeded i.i.d. `(x, y)` pairs. The training and
/// evaluation pipelines are written against the quadratic-Gaussian
/// [`SourceModel`] (whose baselines are closed-form), but other correlated
/// sources can implement this to reuse the samplers.
pub trait PairSource {
    fn sample_pairs(&self, count: usize, seed: u64) -> SampleBatch;
}

impl PairSource for SourceModel {
    fn sample_pairs(&self, count: usize, seed: u64) -> SampleBatch {
        sample_pairs(self, count, seed)
    }
}

/// Draw `count` i.i.d. pairs. The same `(model, count, seed)` always yields
/// the same batch.
pub fn sample_pairs(model: &SourceModel, count: usize, seed: u64) -> SampleBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5a31));
    let mut x = Vec::with_capacity(count);
    let mut y = Vec::with_capacity(count);
    let base_sd = model.base_variance.sqrt();
    let noise_sd = model.noise_variance.sqrt();
    for _ in 0..count {
        let b: f64 = StandardNormal.sample(&mut rng);
        let n: f64 = StandardNormal.sample(&mut rng);
        match model.direction {
            CorrelationDirection::XEqualsYPlusN => {
                let yv = base_sd * b;
                x.push(yv + noise_sd * n);
                y.push(yv);
            }
            CorrelationDirection::YEqualsXPlusN => {
                let xv = base_sd * b;
                x.push(xv);
                y.push(xv + noise_sd * n);
            }
        }
    }
    SampleBatch { x, y, seed }
}

/// Asymptotic Wyner-Ziv distortion at `rate_bits`, in dB:
/// `D = conditional_variance * 2^(-2R)`.
pub fn wz_rd_distortion_db(model: &SourceModel, rate_bits: f64) -> Result<f64> {
    if rate_bits < 0.0 {
        return Err(Error::Usage(format!("rate must be nonnegative, got {rate_bits}")));
    }
    let d = model.conditional_variance() * (-2.0 * rate_bits).exp2();
    Ok(10.0 * d.log10())
}

/// Point-to-point (no side information) distortion at `rate_bits`, in dB:
/// `D = Var(X) * 2^(-2R)`.
pub fn point_to_point_rd_db(model: &SourceModel, rate_bits: f64) -> f64 {
    let d = model.var_x() * (-2.0 * rate_bits).exp2();
    10.0 * d.log10()
}

/// The one-shot scalar space-filling penalty `10 log10(pi e / 6)`, about
/// 1.53 dB, added to the Wyner-Ziv curve to bound entropy-constrained
/// one-shot quantization.
pub fn space_filling_offset_db() -> f64 {
    10.0 * (std::f64::consts::PI * std::f64::consts::E / 6.0).log10()
}
