//! Categorical distributions over bin indices, exact Gumbel-max sampling,
//! and the Concrete (temperature-relaxed) sampler used during training.
//!
//! Rates are computed internally in nats and reported in bits.

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::util::{argmax, ln_factorial, log_softmax_slice, log_sum_exp};
use rand::Rng;

/// Clamp applied to the uniform variate inside Gumbel generation so the
/// double logarithm never produces infinities.
const UNIFORM_CLAMP: f64 = 1e-12;

/// Unnormalized log-probabilities over `K` bin indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalHead {
    logits: Vec<f64>,
}

impl CategoricalHead {
    pub fn new(logits: Vec<f64>) -> Self {
        assert!(!logits.is_empty(), "categorical head needs K >= 1");
        CategoricalHead { logits }
    }

    pub fn k(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Normalized probabilities; stable under any uniform logit shift.
    pub fn probs(&self) -> Vec<f64> {
        log_softmax_slice(&self.logits).iter().map(|l| l.exp()).collect()
    }

    pub fn log_probs(&self) -> Vec<f64> {
        log_softmax_slice(&self.logits)
    }

    /// Deterministic encoding: argmax over logits, ties toward lowest index.
    pub fn mode(&self) -> usize {
        argmax(&self.logits)
    }

    /// Exact categorical draw via argmax of logits plus i.i.d. standard
    /// Gumbel noise.
    pub fn gumbel_max_sample<R: Rng>(&self, rng: &mut R) -> usize {
        let noise = standard_gumbel_vec(rng, self.k());
        argmax_with_noise(&self.logits, &noise)
    }

    /// Relaxed draw at the given temperature; errors when `temperature <= 0`.
    pub fn concrete_sample<R: Rng>(&self, temperature: f64, rng: &mut R) -> Result<SoftSample> {
        if temperature <= 0.0 {
            return Err(Error::Config(format!(
                "concrete temperature must be positive, got {temperature}"
            )));
        }
        let noise = standard_gumbel_vec(rng, self.k());
        Ok(SoftSample::from_noise(&self.logits, &noise, temperature))
    }
}

/// One relaxed categorical sample: a point in the interior of the simplex.
#[derive(Debug, Clone)]
pub struct SoftSample {
    pub weights: Vec<f64>,
    pub temperature: f64,
}

impl SoftSample {
    /// softmax((logits + noise) / t), computed through log-space so extreme
    /// temperatures cannot overflow.
    pub fn from_noise(logits: &[f64], noise: &[f64], temperature: f64) -> Self {
        let scaled: Vec<f64> = logits
            .iter()
            .zip(noise)
            .map(|(a, g)| (a + g) / temperature)
            .collect();
        let weights = log_softmax_slice(&scaled).iter().map(|l| l.exp()).collect();
        SoftSample { weights, temperature }
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }
}

/// One standard Gumbel variate: `-ln(-ln V)` with `V` uniform, clamped away
/// from 0 and 1.
pub fn standard_gumbel<R: Rng>(rng: &mut R) -> f64 {
    let v: f64 = rng.random::<f64>().clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP);
    -(-v.ln()).ln()
}

pub fn standard_gumbel_vec<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| standard_gumbel(rng)).collect()
}

/// argmax_k(logits_k + noise_k); shared by the exact and relaxed samplers.
pub fn argmax_with_noise(logits: &[f64], noise: &[f64]) -> usize {
    let perturbed: Vec<f64> = logits.iter().zip(noise).map(|(a, g)| a + g).collect();
    argmax(&perturbed)
}

/// Log-density of the Concrete distribution with the given (unnormalized)
/// logits and temperature, evaluated at an interior simplex point.
///
/// `ln((K-1)!) + (K-1) ln t + sum_k [a_k - (t+1) ln u_k] - K lse_k(a_k - t ln u_k)`
pub fn concrete_log_density(logits: &[f64], weights: &[f64], temperature: f64) -> f64 {
    let k = logits.len();
    assert_eq!(weights.len(), k);
    let ln_u: Vec<f64> = weights.iter().map(|u| u.ln()).collect();
    concrete_log_density_from_log_weights(logits, &ln_u, temperature)
}

/// Same density with the sample supplied in log space (robust when some
/// weights have underflowed).
pub fn concrete_log_density_from_log_weights(
    logits: &[f64],
    ln_weights: &[f64],
    temperature: f64,
) -> f64 {
    let k = logits.len() as f64;
    let t = temperature;
    let shifted: Vec<f64> = logits
        .iter()
        .zip(ln_weights)
        .map(|(a, lu)| a - t * lu)
        .collect();
    let sum_logits: f64 = logits.iter().sum();
    let sum_ln_u: f64 = ln_weights.iter().sum();
    ln_factorial(logits.len() - 1) + (k - 1.0) * t.ln() + sum_logits - (t + 1.0) * sum_ln_u
        - k * log_sum_exp(&shifted)
}

/// Cross-entropy `-sum_k p_k log2 q_k` in bits. Returns `f64::INFINITY`
/// (the infinite-rate flag) when `q` has no mass where `p` does.
pub fn cross_entropy_bits(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if pk > 0.0 {
            if qk <= 0.0 {
                return f64::INFINITY;
            }
            acc -= pk * qk.log2();
        }
    }
    acc
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    cross_entropy_bits(p, p)
}

// ---------------------------------------------------------------------------
// Graph builders used by the training losses.
// ---------------------------------------------------------------------------

/// Build a batch of Concrete samples on the graph.
///
/// `logits` is `[K x B]`, `noise` a matching matrix of frozen standard Gumbel
/// draws (reparameterization: noise is a constant). Returns the soft sample
/// `u` and its logarithm, both `[K x B]`; `u = exp(log_softmax((logits+G)/t))`
/// so the two stay consistent even when entries underflow.
pub fn concrete_sample_node(
    g: &mut Graph,
    logits: NodeId,
    noise: &Matrix,
    temperature: f64,
) -> Result<(NodeId, NodeId)> {
    if temperature <= 0.0 {
        return Err(Error::Config(format!(
            "concrete temperature must be positive, got {temperature}"
        )));
    }
    let noise_node = g.constant(noise.clone());
    let shifted = g.add(logits, noise_node);
    let scaled = g.scale(shifted, 1.0 / temperature);
    let ln_u = g.log_softmax_cols(scaled)?;
    let u = g.exp(ln_u);
    Ok((u, ln_u))
}

/// Concrete log-density on the graph, one scalar per batch column.
///
/// `logits` and `ln_u` are `[K x B]`; the result is `[1 x B]`.
pub fn concrete_log_density_node(
    g: &mut Graph,
    logits: NodeId,
    ln_u: NodeId,
    temperature: f64,
) -> NodeId {
    let k = g.value(logits).rows();
    let t = temperature;
    let scaled_ln_u = g.scale(ln_u, -t);
    let shifted = g.add(logits, scaled_ln_u);
    let lse = g.log_sum_exp_rows(shifted);
    let sum_logits = g.sum_rows(logits);
    let sum_ln_u = g.sum_rows(ln_u);
    let t1 = g.scale(sum_ln_u, t + 1.0);
    let t2 = g.sub(sum_logits, t1);
    let t3 = g.scale(lse, k as f64);
    let t4 = g.sub(t2, t3);
    let constant = ln_factorial(k - 1) + (k as f64 - 1.0) * t.ln();
    g.add_scalar(t4, constant)
}
