//! The learnable pieces of the compression system: encoder `p(u|x)`,
//! marginal prior `q(u)` or conditional model `q(u|y)`, and decoder
//! `g(u, y)`, plus a versioned binary checkpoint format.

use crate::autodiff::{Graph, NodeId, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::matrix::{matmul_acc, Matrix};
use crate::sources::SourceModel;
use crate::util::{derive_seed_labeled, log_softmax_slice};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Which model plays the role of `p(u|y)` in the rate term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// Free logits `q(u)`: the one-shot encoder plus classic entropy coder.
    Marginal,
    /// A network `q(u|y)`: quantizer plus ideal Slepian-Wolf coder.
    Conditional,
}

/// Static description of a trainable system. Stored verbatim in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of bin indices the encoder can emit.
    pub k: usize,
    /// Rate-distortion trade-off weight the system was (or will be) trained at.
    pub lambda: f64,
    pub prior_kind: PriorKind,
    /// Width of the two hidden layers in every network.
    pub hidden_units: usize,
    pub leaky_slope: f64,
    pub source: SourceModel,
    /// Seed used for initialization and training provenance.
    pub seed: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.hidden_units < 1 {
            return Err(Error::Config("hidden_units must be at least 1".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!(
                "leaky_slope must lie in (0, 1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }
}

/// Dense feed-forward network: leaky-ReLU activations after every layer
/// except the last.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    slope: f64,
    weights: Vec<ParamId>,
    biases: Vec<ParamId>,
}

impl Mlp {
    /// Register a new network in `store`. Weights are Glorot-uniform
    /// (`+-sqrt(6/(fan_in+fan_out))`), biases zero.
    pub fn new(store: &mut ParamStore, prefix: &str, dims: &[usize], slope: f64, seed: u64) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least one layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Matrix::zeros(fan_out, fan_in);
            for v in w.data_mut() {
                *v = rng.random_range(-bound..bound);
            }
            weights.push(store.register(&format!("{prefix}.w{l}"), w));
            biases.push(store.register(&format!("{prefix}.b{l}"), Matrix::zeros(fan_out, 1)));
        }
        Mlp { dims: dims.to_vec(), slope, weights, biases }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn param_count(&self) -> usize {
        self.dims
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Forward pass on the graph; input is `[dims[0] x B]`.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, input: NodeId) -> Result<NodeId> {
        let mut cur = input;
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wn = g.param(store, *w);
            let bn = g.param(store, *b);
            cur = g.dense(wn, bn, cur)?;
            if l < last {
                cur = g.leaky_relu(cur, self.slope);
            }
        }
        Ok(cur)
    }

    /// Plain forward pass without recording; used for evaluation.
    pub fn infer(&self, store: &ParamStore, input: &Matrix) -> Matrix {
        let mut cur = input.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wv = store.value(*w);
            let bv = store.value(*b);
            let mut out = Matrix::zeros(wv.rows(), cur.cols());
            for r in 0..wv.rows() {
                out.row_mut(r).fill(bv.get(r, 0));
            }
            matmul_acc(&mut out, wv, &cur);
            if l < last {
                for v in out.data_mut() {
                    if *v < 0.0 {
                        *v *= self.slope;
                    }
                }
            }
            cur = out;
        }
        cur
    }

    pub fn weight_ids(&self) -> &[ParamId] {
        &self.weights
    }

    pub fn bias_ids(&self) -> &[ParamId] {
        &self.biases
    }
}

/// The rate model: free logits or a conditional network.
#[derive(Debug, Clone)]
pub enum Prior {
    Marginal(ParamId),
    Conditional(Mlp),
}

/// A full trainable system.
#[derive(Debug, Clone)]
pub struct WzSystem {
    pub config: SystemConfig,
    pub(crate) store: ParamStore,
    pub(crate) encoder: Mlp,
    pub(crate) decoder: Mlp,
    pub(crate) prior: Prior,
}

impl WzSystem {
    /// Initialize a fresh system. Component initializations are seeded by
    /// label, so marginal and conditional systems built from the same seed
    /// share encoder and decoder initialization.
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_units;
        let k = config.k;
        let mut store = ParamStore::new();
        let encoder = Mlp::new(
            &mut store,
            "encoder",
            &[1, h, h, k],
            config.leaky_slope,
            derive_seed_labeled(config.seed, "encoder"),
        );
        let decoder = Mlp::new(
            &mut store,
            "decoder",
            &[k + 1, h, h, 1],
            config.leaky_slope,
            derive_seed_labeled(config.seed, "decoder"),
        );
        let prior = match config.prior_kind {
            PriorKind::Marginal => Prior::Marginal(store.register("prior.logits", Matrix::zeros(k, 1))),
            PriorKind::Conditional => Prior::Conditional(Mlp::new(
                &mut store,
                "prior",
                &[1, h, h, k],
                config.leaky_slope,
                derive_seed_labeled(config.seed, "prior"),
            )),
        };
        Ok(WzSystem { config, store, encoder, decoder, prior })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    /// Total learnable scalar count.
    pub fn param_count(&self) -> usize {
        self.store.scalar_count()
    }

    /// Encoder logits for one source value.
    pub fn encoder_logits(&self, x: f64) -> Vec<f64> {
        self.encoder_logits_batch(&[x]).column(0)
    }

    /// Encoder logits for a batch; output is `[K x B]`.
    pub fn encoder_logits_batch(&self, xs: &[f64]) -> Matrix {
        self.encoder.infer(&self.store, &Matrix::row_vector(xs))
    }

    /// Log-probabilities of the rate model. `y` must be supplied exactly
    /// when the prior is conditional.
    pub fn prior_log_probs(&self, y: Option<f64>) -> Result<Vec<f64>> {
        match (&self.prior, y) {
            (Prior::Marginal(pid), None) => {
                Ok(log_softmax_slice(&self.store.value(*pid).column(0)))
            }
            (Prior::Conditional(mlp), Some(yv)) => {
                let logits = mlp.infer(&self.store, &Matrix::scalar(yv));
                Ok(log_softmax_slice(&logits.column(0)))
            }
            (Prior::Marginal(_), Some(_)) => {
                Err(Error::Usage("marginal prior takes no side information".into()))
            }
            (Prior::Conditional(_), None) => {
                Err(Error::Usage("conditional prior requires side information".into()))
            }
        }
    }

    /// Conditional prior logits for a batch of side-information values.
    pub fn conditional_prior_logits_batch(&self, ys: &[f64]) -> Result<Matrix> {
        match &self.prior {
            Prior::Conditional(mlp) => Ok(mlp.infer(&self.store, &Matrix::row_vector(ys))),
            Prior::Marginal(_) => {
                Err(Error::Usage("marginal prior has no conditional logits".into()))
            }
        }
    }

    /// Marginal prior logits.
    pub fn marginal_prior_logits(&self) -> Result<Vec<f64>> {
        match &self.prior {
            Prior::Marginal(pid) => Ok(self.store.value(*pid).column(0)),
            Prior::Conditional(_) => {
                Err(Error::Usage("conditional prior has no marginal logits".into()))
            }
        }
    }

    /// Reconstruction from a `K`-vector `u` (soft or one-hot) and the side
    /// information.
    pub fn decode(&self, u_vec: &[f64], y: f64) -> f64 {
        assert_eq!(u_vec.len(), self.config.k, "u vector length");
        let mut input = Vec::with_capacity(self.config.k + 1);
        input.extend_from_slice(u_vec);
        input.push(y);
        self.decoder.infer(&self.store, &Matrix::col_vector(&input)).get(0, 0)
    }

    /// Batched decode: `u` is `[K x B]`, `ys` length `B`; returns the `B`
    /// reconstructions.
    pub fn decode_batch(&self, u: &Matrix, ys: &[f64]) -> Vec<f64> {
        assert_eq!(u.rows(), self.config.k);
        assert_eq!(u.cols(), ys.len());
        let mut data = Vec::with_capacity((u.rows() + 1) * u.cols());
        data.extend_from_slice(u.data());
        data.extend_from_slice(ys);
        let input = Matrix::from_vec(u.rows() + 1, u.cols(), data);
        self.decoder.infer(&self.store, &input).row(0).to_vec()
    }

    pub fn save_checkpoint<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(CHECKPOINT_VERSION);
        let header = serde_json::to_vec(&self.config)
            .map_err(|e| Error::Config(format!("config serialization failed: {e}")))?;
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.store.len() as u32).to_le_bytes());
        for pid in self.store.ids() {
            let name = self.store.name(pid).as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            let v = self.store.value(pid);
            out.extend_from_slice(&(v.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(v.cols() as u32).to_le_bytes());
            for x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&out)?;
        Ok(())
    }

    pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = CheckpointReader { bytes: &bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Corrupt("bad checkpoint magic".into()));
        }
        let version = r.take(1)?[0];
        if version != CHECKPOINT_VERSION {
            return Err(Error::Corrupt(format!("unsupported checkpoint version {version}")));
        }
        let header_len = r.u32()? as usize;
        let header = r.take(header_len)?;
        let config: SystemConfig = serde_json::from_slice(header)
            .map_err(|e| Error::Corrupt(format!("bad checkpoint header: {e}")))?;
        let mut system = WzSystem::new(config)?;
        let n_params = r.u32()? as usize;
        if n_params != system.store.len() {
            return Err(Error::Corrupt(format!(
                "checkpoint has {n_params} parameters, model expects {}",
                system.store.len()
            )));
        }
        for pid in system.store.ids().collect::<Vec<_>>() {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Corrupt("non-utf8 parameter name".into()))?
                .to_string();
            if name != system.store.name(pid) {
                return Err(Error::Corrupt(format!(
                    "parameter order mismatch: expected {}, found {name}",
                    system.store.name(pid)
                )));
            }
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let expect = system.store.value(pid);
            if rows != expect.rows() || cols != expect.cols() {
                return Err(Error::Corrupt(format!("parameter {name} shape mismatch")));
            }
            let mut m = Matrix::zeros(rows, cols);
            for i in 0..rows * cols {
                let chunk = r.take(8)?;
                m.data_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
            }
            *system.store.value_mut(pid) = m;
        }
        if r.pos != bytes.len() {
            return Err(Error::Corrupt("trailing bytes after checkpoint payload".into()));
        }
        Ok(system)
    }
}

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WZCK";
pub const CHECKPOINT_VERSION: u8 = 1;

struct CheckpointReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> CheckpointReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Corrupt("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Read an entire file of whitespace/line-separated floats.
pub fn read_sample_file<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let mut text = String::new();
    std::fs::File::open(&path)?.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (ln, tok) in text.split_whitespace().enumerate() {
        out.push(tok.parse::<f64>().map_err(|_| {
            Error::Corrupt(format!("bad float {tok:?} at entry {ln} in sample file"))
        })?);
    }
    Ok(out)
}

/// Write floats one per line with full round-trip precision.
pub fn write_sample_file<P: AsRef<Path>>(path: P, values: &[f64]) -> Result<()> {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
