//! The autoregressive attention model for outcome distributions.
//!
//! A decoder-only Transformer over the 4-symbol outcome alphabet plus a
//! start token. Position `i` reads the prefix through a causal mask and
//! emits a 4-way softmax for the next symbol, so the joint factorizes as
//! `p(a) = prod_i p(a_i | a_<i)` with exact log-likelihoods and exact
//! ancestral sampling.
//!
//! Architecture notes (all sizes configurable):
//! pre-layer normalization, sinusoidal positional encodings, ReLU
//! feed-forward blocks, no dropout. The output head starts at zero so a
//! freshly initialized model is exactly uniform over outcomes.
//!
//! Forward, backward and the training loop are hand-rolled on `f64`
//! ndarrays; gradients are exact reverse-mode derivatives (verified against
//! central finite differences in the test suite).

mod checkpoint;
mod net;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use train::{train, EpochRecord, TrainError, TrainOptions, TrainOutput};

use crate::error::{AqtError, Result};
use crate::povm::OutcomeDataset;
use crate::rng::{stream_rng, RNG_ALGORITHM};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

/// Outcome symbols per position.
pub const N_SYMBOLS: usize = 4;
/// Vocabulary: the four symbols plus the start token.
pub const VOCAB: usize = 5;
/// Token id of the start-of-sequence marker.
pub const START_TOKEN: usize = 4;

/// Hyperparameters of the autoregressive model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub n_layers: usize,
    pub embed_dim: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    /// Sequence length = number of qubits.
    pub max_len: usize,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl TransformerConfig {
    /// Small configuration for fast experiments: 2 layers, 64-dim embedding.
    pub fn desk(max_len: usize, seed: u64) -> Self {
        Self {
            n_layers: 2,
            embed_dim: 64,
            n_heads: 4,
            ff_dim: 256,
            max_len,
            seed,
        }
    }

    /// Full-size configuration: 6 layers, 256-dim embedding.
    pub fn paper_scale(max_len: usize, seed: u64) -> Self {
        Self {
            n_layers: 6,
            embed_dim: 256,
            n_heads: 4,
            ff_dim: 1024,
            max_len,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(AqtError::Validation("max_len must be >= 1".into()));
        }
        if self.n_layers == 0 || self.embed_dim == 0 || self.n_heads == 0 || self.ff_dim == 0 {
            return Err(AqtError::Validation(
                "n_layers, embed_dim, n_heads and ff_dim must be >= 1".into(),
            ));
        }
        if self.embed_dim % self.n_heads != 0 {
            return Err(AqtError::Validation(format!(
                "embed_dim {} not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            )));
        }
        Ok(())
    }

    pub(crate) fn head_dim(&self) -> usize {
        self.embed_dim / self.n_heads
    }
}

/// Per-layer normalization gain and bias.
#[derive(Clone, Debug)]
pub(crate) struct NormParams {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
}

impl NormParams {
    fn ones(dim: usize) -> Self {
        Self {
            gain: Array1::ones(dim),
            bias: Array1::zeros(dim),
        }
    }

    fn zeros(dim: usize) -> Self {
        Self {
            gain: Array1::zeros(dim),
            bias: Array1::zeros(dim),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LayerParams {
    pub attn_norm: NormParams,
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ff_norm: NormParams,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// All trainable tensors, in the fixed order used by checkpoints,
/// gradients and the optimizer:
///
/// `tok_embed`, then per layer `attn_norm.{gain,bias}`, `wq`, `bq`, `wk`,
/// `bk`, `wv`, `bv`, `wo`, `bo`, `ff_norm.{gain,bias}`, `w1`, `b1`, `w2`,
/// `b2`, then `final_norm.{gain,bias}`, `out_proj.{weight,bias}`.
#[derive(Clone, Debug)]
pub struct Parameters {
    pub(crate) tok_embed: Array2<f64>,
    pub(crate) layers: Vec<LayerParams>,
    pub(crate) final_norm: NormParams,
    pub(crate) out_weight: Array2<f64>,
    pub(crate) out_bias: Array1<f64>,
}

/// Gradients share the parameter layout exactly.
pub type Gradients = Parameters;

macro_rules! visit_tensors {
    ($self:expr, $push1:expr, $push2:expr) => {{
        $push2("tok_embed".to_string(), &$self.tok_embed);
        for (i, l) in $self.layers.iter().enumerate() {
            $push1(format!("layer{i}.attn_norm.gain"), &l.attn_norm.gain);
            $push1(format!("layer{i}.attn_norm.bias"), &l.attn_norm.bias);
            $push2(format!("layer{i}.wq"), &l.wq);
            $push1(format!("layer{i}.bq"), &l.bq);
            $push2(format!("layer{i}.wk"), &l.wk);
            $push1(format!("layer{i}.bk"), &l.bk);
            $push2(format!("layer{i}.wv"), &l.wv);
            $push1(format!("layer{i}.bv"), &l.bv);
            $push2(format!("layer{i}.wo"), &l.wo);
            $push1(format!("layer{i}.bo"), &l.bo);
            $push1(format!("layer{i}.ff_norm.gain"), &l.ff_norm.gain);
            $push1(format!("layer{i}.ff_norm.bias"), &l.ff_norm.bias);
            $push2(format!("layer{i}.w1"), &l.w1);
            $push1(format!("layer{i}.b1"), &l.b1);
            $push2(format!("layer{i}.w2"), &l.w2);
            $push1(format!("layer{i}.b2"), &l.b2);
        }
        $push1("final_norm.gain".to_string(), &$self.final_norm.gain);
        $push1("final_norm.bias".to_string(), &$self.final_norm.bias);
        $push2("out_proj.weight".to_string(), &$self.out_weight);
        $push1("out_proj.bias".to_string(), &$self.out_bias);
    }};
}

impl Parameters {
    pub(crate) fn zeros(config: &TransformerConfig) -> Self {
        let d = config.embed_dim;
        let ff = config.ff_dim;
        Self {
            tok_embed: Array2::zeros((VOCAB, d)),
            layers: (0..config.n_layers)
                .map(|_| LayerParams {
                    attn_norm: NormParams::zeros(d),
                    wq: Array2::zeros((d, d)),
                    bq: Array1::zeros(d),
                    wk: Array2::zeros((d, d)),
                    bk: Array1::zeros(d),
                    wv: Array2::zeros((d, d)),
                    bv: Array1::zeros(d),
                    wo: Array2::zeros((d, d)),
                    bo: Array1::zeros(d),
                    ff_norm: NormParams::zeros(d),
                    w1: Array2::zeros((d, ff)),
                    b1: Array1::zeros(ff),
                    w2: Array2::zeros((ff, d)),
                    b2: Array1::zeros(d),
                })
                .collect(),
            final_norm: NormParams::zeros(d),
            out_weight: Array2::zeros((d, N_SYMBOLS)),
            out_bias: Array1::zeros(N_SYMBOLS),
        }
    }

    /// Tensor names in the fixed traversal order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        visit_tensors!(
            self,
            |n: String, _t: &Array1<f64>| names.push(n),
            |n: String, _t: &Array2<f64>| names.push(n)
        );
        names
    }

    /// Tensor shapes in the fixed traversal order.
    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        visit_tensors!(
            self,
            |_n, t: &Array1<f64>| shapes.push(vec![t.len()]),
            |_n, t: &Array2<f64>| shapes.push(t.shape().to_vec())
        );
        shapes
    }

    /// Flat row-major views in the fixed traversal order.
    pub fn flat_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.push(self.tok_embed.as_slice().unwrap());
        for l in &self.layers {
            out.push(l.attn_norm.gain.as_slice().unwrap());
            out.push(l.attn_norm.bias.as_slice().unwrap());
            out.push(l.wq.as_slice().unwrap());
            out.push(l.bq.as_slice().unwrap());
            out.push(l.wk.as_slice().unwrap());
            out.push(l.bk.as_slice().unwrap());
            out.push(l.wv.as_slice().unwrap());
            out.push(l.bv.as_slice().unwrap());
            out.push(l.wo.as_slice().unwrap());
            out.push(l.bo.as_slice().unwrap());
            out.push(l.ff_norm.gain.as_slice().unwrap());
            out.push(l.ff_norm.bias.as_slice().unwrap());
            out.push(l.w1.as_slice().unwrap());
            out.push(l.b1.as_slice().unwrap());
            out.push(l.w2.as_slice().unwrap());
            out.push(l.b2.as_slice().unwrap());
        }
        out.push(self.final_norm.gain.as_slice().unwrap());
        out.push(self.final_norm.bias.as_slice().unwrap());
        out.push(self.out_weight.as_slice().unwrap());
        out.push(self.out_bias.as_slice().unwrap());
        out
    }

    /// Mutable flat views in the fixed traversal order.
    pub fn flat_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(self.tok_embed.as_slice_mut().unwrap());
        for l in self.layers.iter_mut() {
            out.push(l.attn_norm.gain.as_slice_mut().unwrap());
            out.push(l.attn_norm.bias.as_slice_mut().unwrap());
            out.push(l.wq.as_slice_mut().unwrap());
            out.push(l.bq.as_slice_mut().unwrap());
            out.push(l.wk.as_slice_mut().unwrap());
            out.push(l.bk.as_slice_mut().unwrap());
            out.push(l.wv.as_slice_mut().unwrap());
            out.push(l.bv.as_slice_mut().unwrap());
            out.push(l.wo.as_slice_mut().unwrap());
            out.push(l.bo.as_slice_mut().unwrap());
            out.push(l.ff_norm.gain.as_slice_mut().unwrap());
            out.push(l.ff_norm.bias.as_slice_mut().unwrap());
            out.push(l.w1.as_slice_mut().unwrap());
            out.push(l.b1.as_slice_mut().unwrap());
            out.push(l.w2.as_slice_mut().unwrap());
            out.push(l.b2.as_slice_mut().unwrap());
        }
        out.push(self.final_norm.gain.as_slice_mut().unwrap());
        out.push(self.final_norm.bias.as_slice_mut().unwrap());
        out.push(self.out_weight.as_slice_mut().unwrap());
        out.push(self.out_bias.as_slice_mut().unwrap());
        out
    }

    pub fn total_len(&self) -> usize {
        self.flat_slices().iter().map(|s| s.len()).sum()
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.flat_slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// The model: configuration, parameters and the fixed positional table.
#[derive(Clone, Debug)]
pub struct TransformerModel {
    config: TransformerConfig,
    pub(crate) params: Parameters,
    /// Sinusoidal positional encodings, `max_len x embed_dim`; not trained.
    pub(crate) pos_enc: Array2<f64>,
    /// Free-text description of the data the model was trained on.
    pub provenance: String,
    /// POVM the training outcomes were measured in.
    pub povm_name: String,
}

fn sinusoidal_positions(max_len: usize, dim: usize) -> Array2<f64> {
    let mut pe = Array2::zeros((max_len, dim));
    for t in 0..max_len {
        for i in 0..dim {
            let exponent = (2 * (i / 2)) as f64 / dim as f64;
            let angle = t as f64 / 10000f64.powf(exponent);
            pe[(t, i)] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}

impl TransformerModel {
    /// Initializes parameters from `config.seed`:
    /// token embeddings `N(0, 0.02^2)`, projection and feed-forward weights
    /// Xavier-uniform `U(+-sqrt(6/(fan_in+fan_out)))`, all biases zero,
    /// normalization gains one, and the output projection all zero so the
    /// initial conditionals are exactly uniform.
    pub fn init(config: TransformerConfig) -> Result<Self> {
        config.validate()?;
        let mut params = Parameters::zeros(&config);
        let mut rng = stream_rng(config.seed, 0);
        let normal = Normal::new(0.0, 0.02).unwrap();
        for x in params.tok_embed.iter_mut() {
            *x = normal.sample(&mut rng);
        }
        let xavier = |w: &mut Array2<f64>, rng: &mut rand_chacha::ChaCha12Rng| {
            let (fan_in, fan_out) = (w.nrows(), w.ncols());
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let u = Uniform::new(-s, s);
            for x in w.iter_mut() {
                *x = u.sample(rng);
            }
        };
        for l in params.layers.iter_mut() {
            l.attn_norm = NormParams::ones(config.embed_dim);
            xavier(&mut l.wq, &mut rng);
            xavier(&mut l.wk, &mut rng);
            xavier(&mut l.wv, &mut rng);
            xavier(&mut l.wo, &mut rng);
            l.ff_norm = NormParams::ones(config.embed_dim);
            xavier(&mut l.w1, &mut rng);
            xavier(&mut l.w2, &mut rng);
        }
        params.final_norm = NormParams::ones(config.embed_dim);
        // out_weight and out_bias stay zero
        let pos_enc = sinusoidal_positions(config.max_len, config.embed_dim);
        Ok(Self {
            config,
            params,
            pos_enc,
            provenance: "untrained".into(),
            povm_name: "pauli4".into(),
        })
    }

    pub(crate) fn from_parts(
        config: TransformerConfig,
        params: Parameters,
        provenance: String,
        povm_name: String,
    ) -> Self {
        let pos_enc = sinusoidal_positions(config.max_len, config.embed_dim);
        Self {
            config,
            params,
            pos_enc,
            provenance,
            povm_name,
        }
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    pub fn n_qubits(&self) -> usize {
        self.config.max_len
    }

    fn check_outcome(&self, a: &[u8]) -> Result<()> {
        if a.len() != self.config.max_len {
            return Err(AqtError::Shape(format!(
                "outcome has {} symbols, model expects {}",
                a.len(),
                self.config.max_len
            )));
        }
        if let Some(&bad) = a.iter().find(|&&s| s >= N_SYMBOLS as u8) {
            return Err(AqtError::Domain(format!("outcome symbol {bad} >= 4")));
        }
        Ok(())
    }

    /// Exact `ln p(a)`; always <= 0.
    pub fn log_prob(&self, a: &[u8]) -> Result<f64> {
        Ok(self.log_probs(std::slice::from_ref(&a.to_vec()))?[0])
    }

    /// Exact `ln p(a)` for a batch of outcome strings.
    pub fn log_probs(&self, batch: &[Vec<u8>]) -> Result<Vec<f64>> {
        for a in batch {
            self.check_outcome(a)?;
        }
        Ok(net::batch_log_probs(self, batch))
    }

    /// Exact `p(a)`.
    pub fn prob(&self, a: &[u8]) -> Result<f64> {
        Ok(self.log_prob(a)?.exp())
    }

    /// `p(a)` for every outcome string of length `max_len`, in
    /// lexicographic order. Capped at 8 qubits (4^n enumeration).
    pub fn all_outcome_probs(&self) -> Result<Vec<f64>> {
        let n = self.config.max_len;
        if n > 8 {
            return Err(AqtError::Capacity(format!(
                "enumerating 4^{n} outcomes exceeds the 8-qubit cap"
            )));
        }
        let total = 4usize.pow(n as u32);
        let mut strings = Vec::with_capacity(total);
        crate::povm::for_each_outcome(n, |a| strings.push(a.to_vec()));
        let mut probs = Vec::with_capacity(total);
        for chunk in strings.chunks(2048) {
            probs.extend(net::batch_log_probs(self, chunk).iter().map(|lp| lp.exp()));
        }
        Ok(probs)
    }

    /// Per-position conditional distributions `p(. | start, a_<i)` for the
    /// prefix structure of `a`: row `i` holds the four conditionals seen
    /// just before symbol `a_i` is produced.
    pub fn conditionals(&self, a: &[u8]) -> Result<Array2<f64>> {
        self.check_outcome(a)?;
        Ok(net::conditional_rows(self, a))
    }

    /// Ancestral sampling: `n` i.i.d. draws from the model.
    ///
    /// Draw `i` consumes its own ChaCha12 stream `(seed, i)`, so results do
    /// not depend on batching or thread partitioning.
    pub fn sample(&self, n: usize, seed: u64) -> Result<OutcomeDataset> {
        if n == 0 {
            return Err(AqtError::Validation("n must be >= 1".into()));
        }
        let outcomes = net::ancestral_sample(self, n, seed);
        Ok(OutcomeDataset {
            n_qubits: self.config.max_len,
            povm_name: self.povm_name.clone(),
            seed,
            source: format!("model-samples;rng={RNG_ALGORITHM}"),
            outcomes,
        })
    }

    /// Mean negative log-likelihood of the batch and its exact gradients.
    pub fn nll_and_gradients(&self, batch: &[Vec<u8>]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(AqtError::Validation("empty batch".into()));
        }
        for a in batch {
            self.check_outcome(a)?;
        }
        Ok(net::loss_and_gradients(self, batch))
    }

    /// Mean negative log-likelihood only (no gradients).
    pub fn nll(&self, batch: &[Vec<u8>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(AqtError::Validation("empty batch".into()));
        }
        let lps = self.log_probs(batch)?;
        Ok(net::mean_nll(lps))
    }
}

/// Draws a symbol from a 4-way distribution.
pub(crate) fn draw_symbol(probs: &[f64; N_SYMBOLS], rng: &mut impl Rng) -> u8 {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (s, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return s as u8;
        }
    }
    (N_SYMBOLS - 1) as u8
}
